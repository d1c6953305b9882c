#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qiup/config.hpp"
#include "qiup/errors.hpp"
#include "qiup/imaging.hpp"
#include "qiup/version.hpp"

namespace qiup {

using ordered_json = nlohmann::ordered_json;

struct CsvColumn {
    std::string name;
    std::vector<double> values;
};

/// CSV with unit-annotated headers, '.' decimal separator, 9 significant digits.
inline std::string csv_table(const std::vector<CsvColumn>& columns) {
    if (columns.empty()) throw invalid_parameter("csv_table: no columns");
    const size_t rows = columns.front().values.size();
    for (const auto& c : columns)
        if (c.values.size() != rows) throw invalid_parameter("csv_table: ragged columns");
    std::string out;
    for (size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + columns[c].name;
    out += "\n";
    for (size_t r = 0; r < rows; ++r) {
        for (size_t c = 0; c < columns.size(); ++c)
            out += (c ? "," : "") + detail::format_g(columns[c].values[r], 9);
        out += "\n";
    }
    return out;
}

/// 16-bit binary PGM (P5), big-endian samples, row-major; input values in [0, 1].
inline std::string pgm16(int nx, int ny, const std::vector<double>& normalized) {
    if (normalized.size() != static_cast<size_t>(nx) * ny)
        throw invalid_parameter("pgm16: value count does not match raster size");
    std::string out = "P5\n" + std::to_string(nx) + " " + std::to_string(ny) + "\n65535\n";
    out.reserve(out.size() + normalized.size() * 2);
    for (double v : normalized) {
        if (!(v >= -1e-12) || !(v <= 1.0 + 1e-12))
            throw invalid_parameter("pgm16: values must be peak-normalized to [0, 1]");
        const auto s = static_cast<uint16_t>(std::lround(std::min(std::max(v, 0.0), 1.0) * 65535.0));
        out.push_back(static_cast<char>(s >> 8));
        out.push_back(static_cast<char>(s & 0xff));
    }
    return out;
}

/// Sampled-map text format: header `nx ny pitch_m origin_x_m origin_y_m`,
/// then nx*ny lines of `re im`, row-major (y rows, x fastest).
inline SampledMap read_sampled_map(std::istream& in) {
    SampledMap m;
    if (!(in >> m.nx >> m.ny >> m.pitch >> m.origin.x >> m.origin.y))
        throw config_error("sampled map: malformed header (want: nx ny pitch_m origin_x_m origin_y_m)");
    if (m.nx < 1 || m.ny < 1 || !(m.pitch > 0.0))
        throw config_error("sampled map: header values out of range");
    const size_t count = static_cast<size_t>(m.nx) * m.ny;
    m.samples.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        double re = 0.0, im = 0.0;
        if (!(in >> re >> im))
            throw config_error("sampled map: expected " + std::to_string(count) +
                               " samples, file ends at " + std::to_string(i));
        m.samples.emplace_back(re, im);
    }
    validate(SceneObject{m});
    return m;
}

inline SampledMap read_sampled_map_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open sampled map file '" + path + "'");
    return read_sampled_map(in);
}

inline std::string write_sampled_map(const SampledMap& m) {
    std::string out = std::to_string(m.nx) + " " + std::to_string(m.ny) + " " +
                      detail::format_g(m.pitch, 17) + " " + detail::format_g(m.origin.x, 17) + " " +
                      detail::format_g(m.origin.y, 17) + "\n";
    for (const auto& t : m.samples)
        out += detail::format_g(t.real(), 17) + " " + detail::format_g(t.imag(), 17) + "\n";
    return out;
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot open output file '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw config_error("failed to write output file '" + path + "'");
}

// --- JSON report pieces -----------------------------------------------------

inline ordered_json spdc_json(const SpdcParams& p) {
    ordered_json j;
    j["lambda_s_m"] = p.lambda_s;
    j["lambda_i_m"] = p.lambda_i;
    j["crystal_length_m"] = p.crystal_length;
    j["pump_waist_m"] = p.pump_waist;
    j["pump_wavelength_m"] = p.pump_wavelength();
    j["norm_full_per_m4"] = p.norm_full();
    return j;
}

inline ordered_json optics_json(const OpticsParams& o) {
    ordered_json j;
    j["m_s"] = o.m_s;
    j["m_i"] = o.m_i;
    j["phi_in_rad"] = o.phi_in;
    j["magnification"] = o.magnification();
    return j;
}

inline ordered_json camera_json(const CameraGrid& g) {
    ordered_json j;
    j["nx"] = g.nx;
    j["ny"] = g.ny;
    j["pitch_m"] = g.pitch;
    j["center_x_m"] = g.center.x;
    j["center_y_m"] = g.center.y;
    return j;
}

/// Report shell: every scalar output carries a unit string; field order is fixed.
struct Report {
    std::string command;
    ordered_json inputs = ordered_json::object();
    ordered_json outputs = ordered_json::object();
    std::vector<std::string> warnings;

    void add_output(const std::string& name, double value, const std::string& unit) {
        outputs[name] = ordered_json{{"value", value}, {"unit", unit}};
    }

    std::string to_string() const {
        ordered_json j;
        j["schema_version"] = kReportSchemaVersion;
        j["tool"] = kToolName;
        j["version"] = kVersion;
        j["command"] = command;
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        j["warnings"] = warnings;
        return j.dump(2) + "\n";
    }
};

} // namespace qiup
