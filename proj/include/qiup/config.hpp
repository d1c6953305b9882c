#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qiup/errors.hpp"
#include "qiup/imaging.hpp"
#include "qiup/spdc.hpp"

// Run configuration: flat `key = value` text with [section] blocks and unit
// suffixes on lengths. All lengths are normalized to meters on load; dumping
// writes SI values at full precision so load -> dump -> load is idempotent.

namespace qiup {

namespace detail {

inline std::string format_g(double v, int precision) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, precision);
    return std::string(buf, res.ptr);
}

inline std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_number(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
        throw config_error(what + ": cannot parse number from '" + t + "'");
    return v;
}

} // namespace detail

/// Parses "<number> <unit>" with unit in {m, mm, um, nm, pm}; the suffix is required.
inline double parse_length(const std::string& text, const std::string& what = "length") {
    const std::string t = detail::trim(text);
    const size_t sp = t.find_last_of(" \t");
    if (sp == std::string::npos)
        throw config_error(what + ": length needs a unit suffix (m, mm, um, nm, pm), got '" + t + "'");
    const std::string unit = detail::trim(t.substr(sp + 1));
    const double v = detail::parse_number(t.substr(0, sp), what);
    if (unit == "m") return v;
    if (unit == "mm") return v * 1e-3;
    if (unit == "um") return v * 1e-6;
    if (unit == "nm") return v * 1e-9;
    if (unit == "pm") return v * 1e-12;
    throw config_error(what + ": unknown length unit '" + unit + "'");
}

/// Parses an angle; bare numbers and the "rad" suffix are radians.
inline double parse_angle(const std::string& text, const std::string& what = "angle") {
    std::string t = detail::trim(text);
    if (t.size() > 3 && t.substr(t.size() - 3) == "rad")
        t = detail::trim(t.substr(0, t.size() - 3));
    return detail::parse_number(t, what);
}

inline bool parse_bool(const std::string& text, const std::string& what = "flag") {
    const std::string t = detail::trim(text);
    if (t == "true") return true;
    if (t == "false") return false;
    throw config_error(what + ": expected true or false, got '" + t + "'");
}

/// Object description as configured; turned into a SceneObject at run time
/// (the uniform variant needs the camera extent to size its backing aperture).
struct ObjectSpec {
    enum class Kind { point_pair, points, rect, rect_pair, uniform, sampled_map };
    Kind kind = Kind::point_pair;
    double separation = 0.0;                     // point_pair, rect_pair
    double amplitude = 1.0;                      // point_pair weight
    double side = 0.0;                           // rect_pair
    TransversePoint center;                      // rect
    double width = 0.0, height = 0.0;            // rect
    std::complex<double> transmission = 1.0;     // rect, rect_pair, uniform
    std::vector<PointSource> points;             // points
    std::string map_file;                        // sampled_map
};

struct PsfOptions {
    std::vector<double> overlay_lengths; ///< empty = just spdc.crystal_length
    std::vector<double> spread_lengths;  ///< empty = 0.5 mm .. 10 mm step 0.5 mm
};

struct ResolveOptions {
    bool numeric = false;
    double aperture_side = 1e-6;
    std::optional<double> farfield_focal;
};

struct SweepOptions {
    std::string axis; ///< crystal_length | m_i | lambda_s | lambda_i | beta_max
    std::vector<double> values;
    std::vector<double> m_i_list; ///< empty = just optics.m_i
    bool numeric = false;
    double aperture_side = 1e-6;
};

struct RunConfig {
    SpdcParams spdc;
    OpticsParams optics;
    std::optional<ObjectSpec> object;
    std::optional<CameraGrid> camera;
    double beta_max = 0.81;
    PsfOptions psf;
    ResolveOptions resolve;
    SweepOptions sweep;
};

namespace detail {

struct ConfigEntry {
    std::string section;
    std::string key;
    std::string value;
    int line = 0;
};

struct ConfigText {
    std::vector<ConfigEntry> entries;

    const ConfigEntry* find(const std::string& section, const std::string& key) const {
        const ConfigEntry* hit = nullptr;
        for (const auto& e : entries)
            if (e.section == section && e.key == key) hit = &e; // last wins (overrides)
        return hit;
    }
    std::vector<const ConfigEntry*> find_all(const std::string& section, const std::string& key) const {
        std::vector<const ConfigEntry*> hits;
        for (const auto& e : entries)
            if (e.section == section && e.key == key) hits.push_back(&e);
        return hits;
    }
    bool has_section(const std::string& section) const {
        return std::any_of(entries.begin(), entries.end(),
                           [&](const ConfigEntry& e) { return e.section == section; });
    }
};

inline ConfigText tokenize_config(std::istream& in) {
    ConfigText text;
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const size_t hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw config_error("line " + std::to_string(lineno) + ": unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw config_error("line " + std::to_string(lineno) + ": key outside any [section]");
        text.entries.push_back({section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)), lineno});
    }
    return text;
}

inline std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(value);
    while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
    return out;
}

// A value list is either comma-separated or an inclusive start : stop : step range.
inline std::vector<double> parse_value_list(const std::string& value, bool lengths,
                                            const std::string& what) {
    auto parse_one = [&](const std::string& s) {
        return lengths ? parse_length(s, what) : parse_number(s, what);
    };
    if (value.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::string cur;
        std::stringstream ss(value);
        while (std::getline(ss, cur, ':')) parts.push_back(trim(cur));
        if (parts.size() != 3)
            throw config_error(what + ": range must be start : stop : step");
        const double a = parse_one(parts[0]), b = parse_one(parts[1]), step = parse_one(parts[2]);
        if (!(step > 0.0)) throw config_error(what + ": range step must be > 0");
        std::vector<double> out;
        for (double v = a; v <= b * (1.0 + 1e-12); v += step) out.push_back(v);
        return out;
    }
    std::vector<double> out;
    for (const auto& s : split_list(value)) out.push_back(parse_one(s));
    if (out.empty()) throw config_error(what + ": empty value list");
    return out;
}

inline const ConfigEntry& require(const ConfigText& text, const std::string& section,
                                  const std::string& key) {
    const ConfigEntry* e = text.find(section, key);
    if (!e) throw config_error("missing required key [" + section + "] " + key);
    return *e;
}

inline std::string where(const ConfigEntry& e) {
    return "[" + e.section + "] " + e.key + " (line " + std::to_string(e.line) + ")";
}

} // namespace detail

inline RunConfig interpret_config(const detail::ConfigText& text) {
    using detail::require;
    using detail::where;
    static const std::vector<std::pair<std::string, std::vector<std::string>>> known = {
        {"spdc", {"lambda_s", "lambda_i", "crystal_length", "pump_waist"}},
        {"optics", {"m_s", "m_i", "phi_in"}},
        {"object",
         {"type", "separation", "amplitude", "side", "center_x", "center_y", "width", "height",
          "t_re", "t_im", "point", "file"}},
        {"camera", {"nx", "ny", "pitch", "center_x", "center_y"}},
        {"criterion", {"beta_max"}},
        {"psf", {"lengths", "spread_lengths"}},
        {"resolve", {"numeric", "aperture_side", "farfield_focal"}},
        {"sweep", {"axis", "values", "m_i_list", "numeric", "aperture_side"}},
    };
    for (const auto& e : text.entries) {
        const auto sec = std::find_if(known.begin(), known.end(),
                                      [&](const auto& s) { return s.first == e.section; });
        if (sec == known.end())
            throw config_error("unknown section " + where(e));
        if (std::find(sec->second.begin(), sec->second.end(), e.key) == sec->second.end())
            throw config_error("unknown key " + where(e));
    }

    RunConfig cfg;
    cfg.spdc.lambda_s = parse_length(require(text, "spdc", "lambda_s").value, "[spdc] lambda_s");
    cfg.spdc.lambda_i = parse_length(require(text, "spdc", "lambda_i").value, "[spdc] lambda_i");
    cfg.spdc.crystal_length =
        parse_length(require(text, "spdc", "crystal_length").value, "[spdc] crystal_length");
    cfg.spdc.pump_waist = parse_length(require(text, "spdc", "pump_waist").value, "[spdc] pump_waist");

    if (const auto* e = text.find("optics", "m_s")) cfg.optics.m_s = detail::parse_number(e->value, where(*e));
    if (const auto* e = text.find("optics", "m_i")) cfg.optics.m_i = detail::parse_number(e->value, where(*e));
    if (const auto* e = text.find("optics", "phi_in")) cfg.optics.phi_in = parse_angle(e->value, where(*e));

    if (text.has_section("object")) {
        ObjectSpec obj;
        const std::string type = require(text, "object", "type").value;
        auto get_transmission = [&]() {
            std::complex<double> t{1.0, 0.0};
            if (const auto* e = text.find("object", "t_re"))
                t.real(detail::parse_number(e->value, where(*e)));
            if (const auto* e = text.find("object", "t_im"))
                t.imag(detail::parse_number(e->value, where(*e)));
            return t;
        };
        if (type == "point_pair") {
            obj.kind = ObjectSpec::Kind::point_pair;
            obj.separation = parse_length(require(text, "object", "separation").value, "[object] separation");
            if (const auto* e = text.find("object", "amplitude"))
                obj.amplitude = detail::parse_number(e->value, where(*e));
        } else if (type == "points") {
            obj.kind = ObjectSpec::Kind::points;
            for (const auto* e : text.find_all("object", "point")) {
                const auto fields = detail::split_list(e->value);
                if (fields.size() != 4)
                    throw config_error(where(*e) + ": expected x, y, re, im");
                PointSource ps;
                ps.position.x = parse_length(fields[0], where(*e));
                ps.position.y = parse_length(fields[1], where(*e));
                ps.amplitude = {detail::parse_number(fields[2], where(*e)),
                                detail::parse_number(fields[3], where(*e))};
                obj.points.push_back(ps);
            }
            if (obj.points.empty()) throw config_error("[object] points: no point entries");
        } else if (type == "rect") {
            obj.kind = ObjectSpec::Kind::rect;
            obj.width = parse_length(require(text, "object", "width").value, "[object] width");
            obj.height = parse_length(require(text, "object", "height").value, "[object] height");
            if (const auto* e = text.find("object", "center_x")) obj.center.x = parse_length(e->value, where(*e));
            if (const auto* e = text.find("object", "center_y")) obj.center.y = parse_length(e->value, where(*e));
            obj.transmission = get_transmission();
        } else if (type == "rect_pair") {
            obj.kind = ObjectSpec::Kind::rect_pair;
            obj.separation = parse_length(require(text, "object", "separation").value, "[object] separation");
            obj.side = parse_length(require(text, "object", "side").value, "[object] side");
            obj.transmission = get_transmission();
        } else if (type == "uniform") {
            obj.kind = ObjectSpec::Kind::uniform;
            obj.transmission = get_transmission();
        } else if (type == "sampled_map") {
            obj.kind = ObjectSpec::Kind::sampled_map;
            obj.map_file = require(text, "object", "file").value;
        } else {
            throw config_error("[object] type: unknown object type '" + type + "'");
        }
        cfg.object = obj;
    }

    if (text.has_section("camera")) {
        CameraGrid cam;
        auto pixel_count = [&](const char* key) {
            const double v = detail::parse_number(require(text, "camera", key).value,
                                                  std::string("[camera] ") + key);
            if (v != std::floor(v) || v < 1.0 || v > 1e9)
                throw config_error(std::string("[camera] ") + key + ": expected a positive integer");
            return static_cast<int>(v);
        };
        cam.nx = pixel_count("nx");
        cam.ny = pixel_count("ny");
        cam.pitch = parse_length(require(text, "camera", "pitch").value, "[camera] pitch");
        if (const auto* e = text.find("camera", "center_x")) cam.center.x = parse_length(e->value, where(*e));
        if (const auto* e = text.find("camera", "center_y")) cam.center.y = parse_length(e->value, where(*e));
        cfg.camera = cam;
    }

    if (const auto* e = text.find("criterion", "beta_max"))
        cfg.beta_max = detail::parse_number(e->value, where(*e));

    if (const auto* e = text.find("psf", "lengths"))
        cfg.psf.overlay_lengths = detail::parse_value_list(e->value, true, where(*e));
    if (const auto* e = text.find("psf", "spread_lengths"))
        cfg.psf.spread_lengths = detail::parse_value_list(e->value, true, where(*e));

    if (const auto* e = text.find("resolve", "numeric")) cfg.resolve.numeric = parse_bool(e->value, where(*e));
    if (const auto* e = text.find("resolve", "aperture_side"))
        cfg.resolve.aperture_side = parse_length(e->value, where(*e));
    if (const auto* e = text.find("resolve", "farfield_focal"))
        cfg.resolve.farfield_focal = parse_length(e->value, where(*e));

    if (text.has_section("sweep")) {
        cfg.sweep.axis = require(text, "sweep", "axis").value;
        static const char* axes[] = {"crystal_length", "m_i", "lambda_s", "lambda_i", "beta_max"};
        if (std::find_if(std::begin(axes), std::end(axes),
                         [&](const char* a) { return cfg.sweep.axis == a; }) == std::end(axes))
            throw config_error("[sweep] axis: unknown axis '" + cfg.sweep.axis + "'");
        const bool lengths =
            cfg.sweep.axis == "crystal_length" || cfg.sweep.axis == "lambda_s" || cfg.sweep.axis == "lambda_i";
        cfg.sweep.values =
            detail::parse_value_list(require(text, "sweep", "values").value, lengths, "[sweep] values");
        if (const auto* e = text.find("sweep", "m_i_list"))
            cfg.sweep.m_i_list = detail::parse_value_list(e->value, false, where(*e));
        if (const auto* e = text.find("sweep", "numeric")) cfg.sweep.numeric = parse_bool(e->value, where(*e));
        if (const auto* e = text.find("sweep", "aperture_side"))
            cfg.sweep.aperture_side = parse_length(e->value, where(*e));
    }
    return cfg;
}

inline RunConfig load_config(std::istream& in) { return interpret_config(detail::tokenize_config(in)); }

inline RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    return load_config(in);
}

/// `--override section.key=value`, applied textually before interpretation.
inline void apply_override(detail::ConfigText& text, const std::string& spec) {
    const size_t eq = spec.find('=');
    if (eq == std::string::npos) throw config_error("override '" + spec + "': expected section.key=value");
    const std::string path = detail::trim(spec.substr(0, eq));
    const size_t dot = path.find('.');
    if (dot == std::string::npos)
        throw config_error("override '" + spec + "': key must be section.key");
    text.entries.push_back(
        {path.substr(0, dot), path.substr(dot + 1), detail::trim(spec.substr(eq + 1)), 0});
}

/// Canonical SI dump; parsing the output reproduces the config bit-exactly.
inline std::string dump_config(const RunConfig& cfg) {
    using detail::format_g;
    std::string out;
    auto line = [&out](const std::string& s) { out += s + "\n"; };
    auto len = [](double v) { return format_g(v, 17) + " m"; };
    auto num = [](double v) { return format_g(v, 17); };

    line("[spdc]");
    line("lambda_s = " + len(cfg.spdc.lambda_s));
    line("lambda_i = " + len(cfg.spdc.lambda_i));
    line("crystal_length = " + len(cfg.spdc.crystal_length));
    line("pump_waist = " + len(cfg.spdc.pump_waist));
    line("");
    line("[optics]");
    line("m_s = " + num(cfg.optics.m_s));
    line("m_i = " + num(cfg.optics.m_i));
    line("phi_in = " + num(cfg.optics.phi_in) + " rad");
    if (cfg.object) {
        const ObjectSpec& o = *cfg.object;
        line("");
        line("[object]");
        switch (o.kind) {
        case ObjectSpec::Kind::point_pair:
            line("type = point_pair");
            line("separation = " + len(o.separation));
            line("amplitude = " + num(o.amplitude));
            break;
        case ObjectSpec::Kind::points:
            line("type = points");
            for (const auto& pt : o.points)
                line("point = " + len(pt.position.x) + ", " + len(pt.position.y) + ", " +
                     num(pt.amplitude.real()) + ", " + num(pt.amplitude.imag()));
            break;
        case ObjectSpec::Kind::rect:
            line("type = rect");
            line("center_x = " + len(o.center.x));
            line("center_y = " + len(o.center.y));
            line("width = " + len(o.width));
            line("height = " + len(o.height));
            line("t_re = " + num(o.transmission.real()));
            line("t_im = " + num(o.transmission.imag()));
            break;
        case ObjectSpec::Kind::rect_pair:
            line("type = rect_pair");
            line("separation = " + len(o.separation));
            line("side = " + len(o.side));
            line("t_re = " + num(o.transmission.real()));
            line("t_im = " + num(o.transmission.imag()));
            break;
        case ObjectSpec::Kind::uniform:
            line("type = uniform");
            line("t_re = " + num(o.transmission.real()));
            line("t_im = " + num(o.transmission.imag()));
            break;
        case ObjectSpec::Kind::sampled_map:
            line("type = sampled_map");
            line("file = " + o.map_file);
            break;
        }
    }
    if (cfg.camera) {
        line("");
        line("[camera]");
        line("nx = " + std::to_string(cfg.camera->nx));
        line("ny = " + std::to_string(cfg.camera->ny));
        line("pitch = " + len(cfg.camera->pitch));
        line("center_x = " + len(cfg.camera->center.x));
        line("center_y = " + len(cfg.camera->center.y));
    }
    line("");
    line("[criterion]");
    line("beta_max = " + num(cfg.beta_max));
    auto len_list = [&](const std::vector<double>& vs) {
        std::string s;
        for (size_t i = 0; i < vs.size(); ++i) s += (i ? ", " : "") + len(vs[i]);
        return s;
    };
    auto num_list = [&](const std::vector<double>& vs) {
        std::string s;
        for (size_t i = 0; i < vs.size(); ++i) s += (i ? ", " : "") + num(vs[i]);
        return s;
    };
    if (!cfg.psf.overlay_lengths.empty() || !cfg.psf.spread_lengths.empty()) {
        line("");
        line("[psf]");
        if (!cfg.psf.overlay_lengths.empty()) line("lengths = " + len_list(cfg.psf.overlay_lengths));
        if (!cfg.psf.spread_lengths.empty())
            line("spread_lengths = " + len_list(cfg.psf.spread_lengths));
    }
    if (cfg.resolve.numeric || cfg.resolve.farfield_focal || cfg.resolve.aperture_side != 1e-6) {
        line("");
        line("[resolve]");
        line(std::string("numeric = ") + (cfg.resolve.numeric ? "true" : "false"));
        line("aperture_side = " + len(cfg.resolve.aperture_side));
        if (cfg.resolve.farfield_focal) line("farfield_focal = " + len(*cfg.resolve.farfield_focal));
    }
    if (!cfg.sweep.axis.empty()) {
        const bool lengths = cfg.sweep.axis == "crystal_length" || cfg.sweep.axis == "lambda_s" ||
                             cfg.sweep.axis == "lambda_i";
        line("");
        line("[sweep]");
        line("axis = " + cfg.sweep.axis);
        line("values = " + (lengths ? len_list(cfg.sweep.values) : num_list(cfg.sweep.values)));
        if (!cfg.sweep.m_i_list.empty()) line("m_i_list = " + num_list(cfg.sweep.m_i_list));
        line(std::string("numeric = ") + (cfg.sweep.numeric ? "true" : "false"));
        line("aperture_side = " + len(cfg.sweep.aperture_side));
    }
    return out;
}

/// Materializes the configured object. The uniform variant is backed by one
/// aperture covering the camera field mapped to the object plane, padded well
/// past the kernel width so interior pixels see a flat object.
inline SceneObject build_scene_object(const ObjectSpec& spec, const SpdcParams& p,
                                      const OpticsParams& o, const std::optional<CameraGrid>& cam,
                                      const SampledMap* loaded_map = nullptr) {
    switch (spec.kind) {
    case ObjectSpec::Kind::point_pair: {
        PointSet ps;
        ps.points.push_back({{+0.5 * spec.separation, 0.0}, spec.amplitude});
        ps.points.push_back({{-0.5 * spec.separation, 0.0}, spec.amplitude});
        return ps;
    }
    case ObjectSpec::Kind::points:
        return PointSet{spec.points};
    case ObjectSpec::Kind::rect:
        return RectApertures{{{spec.center, spec.width, spec.height, spec.transmission}}};
    case ObjectSpec::Kind::rect_pair: {
        RectApertures ra;
        ra.rects.push_back({{+0.5 * spec.separation, 0.0}, spec.side, spec.side, spec.transmission});
        ra.rects.push_back({{-0.5 * spec.separation, 0.0}, spec.side, spec.side, spec.transmission});
        return ra;
    }
    case ObjectSpec::Kind::uniform: {
        if (!cam) throw config_error("uniform object requires a [camera] block to size itself");
        const double sigma_o = object_plane_sigma(p, o.m_i);
        const double map_ratio = std::abs(o.m_i / o.m_s);
        const double half_x = std::abs(cam->center.x) + 0.5 * cam->nx * cam->pitch;
        const double half_y = std::abs(cam->center.y) + 0.5 * cam->ny * cam->pitch;
        const double w = 2.0 * (half_x * map_ratio + 8.0 * sigma_o);
        const double h = 2.0 * (half_y * map_ratio + 8.0 * sigma_o);
        return RectApertures{{{{0.0, 0.0}, w, h, spec.transmission}}};
    }
    case ObjectSpec::Kind::sampled_map:
        if (!loaded_map) throw config_error("sampled_map object: map file not loaded");
        return *loaded_map;
    }
    throw config_error("unhandled object kind");
}

} // namespace qiup
