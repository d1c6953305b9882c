// Command-line front end: psf, image, resolve, and sweep subcommands over the
// shared run-configuration format. Exit codes: 0 success, 2 configuration
// error, 3 numerical failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qiup/config.hpp"
#include "qiup/imaging.hpp"
#include "qiup/io.hpp"
#include "qiup/resolution.hpp"
#include "qiup/spdc.hpp"
#include "qiup/version.hpp"

namespace fs = std::filesystem;
using namespace qiup;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::vector<std::string> overrides;
    bool full_kernel = false;
};

struct LoadedConfig {
    RunConfig cfg;
    fs::path base_dir;
    KernelChoice kernel = KernelChoice::reduced;
};

LoadedConfig load(const CommonOpts& opts) {
    std::ifstream in(opts.config_path);
    if (!in) throw config_error("cannot open config file '" + opts.config_path + "'");
    auto text = detail::tokenize_config(in);
    for (const auto& ov : opts.overrides) apply_override(text, ov);
    LoadedConfig lc;
    lc.cfg = interpret_config(text);
    lc.base_dir = fs::path(opts.config_path).parent_path();
    lc.kernel = opts.full_kernel ? KernelChoice::full : KernelChoice::reduced;
    validate(lc.cfg.spdc);
    validate(lc.cfg.optics);
    return lc;
}

std::string out_path(const CommonOpts& opts, const std::string& name) {
    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    if (ec)
        throw config_error("cannot create output directory '" + opts.out_dir + "': " + ec.message());
    return (fs::path(opts.out_dir) / name).string();
}

ordered_json object_json(const ObjectSpec& o) {
    ordered_json j;
    switch (o.kind) {
    case ObjectSpec::Kind::point_pair:
        j["type"] = "point_pair";
        j["separation_m"] = o.separation;
        j["amplitude"] = o.amplitude;
        break;
    case ObjectSpec::Kind::points: {
        j["type"] = "points";
        auto arr = ordered_json::array();
        for (const auto& p : o.points)
            arr.push_back({{"x_m", p.position.x},
                           {"y_m", p.position.y},
                           {"re", p.amplitude.real()},
                           {"im", p.amplitude.imag()}});
        j["points"] = arr;
        break;
    }
    case ObjectSpec::Kind::rect:
        j["type"] = "rect";
        j["center_x_m"] = o.center.x;
        j["center_y_m"] = o.center.y;
        j["width_m"] = o.width;
        j["height_m"] = o.height;
        j["t_re"] = o.transmission.real();
        j["t_im"] = o.transmission.imag();
        break;
    case ObjectSpec::Kind::rect_pair:
        j["type"] = "rect_pair";
        j["separation_m"] = o.separation;
        j["side_m"] = o.side;
        j["t_re"] = o.transmission.real();
        j["t_im"] = o.transmission.imag();
        break;
    case ObjectSpec::Kind::uniform:
        j["type"] = "uniform";
        j["t_re"] = o.transmission.real();
        j["t_im"] = o.transmission.imag();
        break;
    case ObjectSpec::Kind::sampled_map:
        j["type"] = "sampled_map";
        j["file"] = o.map_file;
        break;
    }
    return j;
}

Report base_report(const std::string& command, const LoadedConfig& lc) {
    Report rep;
    rep.command = command;
    rep.inputs["spdc"] = spdc_json(lc.cfg.spdc);
    rep.inputs["optics"] = optics_json(lc.cfg.optics);
    if (lc.cfg.object) rep.inputs["object"] = object_json(*lc.cfg.object);
    if (lc.cfg.camera) rep.inputs["camera"] = camera_json(*lc.cfg.camera);
    rep.inputs["criterion"] = ordered_json{{"beta_max", lc.cfg.beta_max}};
    rep.inputs["kernel"] = lc.kernel == KernelChoice::full ? "full" : "reduced";
    return rep;
}

void attach_validity_warning(Report& rep, const LoadedConfig& lc) {
    if (lc.kernel != KernelChoice::reduced) return;
    const double r = reduced_kernel_validity(lc.cfg.spdc);
    if (r > kValidityThreshold)
        rep.warnings.push_back("reduced-kernel validity ratio " + detail::format_g(r, 6) +
                               " exceeds threshold " + detail::format_g(kValidityThreshold, 3));
}

SceneObject make_object(const LoadedConfig& lc) {
    if (!lc.cfg.object) throw config_error("this command needs an [object] block");
    const SampledMap* map_ptr = nullptr;
    SampledMap map;
    if (lc.cfg.object->kind == ObjectSpec::Kind::sampled_map) {
        fs::path p(lc.cfg.object->map_file);
        if (p.is_relative()) p = lc.base_dir / p;
        map = read_sampled_map_file(p.string());
        map_ptr = &map;
    }
    SceneObject obj = build_scene_object(*lc.cfg.object, lc.cfg.spdc, lc.cfg.optics, lc.cfg.camera, map_ptr);
    validate(obj);
    return obj;
}

const CameraGrid& need_camera(const LoadedConfig& lc) {
    if (!lc.cfg.camera) throw config_error("this command needs a [camera] block");
    validate(*lc.cfg.camera);
    return *lc.cfg.camera;
}

// Dip/peak ratio of the imaged pair, for report annotation of *_pair objects.
std::optional<double> pair_beta(const LoadedConfig& lc, const SceneObject& obj) {
    if (!lc.cfg.object) return std::nullopt;
    const auto kind = lc.cfg.object->kind;
    if (kind != ObjectSpec::Kind::point_pair && kind != ObjectSpec::Kind::rect_pair)
        return std::nullopt;
    const double d = lc.cfg.object->separation;
    const bool ideal = kind == ObjectSpec::Kind::point_pair;
    const auto prof = detail::sample_profile(lc.cfg.spdc, lc.cfg.optics, d,
                                             image_xcut(lc.cfg.spdc, lc.cfg.optics, obj, lc.kernel),
                                             ideal, ProfileSpec{});
    return beta(prof);
}

int cmd_psf(const CommonOpts& opts) {
    const LoadedConfig lc = load(opts);
    const CameraGrid& cam = need_camera(lc);
    const SpdcParams& p = lc.cfg.spdc;
    const OpticsParams& o = lc.cfg.optics;

    std::vector<double> overlay = lc.cfg.psf.overlay_lengths;
    if (overlay.empty()) overlay = {p.crystal_length};

    PointSet point;
    point.points.push_back({{0.0, 0.0}, 1.0});
    const SceneObject obj{point};

    // Profile cut along the camera x axis, one peak-normalized column per length.
    std::vector<CsvColumn> columns;
    columns.push_back({"x_c_m", {}});
    for (int ix = 0; ix < cam.nx; ++ix) columns[0].values.push_back(cam.position(ix, 0).x);
    for (double L : overlay) {
        SpdcParams pl = p;
        pl.crystal_length = L;
        auto cut = image_xcut(pl, o, obj, lc.kernel);
        const double peak = cut(0.0);
        CsvColumn col{"psf_L" + detail::format_g(L, 9) + "m", {}};
        for (double x : columns[0].values) col.values.push_back(cut(x) / peak);
        columns.push_back(std::move(col));
    }
    write_file(out_path(opts, "psf_profile.csv"), csv_table(columns));

    const auto raster = image_function(p, o, obj, cam, lc.kernel);
    write_file(out_path(opts, "psf_raster.pgm"),
               pgm16(cam.nx, cam.ny, render(raster, RenderMode::peak_normalized)));

    std::vector<double> curve = lc.cfg.psf.spread_lengths;
    if (curve.empty())
        for (int i = 1; i <= 20; ++i) curve.push_back(i * 0.5e-3);
    std::vector<CsvColumn> spread_cols{{"crystal_length_m", {}}, {"delta_m", {}}, {"delta_object_plane_m", {}}};
    for (double L : curve) {
        SpdcParams pl = p;
        pl.crystal_length = L;
        spread_cols[0].values.push_back(L);
        spread_cols[1].values.push_back(psf_spread(pl, o.m_s));
        spread_cols[2].values.push_back(psf_spread_object_plane(pl, o.m_i));
    }
    write_file(out_path(opts, "psf_spread_vs_length.csv"), csv_table(spread_cols));

    Report rep = base_report("psf", lc);
    rep.inputs["psf_overlay_lengths_m"] = overlay;
    rep.add_output("delta_m", psf_spread(p, o.m_s), "m");
    rep.add_output("delta_object_plane_m", psf_spread_object_plane(p, o.m_i), "m");
    rep.add_output("validity_ratio", reduced_kernel_validity(p), "1");
    attach_validity_warning(rep, lc);
    for (const auto& w : raster.meta.warnings)
        if (std::find(rep.warnings.begin(), rep.warnings.end(), w) == rep.warnings.end())
            rep.warnings.push_back(w);
    write_file(out_path(opts, "psf_report.json"), rep.to_string());
    return 0;
}

int cmd_image(const CommonOpts& opts, const std::optional<double>& phi) {
    LoadedConfig lc = load(opts);
    const CameraGrid& cam = need_camera(lc);
    if (phi) lc.cfg.optics.phi_in = *phi;
    const SceneObject obj = make_object(lc);
    if (phi && std::holds_alternative<PointSet>(obj))
        throw config_error("count-rate mode needs a physical object with |T| <= 1; ideal points "
                           "carry delta weights that dwarf the interference background");

    const ImageResult result = phi ? count_rate(lc.cfg.spdc, lc.cfg.optics, obj, cam, lc.kernel)
                                   : image_function(lc.cfg.spdc, lc.cfg.optics, obj, cam, lc.kernel);
    const auto normalized = render(result, RenderMode::peak_normalized);
    write_file(out_path(opts, "image_raster.pgm"), pgm16(cam.nx, cam.ny, normalized));

    // Cut along the row nearest y_c = 0 (exactly centered for odd ny).
    const int iy = (cam.ny - 1) / 2;
    std::vector<CsvColumn> cut{{"x_c_m", {}}, {"value", {}}, {"value_normalized", {}}};
    for (int ix = 0; ix < cam.nx; ++ix) {
        cut[0].values.push_back(cam.position(ix, iy).x);
        cut[1].values.push_back(result.at(ix, iy));
        cut[2].values.push_back(normalized[static_cast<size_t>(iy) * cam.nx + ix]);
    }
    write_file(out_path(opts, "image_xcut.csv"), csv_table(cut));

    Report rep = base_report("image", lc);
    rep.inputs["mode"] = phi ? "count_rate" : "image_function";
    if (phi) rep.add_output("phi_in", *phi, "rad");
    rep.add_output("delta_m", psf_spread(lc.cfg.spdc, lc.cfg.optics.m_s), "m");
    if (!phi)
        if (const auto b = pair_beta(lc, obj)) rep.add_output("beta", *b, "1");
    rep.add_output("validity_ratio", reduced_kernel_validity(lc.cfg.spdc), "1");
    attach_validity_warning(rep, lc);
    write_file(out_path(opts, "image_report.json"), rep.to_string());
    return 0;
}

int cmd_resolve(const CommonOpts& opts) {
    const LoadedConfig lc = load(opts);
    const SpdcParams& p = lc.cfg.spdc;
    const OpticsParams& o = lc.cfg.optics;
    const ResolutionCriterion crit = ResolutionCriterion::from_beta_max(lc.cfg.beta_max);

    Report rep = base_report("resolve", lc);
    rep.add_output("m0", crit.m0, "1");
    rep.add_output("n", crit.n(), "1");
    rep.add_output("delta_m", psf_spread(p, o.m_s), "m");
    rep.add_output("delta_object_plane_m", psf_spread_object_plane(p, o.m_i), "m");
    rep.add_output("d_min_analytic_m", d_min_analytic(p, o.m_i, crit), "m");
    if (lc.cfg.resolve.numeric) {
        const double d = d_min_numeric(p, o, rect_pair_template(lc.cfg.resolve.aperture_side), crit, lc.kernel);
        rep.add_output("d_min_numeric_m", d, "m");
        rep.inputs["aperture_side_m"] = lc.cfg.resolve.aperture_side;
    }
    if (lc.cfg.resolve.farfield_focal) {
        rep.add_output("d_min_farfield_m",
                       d_min_farfield(*lc.cfg.resolve.farfield_focal, p.lambda_i, p.pump_waist), "m");
        rep.inputs["farfield_focal_m"] = *lc.cfg.resolve.farfield_focal;
    }
    rep.add_output("validity_ratio", reduced_kernel_validity(p), "1");
    attach_validity_warning(rep, lc);
    write_file(out_path(opts, "resolve_report.json"), rep.to_string());
    return 0;
}

int cmd_sweep(const CommonOpts& opts) {
    const LoadedConfig lc = load(opts);
    if (lc.cfg.sweep.axis.empty()) throw config_error("sweep command needs a [sweep] block");
    if (lc.cfg.sweep.values.empty()) throw config_error("[sweep] values: empty sweep set");
    const std::string& axis = lc.cfg.sweep.axis;

    std::vector<double> mi_list = lc.cfg.sweep.m_i_list;
    if (mi_list.empty()) mi_list = {lc.cfg.optics.m_i};

    const bool length_axis = axis == "crystal_length" || axis == "lambda_s" || axis == "lambda_i";
    std::vector<CsvColumn> cols{{length_axis ? axis + "_m" : axis, {}},
                                {"m_i", {}},
                                {"d_min_analytic_m", {}}};
    if (lc.cfg.sweep.numeric) cols.push_back({"d_min_numeric_m", {}});

    const ResolutionCriterion base_crit = ResolutionCriterion::from_beta_max(lc.cfg.beta_max);
    for (double mi : mi_list) {
        for (double v : lc.cfg.sweep.values) {
            SpdcParams p = lc.cfg.spdc;
            OpticsParams o = lc.cfg.optics;
            o.m_i = mi;
            ResolutionCriterion crit = base_crit;
            if (axis == "crystal_length") p.crystal_length = v;
            else if (axis == "lambda_s") p.lambda_s = v;
            else if (axis == "lambda_i") p.lambda_i = v;
            else if (axis == "m_i") o.m_i = v;
            else crit = ResolutionCriterion::from_beta_max(v);
            validate(p);
            cols[0].values.push_back(v);
            cols[1].values.push_back(o.m_i);
            cols[2].values.push_back(d_min_analytic(p, o.m_i, crit));
            if (lc.cfg.sweep.numeric)
                cols[3].values.push_back(
                    d_min_numeric(p, o, rect_pair_template(lc.cfg.sweep.aperture_side), crit, lc.kernel));
        }
    }
    write_file(out_path(opts, "sweep.csv"), csv_table(cols));

    Report rep = base_report("sweep", lc);
    rep.inputs["sweep"] = ordered_json{{"axis", axis},
                                       {"values", lc.cfg.sweep.values},
                                       {"m_i_list", mi_list},
                                       {"numeric", lc.cfg.sweep.numeric},
                                       {"aperture_side_m", lc.cfg.sweep.aperture_side}};
    rep.add_output("rows", static_cast<double>(cols[0].values.size()), "1");
    rep.add_output("m0", base_crit.m0, "1");
    attach_validity_warning(rep, lc);
    write_file(out_path(opts, "sweep_report.json"), rep.to_string());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Position-correlation QIUP imaging and resolution toolkit"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    CommonOpts opts;
    std::optional<double> phi;
    double phi_value = 0.0;

    auto add_common = [&opts](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "run configuration file")->required();
        sub->add_option("--out", opts.out_dir, "output directory (default: .)");
        sub->add_option("--override", opts.overrides, "section.key=value, repeatable");
        sub->add_flag("--full-kernel", opts.full_kernel,
                      "use the full joint density instead of the reduced kernel");
    };

    CLI::App* psf = app.add_subcommand("psf", "point-spread function profile, raster and spreads");
    add_common(psf);
    CLI::App* image = app.add_subcommand("image", "image an object onto the camera");
    add_common(image);
    CLI::Option* phi_opt =
        image->add_option("--phi", phi_value, "raw count-rate mode at this interferometer phase (rad)");
    CLI::App* resolve = app.add_subcommand("resolve", "resolution criterion and minimum distances");
    add_common(resolve);
    CLI::App* sweep = app.add_subcommand("sweep", "minimum resolvable distance over a parameter sweep");
    add_common(sweep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 2 : 0;
    }

    try {
        if (psf->parsed()) return cmd_psf(opts);
        if (image->parsed()) {
            if (phi_opt->count() > 0) phi = phi_value;
            return cmd_image(opts, phi);
        }
        if (resolve->parsed()) return cmd_resolve(opts);
        if (sweep->parsed()) return cmd_sweep(opts);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const invalid_parameter& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
