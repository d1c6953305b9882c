#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "qiup/errors.hpp"
#include "qiup/spdc.hpp"

// Objects, camera raster, and the interference-intensity / image-function
// integrals over them. The reduced correlation kernel is the default; the full
// density (pump envelope included) sits behind KernelChoice::full.

namespace qiup {

enum class KernelChoice { reduced, full };

/// Interferometer geometry: arm magnifications and interferometer phase.
struct OpticsParams {
    double m_s = 1.0;    ///< signal-arm magnification (source -> camera)
    double m_i = 1.0;    ///< idler-arm magnification (source -> object)
    double phi_in = 0.0; ///< interferometer phase, rad

    double magnification() const { return m_s / m_i; }
};

inline void validate(const OpticsParams& o) {
    if (o.m_s == 0.0 || o.m_i == 0.0)
        throw invalid_parameter("OpticsParams: magnifications must be nonzero");
    if (!std::isfinite(o.m_s) || !std::isfinite(o.m_i) || !std::isfinite(o.phi_in))
        throw invalid_parameter("OpticsParams: fields must be finite");
}

/// Ideal point with a complex weight (weights carry object-plane area units).
struct PointSource {
    TransversePoint position;
    std::complex<double> amplitude = 1.0;
};

struct PointSet {
    std::vector<PointSource> points;
};

/// Axis-aligned rectangular aperture; transmission applies inside, zero outside.
struct RectAperture {
    TransversePoint center;
    double width = 0.0;
    double height = 0.0;
    std::complex<double> transmission = 1.0;
};

struct RectApertures {
    std::vector<RectAperture> rects;
};

/// Uniform grid of complex transmission samples, row-major (y rows, x fastest).
/// origin is the position of sample (0, 0).
struct SampledMap {
    int nx = 0;
    int ny = 0;
    double pitch = 0.0;
    TransversePoint origin;
    std::vector<std::complex<double>> samples;

    const std::complex<double>& at(int ix, int iy) const { return samples[iy * nx + ix]; }
    TransversePoint position(int ix, int iy) const {
        return {origin.x + ix * pitch, origin.y + iy * pitch};
    }
};

using SceneObject = std::variant<PointSet, RectApertures, SampledMap>;

inline void validate(const SceneObject& obj) {
    if (const auto* ps = std::get_if<PointSet>(&obj)) {
        for (const auto& pt : ps->points)
            if (!std::isfinite(pt.position.x) || !std::isfinite(pt.position.y) ||
                !std::isfinite(pt.amplitude.real()) || !std::isfinite(pt.amplitude.imag()))
                throw invalid_parameter("PointSet: non-finite point");
    } else if (const auto* ra = std::get_if<RectApertures>(&obj)) {
        const auto& rs = ra->rects;
        for (const auto& r : rs) {
            if (!(r.width > 0.0) || !(r.height > 0.0))
                throw invalid_parameter("RectAperture: width and height must be > 0");
            if (std::abs(r.transmission) > 1.0 + 1e-12)
                throw invalid_parameter("RectAperture: |T| must be <= 1");
        }
        for (size_t a = 0; a < rs.size(); ++a)
            for (size_t b = a + 1; b < rs.size(); ++b)
                if (std::abs(rs[a].center.x - rs[b].center.x) < 0.5 * (rs[a].width + rs[b].width) &&
                    std::abs(rs[a].center.y - rs[b].center.y) < 0.5 * (rs[a].height + rs[b].height))
                    throw invalid_parameter("RectApertures: apertures overlap");
    } else {
        const auto& m = std::get<SampledMap>(obj);
        if (m.nx < 1 || m.ny < 1 || !(m.pitch > 0.0))
            throw invalid_parameter("SampledMap: need nx, ny >= 1 and pitch > 0");
        if (m.samples.size() != static_cast<size_t>(m.nx) * static_cast<size_t>(m.ny))
            throw invalid_parameter("SampledMap: sample count does not match nx*ny");
        for (const auto& t : m.samples) {
            if (!std::isfinite(t.real()) || !std::isfinite(t.imag()))
                throw invalid_parameter("SampledMap: non-finite sample");
            if (std::abs(t) > 1.0 + 1e-12)
                throw invalid_parameter("SampledMap: |T| must be <= 1");
        }
    }
}

inline std::string describe(const SceneObject& obj) {
    if (const auto* ps = std::get_if<PointSet>(&obj))
        return "point_set(" + std::to_string(ps->points.size()) + ")";
    if (const auto* ra = std::get_if<RectApertures>(&obj))
        return "rect_apertures(" + std::to_string(ra->rects.size()) + ")";
    const auto& m = std::get<SampledMap>(obj);
    return "sampled_map(" + std::to_string(m.nx) + "x" + std::to_string(m.ny) + ")";
}

/// Detector raster; pixel (ix, iy) maps affinely to a transverse position.
struct CameraGrid {
    int nx = 0;
    int ny = 0;
    double pitch = 0.0; ///< m per pixel
    TransversePoint center;

    TransversePoint position(int ix, int iy) const {
        return {center.x + pitch * (ix - 0.5 * (nx - 1)),
                center.y + pitch * (iy - 0.5 * (ny - 1))};
    }
};

inline void validate(const CameraGrid& g) {
    if (g.nx < 1 || g.ny < 1) throw invalid_parameter("CameraGrid: nx, ny must be >= 1");
    if (!(g.pitch > 0.0)) throw invalid_parameter("CameraGrid: pitch must be > 0");
}

enum class ImageKind { count_rate, image_function };

struct ImageMeta {
    SpdcParams spdc;
    OpticsParams optics;
    std::string object;
    ImageKind kind = ImageKind::image_function;
    KernelChoice kernel = KernelChoice::reduced;
    std::vector<std::string> warnings;
};

/// Scalar field over a CameraGrid, row-major (iy rows, ix fastest), unnormalized.
struct ImageResult {
    CameraGrid grid;
    std::vector<double> values;
    ImageMeta meta;

    double at(int ix, int iy) const { return values[iy * grid.nx + ix]; }
};

/// Object-plane standard width of the imaging kernel: |m_i| sqrt(L (lambda_s+lambda_i) / (8 pi)).
inline double object_plane_sigma(const SpdcParams& p, double m_i) {
    return std::abs(m_i) * std::sqrt(p.crystal_length * p.wavelength_sum() / (8.0 * kPi));
}

namespace detail {

// One transverse axis of the kernel as a Gaussian in the object-plane
// coordinate: scale * exp(-alpha (x_o - center)^2), for signal-plane coordinate
// coord_s = x_c / M_s.
struct AxisGaussian {
    double alpha = 0.0;
    double center = 0.0;
    double scale = 1.0;
};

inline AxisGaussian axis_gaussian(const SpdcParams& p, const OpticsParams& o, KernelChoice kernel,
                                  double coord_s) {
    const double mi2 = o.m_i * o.m_i;
    const double c2 = 4.0 * kPi / (p.crystal_length * p.wavelength_sum());
    if (kernel == KernelChoice::reduced)
        return {c2 / mi2, o.m_i * coord_s, 1.0};
    // Full kernel: complete the square of the pump + correlation exponents in
    // the object coordinate.
    const double lam_sum = p.wavelength_sum();
    const double c1 = 2.0 / (p.pump_waist * p.pump_waist * lam_sum * lam_sum);
    const double alpha_hat = c1 * p.lambda_s * p.lambda_s + c2;
    const double b_hat = (c1 * p.lambda_i * p.lambda_s - c2) * coord_s;
    const double c_hat = (c1 * p.lambda_i * p.lambda_i + c2) * coord_s * coord_s;
    const double offset = c_hat - b_hat * b_hat / alpha_hat;
    return {alpha_hat / mi2, -o.m_i * b_hat / alpha_hat, std::exp(-offset)};
}

inline double kernel_scale(const SpdcParams& p, KernelChoice kernel) {
    return kernel == KernelChoice::full ? p.norm_full() : 1.0;
}

inline double gauss_at(const AxisGaussian& g, double x) {
    const double u = x - g.center;
    return g.scale * std::exp(-g.alpha * u * u);
}

// Integral over the object segment [lo, hi].
inline double gauss_segment(const AxisGaussian& g, double lo, double hi) {
    const double r = std::sqrt(g.alpha);
    return g.scale * 0.5 * std::sqrt(kPi) / r *
           (std::erf(r * (hi - g.center)) - std::erf(r * (lo - g.center)));
}

inline double gauss_total(const AxisGaussian& g) {
    return g.scale * std::sqrt(kPi / g.alpha);
}

// Modulation weight of a transmission sample under interference phase phi,
// |T| cos(phi - arg T); the absorptive image uses |T| alone.
inline double interference_weight(const std::complex<double>& t, double phi) {
    const double mag = std::abs(t);
    if (mag == 0.0) return 0.0;
    return mag * std::cos(phi - std::arg(t));
}

using WeightFn = std::function<double(const std::complex<double>&)>;

inline double modulation_at(const SpdcParams& p, const OpticsParams& o, KernelChoice kernel,
                            const SceneObject& obj, TransversePoint rho_c, const WeightFn& weight) {
    const AxisGaussian gx = axis_gaussian(p, o, kernel, rho_c.x / o.m_s);
    const AxisGaussian gy = axis_gaussian(p, o, kernel, rho_c.y / o.m_s);
    const double scale = kernel_scale(p, kernel);
    double acc = 0.0;
    if (const auto* ps = std::get_if<PointSet>(&obj)) {
        for (const auto& pt : ps->points)
            acc += weight(pt.amplitude) * gauss_at(gx, pt.position.x) * gauss_at(gy, pt.position.y);
    } else if (const auto* ra = std::get_if<RectApertures>(&obj)) {
        for (const auto& r : ra->rects)
            acc += weight(r.transmission) *
                   gauss_segment(gx, r.center.x - 0.5 * r.width, r.center.x + 0.5 * r.width) *
                   gauss_segment(gy, r.center.y - 0.5 * r.height, r.center.y + 0.5 * r.height);
    } else {
        const auto& m = std::get<SampledMap>(obj);
        const double cell = m.pitch * m.pitch;
        for (int iy = 0; iy < m.ny; ++iy) {
            const double ky = gauss_at(gy, m.origin.y + iy * m.pitch);
            for (int ix = 0; ix < m.nx; ++ix)
                acc += weight(m.at(ix, iy)) * gauss_at(gx, m.origin.x + ix * m.pitch) * ky * cell;
        }
    }
    return scale * acc;
}

inline double background_at(const SpdcParams& p, const OpticsParams& o, KernelChoice kernel,
                            TransversePoint rho_c) {
    const AxisGaussian gx = axis_gaussian(p, o, kernel, rho_c.x / o.m_s);
    const AxisGaussian gy = axis_gaussian(p, o, kernel, rho_c.y / o.m_s);
    return kernel_scale(p, kernel) * gauss_total(gx) * gauss_total(gy);
}

inline void parallel_rows(int ny, long long work_per_row, const std::function<void(int)>& row_fn) {
    const unsigned hw = std::thread::hardware_concurrency();
    const long long total = work_per_row * ny;
    if (hw < 2 || ny < 4 || total < 200000) {
        for (int iy = 0; iy < ny; ++iy) row_fn(iy);
        return;
    }
    const int nthreads = static_cast<int>(std::min<unsigned>(hw, 8));
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t)
        pool.emplace_back([&, t] {
            for (int iy = t; iy < ny; iy += nthreads) row_fn(iy);
        });
    for (auto& th : pool) th.join();
}

inline long long element_count(const SceneObject& obj) {
    if (const auto* ps = std::get_if<PointSet>(&obj)) return static_cast<long long>(ps->points.size());
    if (const auto* ra = std::get_if<RectApertures>(&obj)) return static_cast<long long>(ra->rects.size());
    const auto& m = std::get<SampledMap>(obj);
    return static_cast<long long>(m.nx) * m.ny;
}

inline void check_inputs(const SpdcParams& p, const OpticsParams& o, const SceneObject& obj,
                         const CameraGrid& cam) {
    validate(p);
    validate(o);
    validate(obj);
    validate(cam);
    if (const auto* m = std::get_if<SampledMap>(&obj)) {
        const double max_pitch = object_plane_sigma(p, o.m_i) / 4.0;
        if (m->pitch > max_pitch)
            throw numeric_error("SampledMap pitch " + std::to_string(m->pitch) +
                                " m cannot resolve the imaging kernel; required pitch <= " +
                                std::to_string(max_pitch) + " m");
    }
}

inline ImageMeta make_meta(const SpdcParams& p, const OpticsParams& o, const SceneObject& obj,
                           ImageKind kind, KernelChoice kernel) {
    ImageMeta meta{p, o, describe(obj), kind, kernel, {}};
    if (kernel == KernelChoice::reduced) {
        const double r = reduced_kernel_validity(p);
        if (r > kValidityThreshold)
            meta.warnings.push_back("reduced-kernel validity ratio " + std::to_string(r) +
                                    " exceeds threshold " + std::to_string(kValidityThreshold) +
                                    "; pump envelope is not flat across the correlation width");
    }
    return meta;
}

} // namespace detail

/// Interference count rate per pixel: background plus the phase-weighted
/// transmission integral. The background is the kernel's full object-plane
/// integral (constant across pixels for the reduced kernel).
inline ImageResult count_rate(const SpdcParams& p, const OpticsParams& o, const SceneObject& obj,
                              const CameraGrid& cam, KernelChoice kernel = KernelChoice::reduced) {
    detail::check_inputs(p, o, obj, cam);
    ImageResult result{cam, std::vector<double>(static_cast<size_t>(cam.nx) * cam.ny),
                       detail::make_meta(p, o, obj, ImageKind::count_rate, kernel)};
    const double phi = o.phi_in;
    detail::WeightFn w = [phi](const std::complex<double>& t) {
        return detail::interference_weight(t, phi);
    };
    detail::parallel_rows(cam.ny, (detail::element_count(obj) + 4) * cam.nx, [&](int iy) {
        for (int ix = 0; ix < cam.nx; ++ix) {
            const TransversePoint rc = cam.position(ix, iy);
            result.values[static_cast<size_t>(iy) * cam.nx + ix] =
                detail::background_at(p, o, kernel, rc) + detail::modulation_at(p, o, kernel, obj, rc, w);
        }
    });
    return result;
}

/// Absorptive image function: the difference of the two interference outputs,
/// 2 * integral of kernel * |T|. Background-free and nonnegative.
inline ImageResult image_function(const SpdcParams& p, const OpticsParams& o, const SceneObject& obj,
                                  const CameraGrid& cam, KernelChoice kernel = KernelChoice::reduced) {
    detail::check_inputs(p, o, obj, cam);
    ImageResult result{cam, std::vector<double>(static_cast<size_t>(cam.nx) * cam.ny),
                       detail::make_meta(p, o, obj, ImageKind::image_function, kernel)};
    detail::WeightFn w = [](const std::complex<double>& t) { return std::abs(t); };
    detail::parallel_rows(cam.ny, (detail::element_count(obj) + 4) * cam.nx, [&](int iy) {
        for (int ix = 0; ix < cam.nx; ++ix) {
            const TransversePoint rc = cam.position(ix, iy);
            result.values[static_cast<size_t>(iy) * cam.nx + ix] =
                2.0 * detail::modulation_at(p, o, kernel, obj, rc, w);
        }
    });
    return result;
}

/// Continuous cut of the image function along the camera x axis (y_c = 0).
inline std::function<double(double)> image_xcut(const SpdcParams& p, const OpticsParams& o,
                                                const SceneObject& obj,
                                                KernelChoice kernel = KernelChoice::reduced) {
    validate(p);
    validate(o);
    validate(obj);
    detail::WeightFn w = [](const std::complex<double>& t) { return std::abs(t); };
    return [=](double x_c) {
        return 2.0 * detail::modulation_at(p, o, kernel, obj, {x_c, 0.0}, w);
    };
}

enum class RenderMode { raw, peak_normalized };

/// Scalar raster of an image result; peak-normalized division by the maximum.
inline std::vector<double> render(const ImageResult& result, RenderMode mode) {
    for (double v : result.values)
        if (!std::isfinite(v)) throw numeric_error("render: non-finite field value");
    if (mode == RenderMode::raw) return result.values;
    const double peak = *std::max_element(result.values.begin(), result.values.end());
    if (!(peak > 0.0)) throw numeric_error("render: cannot peak-normalize an all-zero field");
    std::vector<double> out(result.values.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = result.values[i] / peak;
    return out;
}

} // namespace qiup
