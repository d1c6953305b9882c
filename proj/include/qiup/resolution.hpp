#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "qiup/errors.hpp"
#include "qiup/imaging.hpp"
#include "qiup/spdc.hpp"

// Resolution metrology: PSF spread, two-point dip-to-peak ratio, the
// beta_max <-> m0 correspondence, and minimum resolvable distance in analytic,
// numeric (aperture simulation) and far-field-comparison forms.

namespace qiup {

namespace detail {

// Golden-section maximizer for a unimodal function on [a, b].
inline std::pair<double, double> golden_max(const std::function<double(double)>& f, double a,
                                            double b, double tol_x) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol_x) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    const double xm = 0.5 * (a + b);
    return {xm, f(xm)};
}

// Dimensionless two-point model g(v) = exp(-s(v-1)^2) + exp(-s(v+1)^2):
// unit-height point images at v = +-1. The central dip exists iff s > 1/2.
inline double two_gauss(double v, double s) {
    const double a = v - 1.0, b = v + 1.0;
    return std::exp(-s * a * a) + std::exp(-s * b * b);
}

inline double two_gauss_beta(double s) {
    if (s <= 0.5) return 1.0;
    auto g = [s](double v) { return two_gauss(v, s); };
    const auto [vp, gp] = golden_max(g, 0.0, 2.0, 1e-12);
    (void)vp;
    return std::min(two_gauss(0.0, s) / gp, 1.0);
}

} // namespace detail

/// Solves the two-Gaussian model for the separation exponent matching a
/// dip-to-peak ratio beta_max; returns m0 = 4 s (the cross-evaluation exponent
/// of one point's image at the other's nominal peak).
inline double m0_from_betamax(double beta_max) {
    if (!(beta_max > 0.0) || !(beta_max < 1.0))
        throw invalid_parameter("m0_from_betamax: beta_max must lie in (0,1)");
    double lo = 0.5, hi = 1.0;
    while (detail::two_gauss_beta(hi) > beta_max) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) throw numeric_error("m0_from_betamax: failed to bracket beta_max");
    }
    // beta is strictly decreasing in s beyond the merge point.
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (detail::two_gauss_beta(mid) > beta_max)
            lo = mid;
        else
            hi = mid;
    }
    return 4.0 * 0.5 * (lo + hi);
}

/// Two-point resolvability criterion. m0 and beta_max are tied one-to-one;
/// the prefactor n = sqrt(m0 / 4 pi) enters the minimum-distance formula.
struct ResolutionCriterion {
    double beta_max = 0.0;
    double m0 = 0.0;

    double n() const { return std::sqrt(m0 / (4.0 * kPi)); }

    static ResolutionCriterion from_beta_max(double beta_max) {
        return {beta_max, m0_from_betamax(beta_max)};
    }
};

/// Camera-plane 1/e radius of the point image: (|M_s| / (2 sqrt(pi))) sqrt(L (lambda_s+lambda_i)).
inline double psf_spread(const SpdcParams& p, double m_s) {
    validate(p);
    return std::abs(m_s) / (2.0 * std::sqrt(kPi)) *
           std::sqrt(p.crystal_length * p.wavelength_sum());
}

/// Object-plane spread: the camera spread divided by the total magnification.
inline double psf_spread_object_plane(const SpdcParams& p, double m_i) {
    validate(p);
    return std::abs(m_i) / (2.0 * std::sqrt(kPi)) *
           std::sqrt(p.crystal_length * p.wavelength_sum());
}

/// 1D cut G(x_c, 0) of a two-point image plus the continuous evaluator the
/// dip/peak analysis refines on.
struct TwoPointProfile {
    std::vector<double> x; ///< camera-axis samples, symmetric about 0
    std::vector<double> g;
    double separation = 0.0;
    SpdcParams spdc;
    OpticsParams optics;
    std::function<double(double)> eval;
    bool ideal_points = true; ///< true when the generating object is a delta pair
};

struct ProfileSpec {
    double half_range = 0.0;        ///< 0 = choose |M| d/2 + 5 spreads automatically
    int samples_per_spread = 64;
};

namespace detail {

inline TwoPointProfile sample_profile(const SpdcParams& p, const OpticsParams& o, double d,
                                      const std::function<double(double)>& eval, bool ideal,
                                      const ProfileSpec& spec) {
    const double spread = psf_spread(p, o.m_s);
    double half = spec.half_range;
    if (half <= 0.0) half = 0.5 * std::abs(o.magnification()) * d + 5.0 * spread;
    const int per_spread = std::max(spec.samples_per_spread, 64);
    const int half_count = static_cast<int>(std::ceil(half / (spread / per_spread)));
    TwoPointProfile prof;
    prof.separation = d;
    prof.spdc = p;
    prof.optics = o;
    prof.eval = eval;
    prof.ideal_points = ideal;
    prof.x.reserve(2 * half_count + 1);
    prof.g.reserve(2 * half_count + 1);
    const double step = half / half_count;
    for (int i = -half_count; i <= half_count; ++i) {
        prof.x.push_back(i * step);
        prof.g.push_back(eval(i * step));
    }
    return prof;
}

} // namespace detail

/// Closed-form two-point image along the camera x axis:
/// G(x_c) = exp[-c (x_c/M_s - d/2M_I)^2] + exp[-c (x_c/M_s + d/2M_I)^2],
/// c = 4 pi / (L (lambda_s+lambda_i)). Each point image has unit height.
inline TwoPointProfile two_point_profile(const SpdcParams& p, const OpticsParams& o, double d,
                                         const ProfileSpec& spec = {}) {
    validate(p);
    validate(o);
    if (!(d >= 0.0)) throw invalid_parameter("two_point_profile: separation must be >= 0");
    const double c = 4.0 * kPi / (p.crystal_length * p.wavelength_sum());
    const double m_s = o.m_s, m_i = o.m_i;
    auto eval = [c, m_s, m_i, d](double x_c) {
        const double u = x_c / m_s - 0.5 * d / m_i;
        const double v = x_c / m_s + 0.5 * d / m_i;
        return std::exp(-c * u * u) + std::exp(-c * v * v);
    };
    return detail::sample_profile(p, o, d, eval, true, spec);
}

/// Dimensionless separation parameter pi d^2 / (L (lambda_s+lambda_i) M_I^2);
/// the two-point image has a central dip iff this exceeds 1/2.
inline double separation_parameter(const TwoPointProfile& prof) {
    const double d = prof.separation;
    const double mi = prof.optics.m_i;
    return kPi * d * d / (prof.spdc.crystal_length * prof.spdc.wavelength_sum() * mi * mi);
}

/// Dip-to-peak ratio of a two-point profile. The dip is taken at x_c = 0, the
/// peak is refined by golden section near the sampled maximum. Returns exactly
/// 1 in the merged (single-hump) regime.
inline double beta(const TwoPointProfile& prof) {
    const size_t n = prof.x.size();
    if (n < 5 || prof.g.size() != n)
        throw invalid_parameter("beta: profile must carry matching x/g samples");
    double gmax = 0.0;
    for (double v : prof.g) gmax = std::max(gmax, std::abs(v));
    for (size_t i = 0; i < n; ++i) {
        if (std::abs(prof.x[i] + prof.x[n - 1 - i]) > 1e-9 * std::abs(prof.x.back()) ||
            std::abs(prof.g[i] - prof.g[n - 1 - i]) > 1e-6 * gmax)
            throw numeric_error("beta: profile is not symmetric about x_c = 0");
    }
    if (prof.ideal_points && separation_parameter(prof) <= 0.5) return 1.0;

    const double dip = prof.eval(0.0);
    const size_t center = n / 2;
    size_t k = center;
    for (size_t i = center; i < n; ++i)
        if (prof.g[i] > prof.g[k]) k = i;
    if (k + 1 >= n)
        throw numeric_error("beta: profile peak at the sampling boundary; enlarge the range");

    const double spread = psf_spread(prof.spdc, prof.optics.m_s);
    const double tol = 1e-6 * std::max(spread, std::abs(prof.x[k]));
    const double lo = (k == center) ? 0.0 : prof.x[k - 1];
    const double hi = prof.x[k + 1];
    const auto [xp, peak] = detail::golden_max(prof.eval, lo, hi, tol);
    (void)xp;
    if (!(peak > dip)) return 1.0;
    return std::min(dip / peak, 1.0);
}

/// Minimum resolvable object-plane distance n(m0) * |M_I| * sqrt(L (lambda_s+lambda_i)).
inline double d_min_analytic(const SpdcParams& p, double m_i, const ResolutionCriterion& crit) {
    validate(p);
    if (m_i == 0.0) throw invalid_parameter("d_min_analytic: m_i must be nonzero");
    if (!(crit.m0 > 0.0)) throw invalid_parameter("d_min_analytic: criterion m0 must be > 0");
    return crit.n() * std::abs(m_i) * std::sqrt(p.crystal_length * p.wavelength_sum());
}

/// Builds the object for a given center-to-center separation.
using SeparationTemplate = std::function<SceneObject(double)>;

inline SeparationTemplate point_pair_template() {
    return [](double d) {
        PointSet ps;
        ps.points.push_back({{+0.5 * d, 0.0}, 1.0});
        ps.points.push_back({{-0.5 * d, 0.0}, 1.0});
        return SceneObject{ps};
    };
}

inline SeparationTemplate rect_pair_template(double side, std::complex<double> transmission = 1.0) {
    return [side, transmission](double d) {
        RectApertures ra;
        ra.rects.push_back({{+0.5 * d, 0.0}, side, side, transmission});
        ra.rects.push_back({{-0.5 * d, 0.0}, side, side, transmission});
        return SceneObject{ra};
    };
}

/// Simulated minimum resolvable distance: bisects the separation of the
/// templated object pair until the imaged dip-to-peak ratio meets beta_max.
inline double d_min_numeric(const SpdcParams& p, const OpticsParams& o,
                            const SeparationTemplate& make_pair, const ResolutionCriterion& crit,
                            KernelChoice kernel = KernelChoice::reduced, double rel_tol = 1e-3) {
    validate(p);
    validate(o);
    if (!(crit.beta_max > 0.0) || !(crit.beta_max < 1.0))
        throw invalid_parameter("d_min_numeric: beta_max must lie in (0,1)");
    auto beta_of = [&](double d) {
        const SceneObject obj = make_pair(d);
        const bool ideal = std::holds_alternative<PointSet>(obj);
        const TwoPointProfile prof =
            detail::sample_profile(p, o, d, image_xcut(p, o, obj, kernel), ideal, ProfileSpec{});
        return beta(prof);
    };
    const double d0 = d_min_analytic(p, o.m_i, crit);
    double lo = 0.2 * d0, hi = 5.0 * d0;
    const double beta_lo = beta_of(lo), beta_hi = beta_of(hi);
    if (!(beta_lo >= crit.beta_max && beta_hi <= crit.beta_max))
        throw numeric_error("d_min_numeric: beta range [" + std::to_string(beta_hi) + ", " +
                            std::to_string(beta_lo) + "] over the separation bracket does not cross "
                            "beta_max = " + std::to_string(crit.beta_max));
    while (hi - lo > rel_tol * 0.5 * (hi + lo)) {
        const double mid = 0.5 * (lo + hi);
        if (beta_of(mid) > crit.beta_max)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// Far-field (momentum-correlation) comparison value 0.42 f_I lambda_I / w_p.
inline double d_min_farfield(double f_i, double lambda_i, double w_p) {
    if (!(f_i > 0.0) || !(lambda_i > 0.0) || !(w_p > 0.0))
        throw invalid_parameter("d_min_farfield: all arguments must be > 0");
    return 0.42 * f_i * lambda_i / w_p;
}

} // namespace qiup
