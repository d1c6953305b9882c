#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "qiup/errors.hpp"

// Biphoton joint position probability density of a non-degenerate SPDC source
// in the Gaussian phase-matching approximation, in full, reduced, and
// brute-force (momentum-space summation) forms. All lengths in meters.

namespace qiup {

inline constexpr double kPi = std::numbers::pi;

/// Transverse-plane coordinate (m).
struct TransversePoint {
    double x = 0.0;
    double y = 0.0;
};

/// Source physics: wavelengths, crystal length, pump waist.
/// Derived quantities (pump wavelength, normalization) are always recomputed.
struct SpdcParams {
    double lambda_s = 0.0;       ///< signal (detected) wavelength, m
    double lambda_i = 0.0;       ///< idler (undetected) wavelength, m
    double crystal_length = 0.0; ///< m
    double pump_waist = 0.0;     ///< Gaussian pump beam waist, m

    double wavelength_sum() const { return lambda_s + lambda_i; }

    /// Harmonic-sum pump wavelength lambda_s*lambda_i/(lambda_s+lambda_i).
    double pump_wavelength() const;

    /// Normalization of the full joint density: 8/(pi * L * w_p^2 * (lambda_s+lambda_i)), 1/m^4.
    double norm_full() const {
        return 8.0 / (kPi * crystal_length * pump_waist * pump_waist * wavelength_sum());
    }
};

inline void validate(const SpdcParams& p) {
    if (!(p.lambda_s > 0.0) || !(p.lambda_i > 0.0))
        throw invalid_parameter("SpdcParams: wavelengths must be > 0");
    if (!(p.crystal_length > 0.0))
        throw invalid_parameter("SpdcParams: crystal_length must be > 0");
    if (!(p.pump_waist > 0.0))
        throw invalid_parameter("SpdcParams: pump_waist must be > 0");
}

inline double pump_wavelength(double lambda_s, double lambda_i) {
    if (!(lambda_s > 0.0) || !(lambda_i > 0.0))
        throw invalid_parameter("pump_wavelength: wavelengths must be > 0");
    return lambda_s * lambda_i / (lambda_s + lambda_i);
}

inline double SpdcParams::pump_wavelength() const {
    return qiup::pump_wavelength(lambda_s, lambda_i);
}

namespace detail {
inline double norm2(double x, double y) { return x * x + y * y; }
} // namespace detail

/// Slowly varying pump-envelope factor exp[-2|lambda_i rho_s + lambda_s rho_i|^2 / (w_p^2 (lambda_s+lambda_i)^2)].
inline double pump_factor(const SpdcParams& p, TransversePoint rho_s, TransversePoint rho_i) {
    const double lam_sum = p.wavelength_sum();
    const double vx = p.lambda_i * rho_s.x + p.lambda_s * rho_i.x;
    const double vy = p.lambda_i * rho_s.y + p.lambda_s * rho_i.y;
    const double denom = p.pump_waist * p.pump_waist * lam_sum * lam_sum;
    return std::exp(-2.0 * detail::norm2(vx, vy) / denom);
}

/// Position-correlation factor exp[-4 pi |rho_s - rho_i|^2 / (L (lambda_s+lambda_i))].
inline double diff_factor(const SpdcParams& p, TransversePoint rho_s, TransversePoint rho_i) {
    const double ux = rho_s.x - rho_i.x;
    const double uy = rho_s.y - rho_i.y;
    return std::exp(-4.0 * kPi * detail::norm2(ux, uy) / (p.crystal_length * p.wavelength_sum()));
}

/// Full normalized joint density P(rho_s, rho_i), 1/m^4. Integrates to 1 over R^4.
inline double joint_density_full(const SpdcParams& p, TransversePoint rho_s, TransversePoint rho_i) {
    validate(p);
    return p.norm_full() * pump_factor(p, rho_s, rho_i) * diff_factor(p, rho_s, rho_i);
}

/// Reduced kernel: the correlation factor alone, normalization set to 1.
/// Value in (0,1], equal to 1 iff rho_s == rho_i.
inline double joint_density_reduced(const SpdcParams& p, TransversePoint rho_s, TransversePoint rho_i) {
    validate(p);
    return diff_factor(p, rho_s, rho_i);
}

/// 1/e radius of the reduced kernel in |rho_s - rho_i|: sqrt(L (lambda_s+lambda_i) / (4 pi)).
inline double correlation_width(const SpdcParams& p) {
    return std::sqrt(p.crystal_length * p.wavelength_sum() / (4.0 * kPi));
}

/// Ratio r = width(correlation term) / width(pump term). Small r means the pump
/// envelope is flat across one correlation width and the reduced kernel is safe.
/// Callers compare against kValidityThreshold.
inline constexpr double kValidityThreshold = 0.1;

inline double reduced_kernel_validity(const SpdcParams& p) {
    validate(p);
    const double lam_max = std::max(p.lambda_s, p.lambda_i);
    const double pump_width = p.pump_waist * p.wavelength_sum() / (std::sqrt(2.0) * lam_max);
    return correlation_width(p) / pump_width;
}

namespace detail {
// sin(x)/x with the removable singularity handled analytically.
inline double sinc(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

// Coefficient of the phase-matching exponent: L lambda_p lambda_s / (8 pi lambda_i), m^2.
inline double phase_matching_coeff(const SpdcParams& p) {
    return p.crystal_length * p.pump_wavelength() * p.lambda_s / (8.0 * kPi * p.lambda_i);
}
} // namespace detail

/// Sinc phase-matching amplitude sinc(a |q_s - (lambda_i/lambda_s) q_i|^2),
/// a = L lambda_p lambda_s / (8 pi lambda_i). Momenta in 1/m.
inline double phase_matching_sinc(const SpdcParams& p, TransversePoint q_s, TransversePoint q_i) {
    validate(p);
    const double kappa = p.lambda_i / p.lambda_s;
    const double dx = q_s.x - kappa * q_i.x;
    const double dy = q_s.y - kappa * q_i.y;
    return detail::sinc(detail::phase_matching_coeff(p) * detail::norm2(dx, dy));
}

/// Gaussian biphoton amplitude (unnormalized):
/// exp(-|q_s+q_i|^2 w_p^2 / 4) * exp(-a |q_s - (lambda_i/lambda_s) q_i|^2).
inline double amplitude_c(const SpdcParams& p, TransversePoint q_s, TransversePoint q_i) {
    validate(p);
    const double kappa = p.lambda_i / p.lambda_s;
    const double sx = q_s.x + q_i.x;
    const double sy = q_s.y + q_i.y;
    const double dx = q_s.x - kappa * q_i.x;
    const double dy = q_s.y - kappa * q_i.y;
    return std::exp(-0.25 * p.pump_waist * p.pump_waist * detail::norm2(sx, sy)
                    - detail::phase_matching_coeff(p) * detail::norm2(dx, dy));
}

/// Symmetric per-axis momentum grid for the brute-force density: `count` midpoint
/// samples on [-extent, extent].
struct MomentumGrid {
    double extent = 0.0; ///< 1/m
    int count = 0;
};

/// 1/e extents of the amplitude's marginals in q_s and q_i (grid must cover
/// several of these), plus the conditional widths the grid step must resolve.
struct MomentumWidths {
    double marginal_s = 0.0;
    double marginal_i = 0.0;
    double conditional_s = 0.0;
    double conditional_i = 0.0;
};

inline MomentumWidths amplitude_momentum_widths(const SpdcParams& p) {
    validate(p);
    const double a = detail::phase_matching_coeff(p);
    const double kappa = p.lambda_i / p.lambda_s;
    const double w2q = 0.25 * p.pump_waist * p.pump_waist;
    // Quadratic-form matrix of -log C per axis: [[A0, B0], [B0, C0]].
    const double a0 = w2q + a;
    const double c0 = w2q + a * kappa * kappa;
    const double det = w2q * a * (1.0 + kappa) * (1.0 + kappa);
    MomentumWidths w;
    w.marginal_s = std::sqrt(c0 / det);
    w.marginal_i = std::sqrt(a0 / det);
    w.conditional_s = 1.0 / std::sqrt(a0);
    w.conditional_i = 1.0 / std::sqrt(c0);
    return w;
}

namespace detail {
// One transverse axis of the momentum-space sum:
// |sum_{j,k} C(q_j, q_k) exp(i (q_j x_s + q_k x_i))|^2 * dq^4.
inline double bruteforce_axis(const SpdcParams& p, double x_s, double x_i, const MomentumGrid& grid) {
    const int n = grid.count;
    const double dq = 2.0 * grid.extent / n;
    const double a = phase_matching_coeff(p);
    const double kappa = p.lambda_i / p.lambda_s;
    const double w2q = 0.25 * p.pump_waist * p.pump_waist;

    std::vector<double> q(n);
    for (int j = 0; j < n; ++j) q[j] = -grid.extent + (j + 0.5) * dq;

    std::complex<double> acc(0.0, 0.0);
    for (int j = 0; j < n; ++j) {
        std::complex<double> inner(0.0, 0.0);
        for (int k = 0; k < n; ++k) {
            const double s = q[j] + q[k];
            const double d = q[j] - kappa * q[k];
            const double c = std::exp(-w2q * s * s - a * d * d);
            inner += c * std::polar(1.0, q[k] * x_i);
        }
        acc += inner * std::polar(1.0, q[j] * x_s);
    }
    return std::norm(acc) * dq * dq * dq * dq;
}
} // namespace detail

/// Direct momentum-space evaluation of the joint density (unnormalized):
/// the Fourier sum over the Gaussian amplitude, computed per axis and multiplied.
/// Throws when the grid cannot cover or resolve the summand for these inputs.
inline double joint_density_bruteforce(const SpdcParams& p, TransversePoint rho_s,
                                       TransversePoint rho_i, const MomentumGrid& grid) {
    validate(p);
    if (grid.count < 32)
        throw invalid_parameter("joint_density_bruteforce: grid count must be >= 32, got " +
                                std::to_string(grid.count));
    const MomentumWidths w = amplitude_momentum_widths(p);
    const double required_extent = 4.0 * std::max(w.marginal_s, w.marginal_i);
    if (!(grid.extent >= required_extent))
        throw numeric_error("joint_density_bruteforce: grid extent " + std::to_string(grid.extent) +
                            " 1/m does not cover the amplitude; required extent >= " +
                            std::to_string(required_extent) + " 1/m");
    const double dq = 2.0 * grid.extent / grid.count;
    const double max_coord =
        std::max({std::abs(rho_s.x), std::abs(rho_s.y), std::abs(rho_i.x), std::abs(rho_i.y)});
    const double dq_ridge = std::min(w.conditional_s, w.conditional_i) / 2.5;
    const double dq_phase = max_coord > 0.0 ? 0.5 / max_coord : dq_ridge;
    const double dq_required = std::min(dq_ridge, dq_phase);
    if (dq > dq_required) {
        const int required_count = static_cast<int>(std::ceil(2.0 * grid.extent / dq_required));
        throw numeric_error("joint_density_bruteforce: grid step " + std::to_string(dq) +
                            " 1/m too coarse; need count >= " + std::to_string(required_count) +
                            " at this extent");
    }
    return detail::bruteforce_axis(p, rho_s.x, rho_i.x, grid) *
           detail::bruteforce_axis(p, rho_s.y, rho_i.y, grid);
}

} // namespace qiup
