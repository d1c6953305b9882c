// Acceptance suite: every pinned behavior of the toolkit, one pass/fail line
// per criterion. Run with no arguments for the whole suite, `--only N` for a
// single criterion, `--list` to enumerate them. The exit code is the number of
// failed criteria.

#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qiup/imaging.hpp"
#include "qiup/resolution.hpp"
#include "qiup/spdc.hpp"

using namespace qiup;

namespace {

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << (detail.str().empty() ? "" : "; ") << what;
        }
    }
    void note(const std::string& what) {
        detail << (detail.str().empty() ? "" : "; ") << what;
    }
};

std::string um(double meters) {
    std::ostringstream ss;
    ss.precision(4);
    ss << meters * 1e6 << " um";
    return ss.str();
}

std::string sci(double v) {
    std::ostringstream ss;
    ss.precision(3);
    ss << std::scientific << v;
    return ss.str();
}

bool in_range(double v, double lo, double hi) { return v >= lo && v <= hi; }

const SpdcParams kNir{810e-9, 1550e-9, 2e-3, 1e-3};
const SpdcParams kMidIr{647e-9, 3e-6, 1e-3, 0.5e-3};
const OpticsParams kUnit{1.0, 1.0, 0.0};

// --- criterion bodies --------------------------------------------------------

Check criterion_constants() {
    Check c;
    const double m0 = m0_from_betamax(0.81);
    const double n = std::sqrt(m0 / (4.0 * kPi));
    c.note("m0 = " + std::to_string(m0) + ", n = " + std::to_string(n));
    c.expect(in_range(m0, 3.50, 3.59), "m0 outside [3.50, 3.59]");
    c.expect(in_range(n, 0.525, 0.535), "n outside [0.525, 0.535]");
    return c;
}

Check criterion_object_plane_spread() {
    Check c;
    const double v = psf_spread_object_plane(kMidIr, 0.2);
    c.note("delta/M = " + um(v));
    c.expect(in_range(v, 3.35e-6, 3.45e-6), "outside 3.4 +- 0.05 um");
    return c;
}

Check criterion_midir_dmin() {
    Check c;
    const auto crit = ResolutionCriterion::from_beta_max(0.81);
    const double v = d_min_analytic(kMidIr, 0.2, crit);
    c.note("d_min = " + um(v));
    c.expect(in_range(v, 6.3e-6, 6.5e-6), "outside 6.4 +- 0.1 um");
    return c;
}

Check criterion_two_point_beta() {
    Check c;
    for (const auto& [L, lo, hi] : {std::tuple{5e-3, 0.53, 0.55}, std::tuple{2e-3, 0.07, 0.09}}) {
        SpdcParams p = kNir;
        p.crystal_length = L;
        // Through the imaging engine: point pair -> image cut -> dip/peak.
        const SceneObject pair = point_pair_template()(70e-6);
        const auto prof =
            detail::sample_profile(p, kUnit, 70e-6, image_xcut(p, kUnit, pair), true, ProfileSpec{});
        const double b = beta(prof);
        c.note("beta(L=" + std::to_string(static_cast<int>(L * 1e3)) + "mm) = " + std::to_string(b));
        c.expect(in_range(b, lo, hi), "beta outside bracket");
    }
    return c;
}

Check criterion_aperture_sweep() {
    Check c;
    const auto crit = ResolutionCriterion::from_beta_max(0.81);
    double worst = 0.0;
    for (double mi : {1.0, 2.0}) {
        for (int lmm = 1; lmm <= 9; ++lmm) {
            SpdcParams p = kNir;
            p.crystal_length = lmm * 1e-3;
            OpticsParams o = kUnit;
            o.m_i = mi;
            const double analytic = d_min_analytic(p, mi, crit);
            const double numeric = d_min_numeric(p, o, rect_pair_template(1e-6), crit);
            worst = std::max(worst, std::abs(numeric - analytic) / analytic);
        }
    }
    c.note("worst |numeric-analytic|/analytic = " + sci(worst));
    c.expect(worst <= 0.03, "aperture simulation drifts past 3%");

    double worst_ratio_err = 0.0;
    for (int lmm = 1; lmm <= 9; ++lmm) {
        SpdcParams p = kNir;
        p.crystal_length = lmm * 1e-3;
        const double ratio = d_min_analytic(p, 2.0, crit) / d_min_analytic(p, 1.0, crit);
        worst_ratio_err = std::max(worst_ratio_err, std::abs(ratio - 2.0));
    }
    c.expect(worst_ratio_err < 1e-12, "MI=2 curve is not exactly twice MI=1");
    return c;
}

Check criterion_bruteforce_oracle() {
    Check c;
    const SpdcParams sets[] = {{810e-9, 1550e-9, 2e-3, 0.2e-3},
                               {810e-9, 1550e-9, 5e-3, 0.35e-3},
                               {647e-9, 3e-6, 1e-3, 0.25e-3}};
    double worst = 0.0;
    for (const auto& p : sets) {
        const auto w = amplitude_momentum_widths(p);
        const double extent = 4.5 * std::max(w.marginal_s, w.marginal_i);
        const double sig = correlation_width(p);
        const double dq_needed =
            std::min({std::min(w.conditional_s, w.conditional_i) / 2.5, 0.5 / (2.0 * sig)});
        const int count = static_cast<int>(std::ceil(2.0 * extent / dq_needed)) + 8;
        const MomentumGrid grid{extent, count};

        const TransversePoint probes[][2] = {
            {{0.0, 0.0}, {0.0, 0.0}},
            {{0.8 * sig, 0.0}, {0.0, 0.0}},
            {{0.5 * sig, 0.3 * sig}, {-0.4 * sig, 0.2 * sig}},
            {{-0.6 * sig, 0.5 * sig}, {-0.5 * sig, 0.6 * sig}},
            {{2.0 * sig, 0.0}, {2.0 * sig, 0.0}},
        };
        const double bf0 = joint_density_bruteforce(p, probes[0][0], probes[0][1], grid);
        const double cf0 = joint_density_full(p, probes[0][0], probes[0][1]);
        for (const auto& pr : probes) {
            const double bf = joint_density_bruteforce(p, pr[0], pr[1], grid) / bf0;
            const double cf = joint_density_full(p, pr[0], pr[1]) / cf0;
            worst = std::max(worst, std::abs(bf - cf) / cf);
        }
    }
    c.note("worst relative deviation = " + sci(worst));
    c.expect(worst <= 1e-2, "momentum-space sum disagrees with the closed form");
    return c;
}

Check criterion_normalization() {
    Check c;
    double worst = 0.0;
    for (const auto& p : oracles::random_params(10)) {
        const double integral = oracles::normalization_quadrature(p);
        worst = std::max(worst, std::abs(integral - 1.0));
    }
    c.note("worst |integral - 1| = " + sci(worst));
    c.expect(worst <= 1e-3, "full density does not integrate to 1");
    return c;
}

Check criterion_properties() {
    Check c;
    const auto crit = ResolutionCriterion::from_beta_max(0.81);

    SpdcParams swapped = kNir;
    std::swap(swapped.lambda_s, swapped.lambda_i);
    c.expect(psf_spread(kNir, 1.0) == psf_spread(swapped, 1.0), "spread changes under wavelength swap");
    c.expect(psf_spread_object_plane(kNir, 0.5) == psf_spread_object_plane(swapped, 0.5),
             "object-plane spread changes under wavelength swap");
    c.expect(d_min_analytic(kNir, 1.0, crit) == d_min_analytic(swapped, 1.0, crit),
             "d_min changes under wavelength swap");

    SpdcParams quad = kNir;
    quad.crystal_length *= 4.0;
    const double scale = d_min_analytic(quad, 1.0, crit) / d_min_analytic(kNir, 1.0, crit);
    c.expect(std::abs(scale - 2.0) <= 1e-9, "sqrt(L) scaling violated");

    // Complementarity of the two interferometer outputs.
    RectApertures obj;
    obj.rects.push_back({{5e-6, -3e-6}, 9e-6, 7e-6, 0.5});
    const CameraGrid cam{33, 33, 2e-6, {0.0, 0.0}};
    OpticsParams plus = kUnit, minus = kUnit;
    plus.phi_in = 0.0;
    minus.phi_in = kPi;
    const auto rp = count_rate(kNir, plus, obj, cam);
    const auto rm = count_rate(kNir, minus, obj, cam);
    double lo = 1e300, hi = -1e300;
    for (size_t i = 0; i < rp.values.size(); ++i) {
        const double s = rp.values[i] + rm.values[i];
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    const double ripple = (hi - lo) / (0.5 * (hi + lo));
    c.note("complementarity ripple = " + sci(ripple));
    c.expect(ripple <= 1e-6, "sum of complementary outputs is not flat");

    // Dip/peak ratio: monotone in separation, pinned to 1 in the merged regime.
    const double d_merge =
        std::sqrt(0.5 * kNir.crystal_length * kNir.wavelength_sum() / kPi);
    double prev = 1.0 + 1e-12;
    bool monotone = true;
    for (int i = 1; i <= 50; ++i) {
        const double d = d_merge * (1.0 + 9.0 * i / 50.0);
        const double b = beta(two_point_profile(kNir, kUnit, d));
        if (b > prev + 1e-12) monotone = false;
        prev = b;
    }
    c.expect(monotone, "beta is not non-increasing in d");
    c.expect(beta(two_point_profile(kNir, kUnit, 0.9 * d_merge)) == 1.0,
             "beta != 1 in the merged regime");
    return c;
}

Check criterion_length_discrepancy() {
    Check c;
    const auto crit = ResolutionCriterion::from_beta_max(0.81);
    SpdcParams p2 = kNir, p5 = kNir;
    p2.crystal_length = 2e-3;
    p5.crystal_length = 5e-3;
    const double d2 = d_min_analytic(p2, 1.0, crit);
    const double d5 = d_min_analytic(p5, 1.0, crit);
    c.note("d_min(L=2mm) = " + um(d2) + ", d_min(L=5mm) = " + um(d5) +
           "; a quoted 58 um matches the L=5mm value, not L=2mm");
    c.expect(in_range(d2, 35.9e-6, 36.9e-6), "L=2mm value outside 36.4 +- 0.5 um");
    c.expect(in_range(d5, 57.1e-6, 58.1e-6), "L=5mm value outside 57.6 +- 0.5 um");
    return c;
}

struct Criterion {
    int id;
    std::string name;
    std::function<Check()> run;
};

const std::vector<Criterion> kCriteria = {
    {1, "two-point criterion constants for beta_max=0.81: m0 in [3.50,3.59], n in [0.525,0.535]",
     criterion_constants},
    {2, "object-plane spread, L=1mm 647nm/3um MI=1/5: 3.4 +- 0.05 um", criterion_object_plane_spread},
    {3, "analytic d_min, same configuration, beta_max=0.81: 6.4 +- 0.1 um", criterion_midir_dmin},
    {4, "two points d=70um at 810/1550nm: beta 0.54 +- 0.01 (L=5mm), 0.08 +- 0.01 (L=2mm)",
     criterion_two_point_beta},
    {5, "1um aperture pairs, L=1..9mm, MI in {1,2}: numeric within 3% of analytic; MI=2 curve exactly 2x",
     criterion_aperture_sweep},
    {6, "momentum-space brute-force density matches the closed form within 1e-2 at 5 probes, 3 sets",
     criterion_bruteforce_oracle},
    {7, "full joint density integrates to 1 +- 1e-3 for 10 random parameter sets",
     criterion_normalization},
    {8, "property suite: wavelength-swap exactness, sqrt(L) scaling, complementarity, beta monotonicity and merge",
     criterion_properties},
    {9, "d_min(L=2mm) = 36.4 +- 0.5 um while 58 um corresponds to L=5mm (57.6 +- 0.5 um)",
     criterion_length_discrepancy},
};

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--list") == 0) {
            for (const auto& c : kCriteria) std::cout << c.id << ": " << c.name << "\n";
            return 0;
        }
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
    }

    int failures = 0;
    for (const auto& c : kCriteria) {
        if (only != 0 && c.id != only) continue;
        const Check result = c.run();
        std::cout << (result.ok ? "[PASS]" : "[FAIL]") << " criterion " << c.id << ": " << c.name;
        if (!result.detail.str().empty()) std::cout << " (" << result.detail.str() << ")";
        std::cout << "\n";
        if (!result.ok) ++failures;
    }
    return failures;
}
