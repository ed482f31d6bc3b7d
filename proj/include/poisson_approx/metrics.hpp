#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "poisson_approx/errors.hpp"
#include "poisson_approx/lattice.hpp"

namespace poisson_approx {

struct DistanceEstimate {
    double estimate = 0.0;
    double uncertainty = 0.0;
};

// Right-continuous distribution function: total weight at atoms <= x.
// Points within 1e-9*step below an atom count as hitting it.
inline double cdf_at(const LatticeDistribution& f, double x) {
    const std::int64_t k = detail::lattice_floor(x, f.step()) - f.origin();
    if (k < 0) return 0.0;
    const std::size_t n = f.size();
    const std::size_t upto = std::min<std::size_t>(static_cast<std::size_t>(k) + 1, n);
    double acc = 0.0;
    for (std::size_t i = 0; i < upto; ++i) acc += f.weights()[i];
    return acc;
}

namespace detail {

// Prefix-sum view of a lattice CDF; evaluation is O(1) via index arithmetic.
struct CdfCache {
    explicit CdfCache(const LatticeDistribution& law)
        : step(law.step()), origin(law.origin()), prefix(law.size()) {
        double acc = 0.0;
        for (std::size_t i = 0; i < law.size(); ++i) {
            acc += law.weights()[i];
            prefix[i] = acc;
        }
    }

    double at(double x) const {
        const std::int64_t k = lattice_floor(x, step) - origin;
        if (k < 0) return 0.0;
        if (k >= static_cast<std::int64_t>(prefix.size())) return prefix.back();
        return prefix[static_cast<std::size_t>(k)];
    }

    double step;
    std::int64_t origin;
    std::vector<double> prefix;
};

// Walks the union support of two same-step laws in index order, invoking
// visit(value, cdf_f, cdf_g, w_f, w_g) at every atom of either law.
template <typename Visitor>
inline void walk_union(const LatticeDistribution& f, const LatticeDistribution& g,
                       Visitor&& visit) {
    if (!steps_match(f.step(), g.step())) {
        throw IncompatibleLattice("distance requires equal lattice steps");
    }
    const std::int64_t lo = std::min(f.origin(), g.origin());
    const std::int64_t hi = std::max(f.origin() + static_cast<std::int64_t>(f.size()),
                                     g.origin() + static_cast<std::int64_t>(g.size()));
    double cf = 0.0;
    double cg = 0.0;
    for (std::int64_t idx = lo; idx < hi; ++idx) {
        const std::int64_t fi = idx - f.origin();
        const std::int64_t gi = idx - g.origin();
        const double wf =
            (fi >= 0 && fi < static_cast<std::int64_t>(f.size())) ? f.weights()[fi] : 0.0;
        const double wg =
            (gi >= 0 && gi < static_cast<std::int64_t>(g.size())) ? g.weights()[gi] : 0.0;
        if (wf == 0.0 && wg == 0.0) continue;
        cf += wf;
        cg += wg;
        visit(static_cast<double>(idx) * f.step(), cf, cg, wf, wg);
    }
}

}  // namespace detail

// sup_x |F(x) - H(x)|. Both CDFs are constant between jump points of the
// shared lattice, so scanning the union support is exact.
inline double kolmogorov_rho(const LatticeDistribution& f, const LatticeDistribution& g) {
    double sup = 0.0;
    detail::walk_union(f, g, [&](double, double cf, double cg, double, double) {
        sup = std::max(sup, std::abs(cf - cg));
    });
    return sup;
}

// Half the atomwise L1 difference; lost mass of either side is reported as
// uncertainty, not silently folded into the estimate.
inline DistanceEstimate total_variation(const LatticeDistribution& f,
                                        const LatticeDistribution& g) {
    double l1 = 0.0;
    detail::walk_union(f, g, [&](double, double, double, double wf, double wg) {
        l1 += std::abs(wf - wg);
    });
    return {0.5 * l1, 0.5 * (f.lost_mass() + g.lost_mass())};
}

// Smallest eps with F(x-eps)-eps <= H(x) <= F(x+eps)+eps for all x,
// found by bisection to 1e-9*step. eps = 1 always satisfies the sandwich.
inline double levy_distance(const LatticeDistribution& f, const LatticeDistribution& g) {
    if (!detail::steps_match(f.step(), g.step())) {
        throw IncompatibleLattice("levy_distance requires equal lattice steps");
    }
    const detail::CdfCache cf(f);
    const detail::CdfCache cg(g);
    // one-sided check: A(x) <= B(x + eps) + eps at every breakpoint of the
    // piecewise-constant difference (atoms of A and atoms of B shifted left)
    const auto side_ok = [](const LatticeDistribution& a_law, const detail::CdfCache& a,
                            const LatticeDistribution& b_law, const detail::CdfCache& b,
                            double eps) {
        for (std::size_t i = 0; i < a_law.size(); ++i) {
            const double x = a_law.value_at(i);
            if (a.at(x) > b.at(x + eps) + eps + 1e-15) return false;
        }
        for (std::size_t i = 0; i < b_law.size(); ++i) {
            const double x = b_law.value_at(i) - eps;
            if (a.at(x) > b.at(x + eps) + eps + 1e-15) return false;
        }
        return true;
    };
    const auto ok = [&](double eps) {
        return side_ok(f, cf, g, cg, eps) && side_ok(g, cg, f, cf, eps);
    };
    double lo = 0.0;
    double hi = 1.0;
    if (ok(0.0)) return 0.0;
    const double tol = 1e-9 * f.step();
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (ok(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

// Concentration function sup_x F{[x, x+b]}: best closed window of length b.
// A window anchored at an atom covers floor(b/step)+1 lattice points.
inline double concentration_q(const LatticeDistribution& f, double b) {
    if (!(b >= 0.0)) {
        throw BadInput("concentration window length must be >= 0");
    }
    const std::int64_t span = detail::lattice_floor(b, f.step());
    const std::size_t window =
        static_cast<std::size_t>(std::min<std::int64_t>(span, static_cast<std::int64_t>(f.size()) - 1)) + 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < window; ++i) acc += f.weights()[i];
    double best = acc;
    for (std::size_t i = window; i < f.size(); ++i) {
        acc += f.weights()[i] - f.weights()[i - window];
        best = std::max(best, acc);
    }
    return best;
}

// Sorted sample with its Dvoretzky-Kiefer-Wolfowitz band half-width at
// confidence 1 - alpha.
struct EmpiricalCdf {
    std::vector<double> values;
    std::size_t sample_size = 0;
    double dkw_radius = 0.0;

    static EmpiricalCdf from_samples(std::vector<double> samples, double alpha = 0.01) {
        if (samples.empty()) {
            throw EmptySample("empirical CDF needs at least one sample");
        }
        if (!(alpha > 0.0 && alpha < 1.0)) {
            throw BadInput("confidence alpha must lie in (0,1)");
        }
        std::sort(samples.begin(), samples.end());
        EmpiricalCdf out;
        out.sample_size = samples.size();
        out.dkw_radius = std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(samples.size())));
        out.values = std::move(samples);
        return out;
    }

    double cdf(double x) const {
        const auto it = std::upper_bound(values.begin(), values.end(), x);
        return static_cast<double>(it - values.begin()) / static_cast<double>(sample_size);
    }
};

// Two-sample sup-CDF difference with the summed DKW radii as uncertainty.
inline DistanceEstimate empirical_ks(const EmpiricalCdf& a, const EmpiricalCdf& b) {
    if (a.values.empty() || b.values.empty()) {
        throw EmptySample("two-sample KS needs non-empty samples");
    }
    const double na = static_cast<double>(a.sample_size);
    const double nb = static_cast<double>(b.sample_size);
    std::size_t i = 0;
    std::size_t j = 0;
    double sup = 0.0;
    while (i < a.values.size() || j < b.values.size()) {
        double x;
        if (j == b.values.size() || (i < a.values.size() && a.values[i] <= b.values[j])) {
            x = a.values[i];
        } else {
            x = b.values[j];
        }
        while (i < a.values.size() && a.values[i] <= x) ++i;
        while (j < b.values.size() && b.values[j] <= x) ++j;
        sup = std::max(sup, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return {sup, a.dkw_radius + b.dkw_radius};
}

// One-sample sup distance between an empirical CDF and an exact lattice law.
inline double ks_vs_lattice(const EmpiricalCdf& sample, const LatticeDistribution& law) {
    if (sample.values.empty()) {
        throw EmptySample("one-sample KS needs a non-empty sample");
    }
    double sup = 0.0;
    // breakpoints of the piecewise-constant difference: sample values and atoms
    for (double x : sample.values) {
        sup = std::max(sup, std::abs(sample.cdf(x) - cdf_at(law, x)));
    }
    double cdf = 0.0;
    for (std::size_t i = 0; i < law.size(); ++i) {
        const double x = law.value_at(i);
        cdf += law.weights()[i];
        sup = std::max(sup, std::abs(sample.cdf(x) - cdf));
        // left limit at the atom
        sup = std::max(sup, std::abs(sample.cdf(x - 0.5 * law.step()) - (cdf - law.weights()[i])));
    }
    return sup;
}

}  // namespace poisson_approx
