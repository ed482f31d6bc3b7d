#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "poisson_approx/errors.hpp"
#include "poisson_approx/lattice.hpp"
#include "poisson_approx/model.hpp"

// Brute-force reference implementations. These deliberately avoid the fast
// paths (no FFT, no repeated squaring, no shared CDF walkers) so they can
// serve as independent checks for them.
namespace poisson_approx::oracle {

// Exact O(N*M) double-loop convolution.
inline LatticeDistribution convolve_direct_reference(const LatticeDistribution& f,
                                                     const LatticeDistribution& g) {
    if (!detail::steps_match(f.step(), g.step())) {
        throw IncompatibleLattice("convolve requires equal lattice steps");
    }
    if (f.size() * g.size() > 10'000'000) {
        throw TooLarge("direct convolution capped at 1e7 atom pairs");
    }
    std::vector<double> out(f.size() + g.size() - 1, 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) {
        for (std::size_t j = 0; j < g.size(); ++j) {
            out[i + j] += f.weights()[i] * g.weights()[j];
        }
    }
    const double lost = 1.0 - f.mass() * g.mass();
    return LatticeDistribution::make(f.step(), f.origin() + g.origin(), std::move(out),
                                     std::max(lost, 0.0));
}

struct SeriesResult {
    LatticeDistribution law;
    double remainder;  // Poisson tail mass beyond the truncation index
};

// Literal truncated series exp(-alpha) sum_{m<=M} alpha^m H^m / m!, with
// every power formed by the direct-summation convolution above.
inline SeriesResult compound_poisson_series(double alpha, const LatticeDistribution& h, int m_max) {
    if (!(alpha > 0.0)) {
        throw BadInput("series exponent alpha must be positive");
    }
    if (m_max < 0 || m_max > 200) {
        throw TooLarge("series truncation index capped at 200");
    }
    std::map<std::int64_t, double> acc;
    double pmf = std::exp(-alpha);
    acc[0] += pmf;  // H^0 = E_0
    LatticeDistribution term = point_mass(0.0, h.step());
    double covered = pmf;
    for (int m = 1; m <= m_max; ++m) {
        term = convolve_direct_reference(term, h);
        pmf *= alpha / static_cast<double>(m);
        covered += pmf;
        for (std::size_t i = 0; i < term.size(); ++i) {
            acc[term.origin() + static_cast<std::int64_t>(i)] += pmf * term.weights()[i];
        }
    }
    const std::int64_t lo = acc.begin()->first;
    const std::int64_t hi = acc.rbegin()->first;
    std::vector<double> w(static_cast<std::size_t>(hi - lo + 1), 0.0);
    for (const auto& [idx, weight] : acc) {
        w[static_cast<std::size_t>(idx - lo)] = weight;
    }
    const double remainder = std::max(1.0 - covered, 0.0);
    double placed = 0.0;
    for (double x : w) placed += x;
    LatticeDistribution law =
        LatticeDistribution::make(h.step(), lo, std::move(w), std::max(1.0 - placed, 0.0));
    return {std::move(law), remainder};
}

// Spectral exponentiation cross-check: exp(alpha (phi_H - 1)) on a padded
// circular grid large enough that wrap-around stays below tail_tol.
inline LatticeDistribution compound_poisson_spectral(double alpha, const LatticeDistribution& h,
                                                     double tail_tol) {
    if (!(alpha > 0.0) || alpha > 700.0) {
        throw BadInput("spectral exponent alpha must lie in (0, 700]");
    }
    if (!(tail_tol > 0.0) || tail_tol > 1e-3) {
        throw InvalidTolerance("tail tolerance must lie in (0, 1e-3]");
    }
    // series length with Poisson tail below tail_tol, for sizing the grid
    double pmf = std::exp(-alpha);
    double cdf = pmf;
    std::size_t m_max = 0;
    while (1.0 - cdf > tail_tol && pmf > 0.0) {
        ++m_max;
        pmf *= alpha / static_cast<double>(m_max);
        cdf += pmf;
    }
    const std::int64_t lo_h = std::min<std::int64_t>(h.origin(), 0);
    const std::int64_t hi_h =
        std::max<std::int64_t>(h.origin() + static_cast<std::int64_t>(h.size()) - 1, 0);
    const std::int64_t m = static_cast<std::int64_t>(m_max);
    const std::int64_t lo = m * lo_h;
    const std::int64_t hi = m * hi_h;
    std::size_t padded = 1;
    while (padded < static_cast<std::size_t>(hi - lo + 1)) padded <<= 1;
    const auto wrap = [&](std::int64_t idx) {
        const auto p = static_cast<std::int64_t>(padded);
        return static_cast<std::size_t>(((idx % p) + p) % p);
    };
    // atoms keep their true lattice index on the circle; the grid is wide
    // enough that the readout below unwraps them unambiguously
    std::vector<std::complex<double>> spec(padded, std::complex<double>(0.0, 0.0));
    for (std::size_t i = 0; i < h.size(); ++i) {
        spec[wrap(h.origin() + static_cast<std::int64_t>(i))] += h.weights()[i];
    }
    detail::fft_inplace(spec, false);
    for (auto& z : spec) {
        z = std::exp(alpha * (z - 1.0));
    }
    detail::fft_inplace(spec, true);
    std::vector<double> w(static_cast<std::size_t>(hi - lo + 1));
    double placed = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = std::max(spec[wrap(lo + static_cast<std::int64_t>(i))].real(), 0.0);
        placed += w[i];
    }
    return LatticeDistribution::make(h.step(), lo, std::move(w), std::max(1.0 - placed, 0.0));
}

// End-to-end reference for small instances: the exact sum law by full
// enumeration of atom choices, its accompanying law by the literal series,
// and the sup-CDF distance probed on a dense grid.
inline double exact_rho_small(const RareEventModel& model) {
    model.validate();
    if (model.size() > 6) {
        throw TooLarge("exact enumeration capped at 6 components");
    }
    std::vector<LatticeDistribution> laws;
    std::size_t combos = 1;
    for (std::size_t i = 0; i < model.size(); ++i) {
        if (model.components[i].u.size() > 4 || model.components[i].v.size() > 4) {
            throw TooLarge("exact enumeration capped at 4 atoms per branch law");
        }
        laws.push_back(model.mixture_law(i));
        combos *= laws.back().size();
        if (combos > (std::size_t{1} << 21)) {
            throw TooLarge("exact enumeration cap exceeded");
        }
    }

    // H1 by recursive enumeration over one atom per component
    std::map<std::int64_t, double> h1;
    std::vector<std::size_t> pick(model.size(), 0);
    while (true) {
        std::int64_t idx = 0;
        double prob = 1.0;
        for (std::size_t i = 0; i < laws.size(); ++i) {
            idx += laws[i].origin() + static_cast<std::int64_t>(pick[i]);
            prob *= laws[i].weights()[pick[i]];
        }
        h1[idx] += prob;
        std::size_t d = 0;
        while (d < pick.size() && ++pick[d] == laws[d].size()) {
            pick[d] = 0;
            ++d;
        }
        if (d == pick.size()) break;
    }

    // H2 = product of accompanying laws via the literal series
    LatticeDistribution h2 = compound_poisson_series(1.0, laws[0], 60).law;
    for (std::size_t i = 1; i < laws.size(); ++i) {
        h2 = convolve_direct_reference(h2, compound_poisson_series(1.0, laws[i], 60).law);
    }

    // brute-force sup over atoms of both supports plus midpoints
    std::vector<std::pair<double, double>> h1_atoms;
    for (const auto& [idx, wgt] : h1) {
        h1_atoms.emplace_back(static_cast<double>(idx) * model.step, wgt);
    }
    std::vector<double> probes;
    for (const auto& [x, wgt] : h1_atoms) {
        probes.push_back(x);
        probes.push_back(x + 0.5 * model.step);
    }
    for (std::size_t i = 0; i < h2.size(); ++i) {
        probes.push_back(h2.value_at(i));
        probes.push_back(h2.value_at(i) + 0.5 * model.step);
    }
    std::sort(probes.begin(), probes.end());
    double sup = 0.0;
    for (double x : probes) {
        double c1 = 0.0;
        for (const auto& [v, wgt] : h1_atoms) {
            if (v <= x + 1e-9 * model.step) c1 += wgt;
        }
        double c2 = 0.0;
        for (std::size_t i = 0; i < h2.size(); ++i) {
            if (h2.value_at(i) <= x + 1e-9 * model.step) c2 += h2.weights()[i];
        }
        sup = std::max(sup, std::abs(c1 - c2));
    }
    return sup;
}

}  // namespace poisson_approx::oracle
