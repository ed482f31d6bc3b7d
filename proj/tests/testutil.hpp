#pragma once

#include <cstdint>
#include <vector>

#include "poisson_approx/lattice.hpp"
#include "poisson_approx/model.hpp"
#include "poisson_approx/philox.hpp"

namespace patest {

using namespace poisson_approx;

// Full-mass law with 1..max_atoms atoms and origin in [-8, 8].
inline LatticeDistribution random_law(PhiloxStream& rng, double step, int max_atoms) {
    const int n = 1 + static_cast<int>(rng.next_u32() % static_cast<std::uint32_t>(max_atoms));
    const std::int64_t origin = static_cast<std::int64_t>(rng.next_u32() % 17u) - 8;
    std::vector<double> w(static_cast<std::size_t>(n));
    double total = 0.0;
    for (double& x : w) {
        x = 0.05 + rng.uniform01();
        total += x;
    }
    for (double& x : w) x /= total;
    return LatticeDistribution::make(step, origin, std::move(w));
}

inline RareEventModel random_model(PhiloxStream& rng, std::size_t n, double p_max, double step,
                                   int max_atoms) {
    RareEventModel model;
    model.step = step;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = p_max * rng.uniform01();
        model.components.push_back({p, random_law(rng, step, max_atoms),
                                    random_law(rng, step, max_atoms)});
    }
    return model;
}

}  // namespace patest
