#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poisson_approx/errors.hpp"
#include "poisson_approx/lattice.hpp"
#include "poisson_approx/model.hpp"
#include "poisson_approx/philox.hpp"

namespace poisson_approx {

// Seeded generators for randomized verification families. Instances are keyed
// by (seed, index) and independent of evaluation order.
enum class FamilyKind {
    Theorem0,    // U_i = E_0, n <= 50, p_i <= 0.1
    General,     // spread-out U_i, so B^2 > 0; alternates heavy and light V tails
    Degenerate,  // point-mass U_i, so B^2 = 0 with possibly non-zero a_i
};

inline const char* family_name(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::Theorem0: return "theorem0";
        case FamilyKind::General: return "general";
        case FamilyKind::Degenerate: return "degenerate";
    }
    throw BadInput("unknown family kind");
}

inline FamilyKind family_from_name(const std::string& name) {
    if (name == "theorem0") return FamilyKind::Theorem0;
    if (name == "general") return FamilyKind::General;
    if (name == "degenerate") return FamilyKind::Degenerate;
    throw BadInput("family must be one of theorem0|general|degenerate, got '" + name + "'");
}

namespace detail {

inline std::int64_t uniform_int(PhiloxStream& rng, std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<std::int64_t>(rng.next_u64() % span);
}

inline std::vector<double> random_weights(PhiloxStream& rng, std::size_t count) {
    std::vector<double> w(count);
    double total = 0.0;
    for (double& x : w) {
        x = 0.05 + rng.uniform01();
        total += x;
    }
    for (double& x : w) x /= total;
    return w;
}

inline LatticeDistribution random_span_law(PhiloxStream& rng, double step,
                                           std::int64_t max_abs_offset,
                                           std::size_t max_atoms) {
    const std::size_t count =
        static_cast<std::size_t>(uniform_int(rng, 1, static_cast<std::int64_t>(max_atoms)));
    const std::int64_t lo = uniform_int(rng, -max_abs_offset, max_abs_offset);
    const std::int64_t hi =
        std::min(max_abs_offset, lo + static_cast<std::int64_t>(count) - 1);
    std::vector<double> dense(static_cast<std::size_t>(hi - lo + 1), 0.0);
    const auto weights = random_weights(rng, count);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t at = static_cast<std::size_t>(
            uniform_int(rng, 0, static_cast<std::int64_t>(dense.size()) - 1));
        dense[at] += weights[k];
    }
    return LatticeDistribution::make(step, lo, dense);
}

}  // namespace detail

inline RareEventModel family_model(FamilyKind kind, std::uint64_t seed, std::uint64_t index) {
    PhiloxStream rng(seed, index, 1000 + static_cast<std::uint64_t>(kind));
    static constexpr double kSteps[3] = {0.25, 0.5, 1.0};
    RareEventModel model;
    model.step = kSteps[rng.next_u64() % 3];

    switch (kind) {
        case FamilyKind::Theorem0: {
            const auto n = detail::uniform_int(rng, 1, 50);
            for (std::int64_t i = 0; i < n; ++i) {
                const double p = 0.1 * rng.uniform01();
                model.components.push_back(
                    {p, point_mass(0.0, model.step),
                     detail::random_span_law(rng, model.step, 8, 4)});
            }
            return model;
        }
        case FamilyKind::General: {
            const auto n = detail::uniform_int(rng, 2, 12);
            const bool heavy_v = (index % 2) == 0;
            const bool snap_means = ((index >> 1) % 2) == 0;
            for (std::int64_t i = 0; i < n; ++i) {
                const double p = 0.15 * rng.uniform01();
                // two or three distinct background atoms keep sigma_i^2 > 0
                const std::int64_t start = detail::uniform_int(rng, -3, 0);
                const std::int64_t gap = detail::uniform_int(rng, 1, 2);
                LatticeDistribution u = [&] {
                    if (snap_means) {
                        // equal weights put a_i on the half-step lattice
                        std::vector<double> dense(static_cast<std::size_t>(gap) + 1, 0.0);
                        dense.front() = 0.5;
                        dense.back() = 0.5;
                        return LatticeDistribution::make(model.step, start, dense);
                    }
                    std::vector<double> dense(static_cast<std::size_t>(2 * gap) + 1, 0.0);
                    const auto w = detail::random_weights(rng, 3);
                    dense.front() = w[0];
                    dense[static_cast<std::size_t>(gap)] = w[1];
                    dense.back() = w[2];
                    return LatticeDistribution::make(model.step, start, dense);
                }();
                LatticeDistribution v =
                    heavy_v ? detail::random_span_law(rng, model.step, 12, 6)
                            : detail::random_span_law(rng, model.step, 2, 3);
                model.components.push_back({p, std::move(u), std::move(v)});
            }
            return model;
        }
        case FamilyKind::Degenerate: {
            const auto n = detail::uniform_int(rng, 1, 10);
            for (std::int64_t i = 0; i < n; ++i) {
                const double p = 0.15 * rng.uniform01();
                const std::int64_t at = detail::uniform_int(rng, -2, 2);
                model.components.push_back(
                    {p,
                     point_mass(static_cast<double>(at) * model.step, model.step),
                     detail::random_span_law(rng, model.step, 6, 4)});
            }
            return model;
        }
    }
    throw BadInput("unknown family kind");
}

}  // namespace poisson_approx
