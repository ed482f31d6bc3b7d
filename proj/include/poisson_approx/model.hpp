#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "poisson_approx/errors.hpp"
#include "poisson_approx/lattice.hpp"

namespace poisson_approx {

// One rare-event source: with probability p the observation lands in the
// event branch V, otherwise in the background branch U.
struct ModelComponent {
    double p = 0.0;
    LatticeDistribution u;
    LatticeDistribution v;
};

// Ordered list of independent components over one shared lattice.
struct RareEventModel {
    double step = 1.0;
    std::vector<ModelComponent> components;

    std::size_t size() const { return components.size(); }

    void validate() const {
        if (!(step > 0.0)) {
            throw BadInput("model step must be positive");
        }
        if (components.empty()) {
            throw BadInput("model needs at least one component");
        }
        for (std::size_t i = 0; i < components.size(); ++i) {
            const auto& c = components[i];
            if (!(c.p >= 0.0 && c.p <= 1.0)) {
                throw BadInput("components[" + std::to_string(i) + "].p outside [0,1]");
            }
            if (!detail::steps_match(c.u.step(), step) || !detail::steps_match(c.v.step(), step)) {
                throw IncompatibleLattice("components[" + std::to_string(i) +
                                          "] laws disagree with the model step");
            }
        }
    }

    // Mixture law of component i.
    LatticeDistribution mixture_law(std::size_t i) const {
        return mixture(components[i].p, components[i].u, components[i].v);
    }
};

// Scalar summaries: p = max p_i, background means a_i with their l2/sup
// norms, damped background variances sigma_i^2 and their sum B^2.
struct ModelSummary {
    double p = 0.0;
    std::vector<double> a;
    double a_l2 = 0.0;
    double a_linf = 0.0;
    std::vector<double> sigma2;
    double b2 = 0.0;
};

inline ModelSummary summarize(const RareEventModel& model) {
    model.validate();
    ModelSummary s;
    double a_sq = 0.0;
    for (const auto& c : model.components) {
        s.p = std::max(s.p, c.p);
        const MomentSummary mu = moments(c.u);
        s.a.push_back(mu.mean);
        a_sq += mu.mean * mu.mean;
        s.a_linf = std::max(s.a_linf, std::abs(mu.mean));
        const double sigma2 = (1.0 - c.p) * mu.variance;
        s.sigma2.push_back(sigma2);
        s.b2 += sigma2;
    }
    s.a_l2 = std::sqrt(a_sq);
    return s;
}

}  // namespace poisson_approx
