#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "poisson_approx/bounds.hpp"
#include "poisson_approx/errors.hpp"
#include "poisson_approx/lattice.hpp"
#include "poisson_approx/metrics.hpp"
#include "poisson_approx/model.hpp"
#include "poisson_approx/philox.hpp"

namespace poisson_approx {

inline constexpr std::size_t kMaxMarkDim = 3;

// Mark in R^d, d <= 3; coordinates beyond dim are zero.
using Mark = std::array<double, kMaxMarkDim>;

struct DiscreteVectorLaw {
    std::size_t dim = 1;
    std::vector<Mark> atoms;
    std::vector<double> weights;
    std::vector<double> cumulative;

    static DiscreteVectorLaw make(std::size_t dim, std::vector<Mark> atoms,
                                  std::vector<double> weights) {
        if (dim < 1 || dim > kMaxMarkDim) {
            throw BadInput("mark dimension must be 1, 2, or 3");
        }
        if (atoms.empty() || atoms.size() != weights.size()) {
            throw BadInput("vector law needs matching non-empty atoms and weights");
        }
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0) || !std::isfinite(w)) {
                throw BadInput("vector law weights must be finite and non-negative");
            }
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-6) {
            throw BadInput("vector law weights must sum to 1");
        }
        for (auto& a : atoms) {
            for (std::size_t c = dim; c < kMaxMarkDim; ++c) a[c] = 0.0;
        }
        DiscreteVectorLaw law;
        law.dim = dim;
        law.atoms = std::move(atoms);
        law.weights = std::move(weights);
        law.cumulative = cumulative_weights(law.weights);
        return law;
    }

    static DiscreteVectorLaw from_lattice(const LatticeDistribution& src) {
        if (src.lost_mass() > 1e-6) {
            throw BadInput("sampler needs a full-mass law, lost mass is " +
                           std::to_string(src.lost_mass()));
        }
        std::vector<Mark> atoms;
        std::vector<double> weights;
        for (std::size_t k = 0; k < src.size(); ++k) {
            if (src.weights()[k] <= 0.0) continue;
            atoms.push_back({src.value_at(k), 0.0, 0.0});
            weights.push_back(src.weights()[k]);
        }
        const double total = detail::stable_sum(weights);
        for (double& w : weights) w /= total;
        return make(1, std::move(atoms), std::move(weights));
    }

    Mark sample(PhiloxStream& rng) const { return atoms[rng.discrete(cumulative)]; }

    Mark mean() const {
        Mark m{0.0, 0.0, 0.0};
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            for (std::size_t c = 0; c < dim; ++c) m[c] += weights[k] * atoms[k][c];
        }
        return m;
    }

    // radius of the smallest origin-centred Euclidean ball covering the support
    double support_radius() const {
        double r = 0.0;
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            if (weights[k] <= 0.0) continue;
            double s = 0.0;
            for (std::size_t c = 0; c < dim; ++c) s += atoms[k][c] * atoms[k][c];
            r = std::max(r, std::sqrt(s));
        }
        return r;
    }
};

struct MarkComponent {
    double p = 0.0;
    DiscreteVectorLaw u;
    DiscreteVectorLaw v;
};

struct MarkSampler {
    std::size_t dim = 1;
    std::vector<MarkComponent> components;

    std::size_t size() const { return components.size(); }

    void validate() const {
        if (dim < 1 || dim > kMaxMarkDim) {
            throw BadInput("mark dimension must be 1, 2, or 3");
        }
        if (components.empty()) {
            throw BadInput("sampler needs at least one component");
        }
        for (std::size_t i = 0; i < components.size(); ++i) {
            const auto& c = components[i];
            if (!(c.p >= 0.0 && c.p <= 1.0)) {
                throw BadInput("components[" + std::to_string(i) + "].p must lie in [0,1]");
            }
            if (c.u.dim != dim || c.v.dim != dim) {
                throw BadInput("components[" + std::to_string(i) +
                               "] mixes mark dimensions");
            }
        }
    }

    static MarkSampler from_model(const RareEventModel& model) {
        model.validate();
        MarkSampler out;
        out.dim = 1;
        for (const auto& comp : model.components) {
            out.components.push_back({comp.p, DiscreteVectorLaw::from_lattice(comp.u),
                                      DiscreteVectorLaw::from_lattice(comp.v)});
        }
        return out;
    }
};

struct PointProcessSample {
    struct Group {
        std::uint64_t nu = 0;
        std::vector<Mark> marks;
    };
    std::vector<Group> groups;

    std::uint64_t total_count() const {
        std::uint64_t n = 0;
        for (const auto& g : groups) n += g.nu;
        return n;
    }
};

namespace detail {

inline Mark sample_mixture(const MarkComponent& comp, PhiloxStream& rng) {
    const double branch = rng.uniform01();
    return branch < comp.p ? comp.v.sample(rng) : comp.u.sample(rng);
}

}  // namespace detail

// One realization of X; stream keyed by (seed, component, replication).
inline std::vector<Mark> sample_x(const MarkSampler& model, std::uint64_t seed,
                                  std::uint64_t replication = 0) {
    model.validate();
    std::vector<Mark> out;
    out.reserve(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) {
        PhiloxStream rng(seed, i, replication);
        out.push_back(detail::sample_mixture(model.components[i], rng));
    }
    return out;
}

// One realization of the Poissonized sample: nu_i ~ Poisson(1), marks iid F_i.
inline PointProcessSample poissonize(const MarkSampler& model, std::uint64_t seed,
                                     std::uint64_t replication = 0) {
    model.validate();
    PointProcessSample out;
    out.groups.resize(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) {
        PhiloxStream rng(seed, i, replication);
        auto& group = out.groups[i];
        group.nu = rng.poisson(1.0);
        group.marks.reserve(group.nu);
        for (std::uint64_t j = 0; j < group.nu; ++j) {
            group.marks.push_back(detail::sample_mixture(model.components[i], rng));
        }
    }
    return out;
}

struct FunctionalSums {
    Mark sum{0.0, 0.0, 0.0};    // S for raw marks, T for a Poissonized sample
    Mark delta{0.0, 0.0, 0.0};  // sum of (nu_i - 1) a_i; zero for raw marks
};

inline FunctionalSums functional_sums(const std::vector<Mark>& x, const MarkSampler& model) {
    if (x.size() != model.size()) {
        throw BadInput("mark count does not match component count");
    }
    FunctionalSums out;
    for (const auto& mark : x) {
        for (std::size_t c = 0; c < model.dim; ++c) out.sum[c] += mark[c];
    }
    return out;
}

inline FunctionalSums functional_sums(const PointProcessSample& y, const MarkSampler& model) {
    if (y.groups.size() != model.size()) {
        throw BadInput("group count does not match component count");
    }
    FunctionalSums out;
    for (std::size_t i = 0; i < y.groups.size(); ++i) {
        const auto& group = y.groups[i];
        if (group.marks.size() != group.nu) {
            throw BadInput("groups[" + std::to_string(i) + "] mark count != nu");
        }
        for (const auto& mark : group.marks) {
            for (std::size_t c = 0; c < model.dim; ++c) out.sum[c] += mark[c];
        }
        const Mark a = model.components[i].u.mean();
        const double excess = static_cast<double>(group.nu) - 1.0;
        for (std::size_t c = 0; c < model.dim; ++c) out.delta[c] += excess * a[c];
    }
    return out;
}

struct SandwichReport {
    double lambda = 0.0;
    double tau = 0.0;           // smallest ball radius covering every U_i support
    double p = 0.0;
    double control_term = 0.0;  // p + exp(-lambda/tau), the c=1 smoothing cost
    double delta_term = 0.0;    // P{||Delta||_inf >= lambda}
    bool delta_exact = false;
    double slack_lower = 0.0;   // worst over x of H2(x+2λ1)+terms − H1(x)
    double slack_upper = 0.0;   // worst over x of H1(x+2λ1)+terms − H2(x)
    double pair_excess = 0.0;   // empirical P{||S−T||₂ > 2λ} on independent pairs
    double pair_std_error = 0.0;
    double pair_bound = 0.0;    // p + exp(-λ/τ) + Σp_i² + P{||Δ||₂ ≥ λ}
    bool pair_coupled = false;  // always false: the coupled construction is out of scope
    double error_budget = 0.0;
    std::size_t reps = 0;
};

namespace detail {

inline double model_support_radius(const RareEventModel& model) {
    double tau = 0.0;
    for (std::size_t i = 0; i < model.components.size(); ++i) {
        const auto& u = model.components[i].u;
        if (u.lost_mass() > 0.0) {
            throw SupportViolation("components[" + std::to_string(i) +
                                   "].U carries unresolved lost mass, cannot certify a "
                                   "support radius");
        }
        for (std::size_t k = 0; k < u.size(); ++k) {
            if (u.weights()[k] > 0.0) tau = std::max(tau, std::abs(u.value_at(k)));
        }
    }
    return tau;
}

// worst (most negative) slack of F(x) <= G(x + shift) + allowance over all real x
inline double worst_shift_slack(const LatticeDistribution& f, const LatticeDistribution& g,
                                double shift, double allowance) {
    std::vector<double> probes;
    probes.reserve(f.size() + g.size() + 2);
    for (std::size_t k = 0; k < f.size(); ++k) probes.push_back(f.value_at(k));
    for (std::size_t k = 0; k < g.size(); ++k) probes.push_back(g.value_at(k) - shift);
    probes.push_back(std::min(f.min_value(), g.min_value() - shift) - f.step());
    probes.push_back(std::max(f.max_value(), g.max_value() - shift) + f.step());
    double worst = std::numeric_limits<double>::infinity();
    for (double x : probes) {
        worst = std::min(worst, cdf_at(g, x + shift) + allowance - cdf_at(f, x));
    }
    return worst;
}

}  // namespace detail

// Exact d=1 verification of the CDF sandwich and its mirror, plus the
// independent-pair proxy for the closeness-in-probability claim.
inline SandwichReport verify_sandwich(const RareEventModel& model, double lambda,
                                      std::size_t reps, std::uint64_t seed) {
    model.validate();
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw BadInput("lambda must be positive");
    }
    if (reps < 100000) {
        throw BadInput("sandwich verification needs at least 1e5 replications");
    }
    SandwichReport report;
    report.lambda = lambda;
    report.reps = reps;
    report.tau = detail::model_support_radius(model);

    const auto summary = summarize(model);
    report.p = summary.p;
    report.control_term =
        summary.p + (report.tau > 0.0 ? std::exp(-lambda / report.tau) : 0.0);

    const auto delta_law = delta_law_exact(model);
    double delta_budget = 0.0;
    if (delta_law.has_value()) {
        report.delta_exact = true;
        report.delta_term = abs_tail(*delta_law, lambda, /*strict_greater=*/false);
        delta_budget = delta_law->lost_mass();
    } else {
        report.delta_exact = false;
        report.delta_term = std::min(1.0, bernstein_delta_tail(summary, lambda));
    }

    const auto laws = build_laws(model);
    const double allowance = report.control_term + report.delta_term;
    report.slack_lower = detail::worst_shift_slack(laws.h1, laws.h2, 2.0 * lambda, allowance);
    report.slack_upper = detail::worst_shift_slack(laws.h2, laws.h1, 2.0 * lambda, allowance);
    report.error_budget = laws.lost_mass() + laws.residual + delta_budget;

    double sum_p2 = 0.0;
    for (const auto& comp : model.components) sum_p2 += comp.p * comp.p;
    report.pair_bound = std::min(1.0, report.control_term + sum_p2 + report.delta_term);

    const auto sampler = MarkSampler::from_model(model);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        const auto s = functional_sums(sample_x(sampler, seed, 2 * r), sampler);
        const auto t = functional_sums(poissonize(sampler, seed, 2 * r + 1), sampler);
        if (std::abs(s.sum[0] - t.sum[0]) > 2.0 * lambda) ++hits;
    }
    report.pair_excess = static_cast<double>(hits) / static_cast<double>(reps);
    report.pair_std_error =
        std::sqrt(std::max(report.pair_excess * (1.0 - report.pair_excess), 1e-12) /
                  static_cast<double>(reps));
    report.pair_coupled = false;
    return report;
}

namespace detail {

// histogram-with-prefix-sums CDF evaluator over a tensor probe grid
class GridCdf {
public:
    GridCdf(std::size_t dim, const std::array<std::vector<double>, kMaxMarkDim>& cuts)
        : dim_(dim), cuts_(cuts) {
        std::size_t cells = 1;
        for (std::size_t c = 0; c < dim_; ++c) {
            stride_[c] = cells;
            cells *= cuts_[c].size() + 1;
        }
        counts_.assign(cells, 0.0);
    }

    void add(const Mark& m) {
        std::size_t idx = 0;
        for (std::size_t c = 0; c < dim_; ++c) {
            const auto& cut = cuts_[c];
            const std::size_t b =
                std::lower_bound(cut.begin(), cut.end(), m[c]) - cut.begin();
            idx += stride_[c] * b;
        }
        counts_[idx] += 1.0;
        ++total_;
    }

    // prefix-sum pass; call once after all add()s
    void finalize() {
        for (std::size_t c = 0; c < dim_; ++c) {
            const std::size_t extent = cuts_[c].size() + 1;
            for (std::size_t i = 0; i < counts_.size(); ++i) {
                const std::size_t b = (i / stride_[c]) % extent;
                if (b > 0) counts_[i] += counts_[i - stride_[c]];
            }
        }
    }

    // fraction of samples coordinatewise <= the probe with cut indices idx
    double at(const std::array<std::size_t, kMaxMarkDim>& idx) const {
        std::size_t flat = 0;
        for (std::size_t c = 0; c < dim_; ++c) flat += stride_[c] * idx[c];
        return total_ == 0 ? 0.0 : counts_[flat] / static_cast<double>(total_);
    }

private:
    std::size_t dim_;
    std::array<std::vector<double>, kMaxMarkDim> cuts_;
    std::array<std::size_t, kMaxMarkDim> stride_{1, 1, 1};
    std::vector<double> counts_;
    std::size_t total_ = 0;
};

inline double sampler_support_radius(const MarkSampler& model) {
    double tau = 0.0;
    for (const auto& comp : model.components) {
        tau = std::max(tau, comp.u.support_radius());
    }
    return tau;
}

// coordinatewise Bernstein bound on P{||Delta||_inf >= lambda}
inline double bernstein_delta_tail_vector(const MarkSampler& model, double lambda) {
    double total = 0.0;
    for (std::size_t c = 0; c < model.dim; ++c) {
        ModelSummary coord;
        double l2sq = 0.0;
        double linf = 0.0;
        for (const auto& comp : model.components) {
            const double a = comp.u.mean()[c];
            l2sq += a * a;
            linf = std::max(linf, std::abs(a));
        }
        coord.a_l2 = std::sqrt(l2sq);
        coord.a_linf = linf;
        total += bernstein_delta_tail(coord, lambda);
    }
    return std::min(1.0, total);
}

}  // namespace detail

// Monte Carlo verification of the sandwich for vector marks (d <= 3):
// empirical CDFs of S and T on a tensor probe grid, pointwise Hoeffding bands.
inline SandwichReport verify_sandwich_mc(const MarkSampler& model, double lambda,
                                         std::size_t reps, std::uint64_t seed,
                                         std::size_t probes_per_axis = 17) {
    model.validate();
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw BadInput("lambda must be positive");
    }
    if (reps < 10000) {
        throw BadInput("sandwich verification needs at least 1e4 replications");
    }
    if (probes_per_axis < 2 || probes_per_axis > 64) {
        throw BadInput("probe grid must have between 2 and 64 points per axis");
    }
    SandwichReport report;
    report.lambda = lambda;
    report.reps = reps;
    report.tau = detail::sampler_support_radius(model);
    double p = 0.0;
    double sum_p2 = 0.0;
    for (const auto& comp : model.components) {
        p = std::max(p, comp.p);
        sum_p2 += comp.p * comp.p;
    }
    report.p = p;
    report.control_term = p + (report.tau > 0.0 ? std::exp(-lambda / report.tau) : 0.0);
    report.delta_term = detail::bernstein_delta_tail_vector(model, lambda);
    report.delta_exact = false;
    report.pair_bound = std::min(1.0, report.control_term + sum_p2 + report.delta_term);

    std::vector<Mark> s_sums(reps), t_sums(reps);
    std::size_t pair_hits = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        const auto s = functional_sums(sample_x(model, seed, 2 * r), model);
        const auto t = functional_sums(poissonize(model, seed, 2 * r + 1), model);
        s_sums[r] = s.sum;
        t_sums[r] = t.sum;
        double dist2 = 0.0;
        for (std::size_t c = 0; c < model.dim; ++c) {
            const double diff = s.sum[c] - t.sum[c];
            dist2 += diff * diff;
        }
        if (std::sqrt(dist2) > 2.0 * lambda) ++pair_hits;
    }
    report.pair_excess = static_cast<double>(pair_hits) / static_cast<double>(reps);
    report.pair_std_error =
        std::sqrt(std::max(report.pair_excess * (1.0 - report.pair_excess), 1e-12) /
                  static_cast<double>(reps));
    report.pair_coupled = false;

    // probe grid: per-axis quantile cuts of the pooled S and T samples
    std::array<std::vector<double>, kMaxMarkDim> cuts;
    std::vector<double> pooled(2 * reps);
    for (std::size_t c = 0; c < model.dim; ++c) {
        for (std::size_t r = 0; r < reps; ++r) {
            pooled[2 * r] = s_sums[r][c];
            pooled[2 * r + 1] = t_sums[r][c];
        }
        std::sort(pooled.begin(), pooled.end());
        cuts[c].reserve(probes_per_axis);
        for (std::size_t k = 0; k < probes_per_axis; ++k) {
            const double q = (static_cast<double>(k) + 0.5) /
                             static_cast<double>(probes_per_axis);
            const std::size_t at = std::min(
                pooled.size() - 1,
                static_cast<std::size_t>(q * static_cast<double>(pooled.size())));
            cuts[c].push_back(pooled[at]);
        }
        cuts[c].erase(std::unique(cuts[c].begin(), cuts[c].end()), cuts[c].end());
    }

    // the shifted grid evaluates H(x + 2λ·1) at the same probe indices
    std::array<std::vector<double>, kMaxMarkDim> shifted = cuts;
    for (std::size_t c = 0; c < model.dim; ++c) {
        for (double& cut : shifted[c]) cut += 2.0 * lambda;
    }

    detail::GridCdf h1(model.dim, cuts), h2(model.dim, cuts);
    detail::GridCdf h1_shift(model.dim, shifted), h2_shift(model.dim, shifted);
    for (std::size_t r = 0; r < reps; ++r) {
        h1.add(s_sums[r]);
        h1_shift.add(s_sums[r]);
        h2.add(t_sums[r]);
        h2_shift.add(t_sums[r]);
    }
    h1.finalize();
    h2.finalize();
    h1_shift.finalize();
    h2_shift.finalize();

    const double allowance = report.control_term + report.delta_term;
    double worst_lower = std::numeric_limits<double>::infinity();
    double worst_upper = std::numeric_limits<double>::infinity();
    std::array<std::size_t, kMaxMarkDim> idx{0, 0, 0};
    const std::size_t axis0 = cuts[0].size();
    std::size_t total_probes = axis0;
    for (std::size_t c = 1; c < model.dim; ++c) total_probes *= cuts[c].size();
    for (std::size_t flat = 0; flat < total_probes; ++flat) {
        std::size_t rest = flat;
        for (std::size_t c = 0; c < model.dim; ++c) {
            idx[c] = rest % cuts[c].size();
            rest /= cuts[c].size();
        }
        worst_lower = std::min(worst_lower, h2_shift.at(idx) + allowance - h1.at(idx));
        worst_upper = std::min(worst_upper, h1_shift.at(idx) + allowance - h2.at(idx));
    }
    report.slack_lower = worst_lower;
    report.slack_upper = worst_upper;
    // two empirical CDFs per comparison, pointwise Hoeffding band at alpha = 0.01
    report.error_budget =
        2.0 * std::sqrt(std::log(2.0 / 0.01) / (2.0 * static_cast<double>(reps)));
    return report;
}

struct Box {
    Mark lo{0.0, 0.0, 0.0};
    Mark hi{0.0, 0.0, 0.0};

    void validate(std::size_t dim) const {
        for (std::size_t c = 0; c < dim; ++c) {
            if (!(lo[c] <= hi[c])) {
                throw BadInput("box lower corner must not exceed upper corner");
            }
        }
    }

    bool contains(const Mark& m, std::size_t dim) const {
        for (std::size_t c = 0; c < dim; ++c) {
            if (m[c] < lo[c] || m[c] > hi[c]) return false;
        }
        return true;
    }

    bool overlaps(const Box& other, std::size_t dim) const {
        for (std::size_t c = 0; c < dim; ++c) {
            if (hi[c] < other.lo[c] || other.hi[c] < lo[c]) return false;
        }
        return true;
    }
};

struct CountStats {
    double mean_a = 0.0;
    double mean_b = 0.0;
    double correlation = 0.0;
};

struct IndependenceReport {
    std::size_t reps = 0;
    CountStats poissonized;
    CountStats raw;
    double corr_band = 0.0;        // 3/sqrt(reps)
    double intensity_a = 0.0;      // sum over i of F_i(A)
    double intensity_b = 0.0;
    double mean_a_std_error = 0.0;
    double mean_b_std_error = 0.0;
    bool poissonized_independent = false;
};

namespace detail {

inline double mixture_mass_in(const MarkComponent& comp, const Box& box, std::size_t dim) {
    double mass = 0.0;
    for (std::size_t k = 0; k < comp.u.atoms.size(); ++k) {
        if (box.contains(comp.u.atoms[k], dim)) mass += (1.0 - comp.p) * comp.u.weights[k];
    }
    for (std::size_t k = 0; k < comp.v.atoms.size(); ++k) {
        if (box.contains(comp.v.atoms[k], dim)) mass += comp.p * comp.v.weights[k];
    }
    return mass;
}

struct MomentAccumulator {
    double sum_a = 0.0, sum_b = 0.0, sum_aa = 0.0, sum_bb = 0.0, sum_ab = 0.0;

    void add(double a, double b) {
        sum_a += a;
        sum_b += b;
        sum_aa += a * a;
        sum_bb += b * b;
        sum_ab += a * b;
    }

    CountStats stats(std::size_t reps) const {
        const double n = static_cast<double>(reps);
        CountStats out;
        out.mean_a = sum_a / n;
        out.mean_b = sum_b / n;
        const double var_a = std::max(sum_aa / n - out.mean_a * out.mean_a, 0.0);
        const double var_b = std::max(sum_bb / n - out.mean_b * out.mean_b, 0.0);
        const double cov = sum_ab / n - out.mean_a * out.mean_b;
        const double denom = std::sqrt(var_a * var_b);
        out.correlation = denom > 0.0 ? cov / denom : 0.0;
        return out;
    }

    double mean_std_error_a(std::size_t reps) const {
        const double n = static_cast<double>(reps);
        const double mean = sum_a / n;
        return std::sqrt(std::max(sum_aa / n - mean * mean, 0.0) / n);
    }

    double mean_std_error_b(std::size_t reps) const {
        const double n = static_cast<double>(reps);
        const double mean = sum_b / n;
        return std::sqrt(std::max(sum_bb / n - mean * mean, 0.0) / n);
    }
};

inline constexpr std::uint64_t kRawContrastSalt = 0x9e3779b97f4a7c15ull;

}  // namespace detail

// Disjoint-box count correlation for the Poissonized sample, with the raw
// sample's same statistic for contrast.
inline IndependenceReport independence_check(const MarkSampler& model, const Box& a,
                                             const Box& b, std::size_t reps,
                                             std::uint64_t seed) {
    model.validate();
    a.validate(model.dim);
    b.validate(model.dim);
    if (a.overlaps(b, model.dim)) {
        throw OverlappingRegions("count regions must be disjoint boxes");
    }
    if (reps < 10000) {
        throw BadInput("independence check needs at least 1e4 replications");
    }
    IndependenceReport report;
    report.reps = reps;
    report.corr_band = 3.0 / std::sqrt(static_cast<double>(reps));
    for (const auto& comp : model.components) {
        report.intensity_a += detail::mixture_mass_in(comp, a, model.dim);
        report.intensity_b += detail::mixture_mass_in(comp, b, model.dim);
    }

    detail::MomentAccumulator poissonized, raw;
    for (std::size_t r = 0; r < reps; ++r) {
        const auto y = poissonize(model, seed, r);
        double na = 0.0, nb = 0.0;
        for (const auto& group : y.groups) {
            for (const auto& mark : group.marks) {
                if (a.contains(mark, model.dim)) na += 1.0;
                if (b.contains(mark, model.dim)) nb += 1.0;
            }
        }
        poissonized.add(na, nb);

        const auto x = sample_x(model, seed ^ detail::kRawContrastSalt, r);
        double xa = 0.0, xb = 0.0;
        for (const auto& mark : x) {
            if (a.contains(mark, model.dim)) xa += 1.0;
            if (b.contains(mark, model.dim)) xb += 1.0;
        }
        raw.add(xa, xb);
    }
    report.poissonized = poissonized.stats(reps);
    report.raw = raw.stats(reps);
    report.mean_a_std_error = poissonized.mean_std_error_a(reps);
    report.mean_b_std_error = poissonized.mean_std_error_b(reps);
    report.poissonized_independent =
        std::abs(report.poissonized.correlation) <= report.corr_band;
    return report;
}

}  // namespace poisson_approx
