#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poisson_approx/errors.hpp"
#include "poisson_approx/lattice.hpp"
#include "poisson_approx/metrics.hpp"
#include "poisson_approx/model.hpp"
#include "poisson_approx/philox.hpp"

namespace poisson_approx {

constexpr std::size_t kDefaultSupportCap = std::size_t{1} << 20;

// The three laws compared throughout: the exact sum law, its accompanying
// compound Poisson law, and the centered accompanying law. residual carries
// the centering shifts' snap-to-lattice defects in mark units.
struct LawTriple {
    LatticeDistribution h1;
    LatticeDistribution h2;
    LatticeDistribution h3;
    double residual = 0.0;

    double lost_mass() const { return h1.lost_mass() + h2.lost_mass() + h3.lost_mass(); }
};

namespace detail {

inline void check_support_cap(std::size_t current, std::size_t incoming, std::size_t cap) {
    if (current + incoming - 1 > cap) {
        throw SupportOverflow("convolution support would exceed " + std::to_string(cap) +
                              " atoms");
    }
}

// Convolve-and-trim accumulator: keeps factor products from dragging along
// sub-tolerance tails, moving them into lost_mass instead.
inline LatticeDistribution fold_factor(const LatticeDistribution& acc,
                                       const LatticeDistribution& factor, double trim_tol,
                                       std::size_t cap) {
    check_support_cap(acc.size(), factor.size(), cap);
    LatticeDistribution out = convolve(acc, factor);
    if (out.size() > 4096) {
        out = truncate_support(out, std::min(trim_tol, 1e-6));
    }
    return out;
}

}  // namespace detail

inline LawTriple build_laws(const RareEventModel& model, double tail_tol = 1e-12,
                            std::size_t support_cap = kDefaultSupportCap) {
    model.validate();
    if (!(tail_tol > 0.0) || tail_tol > 1e-3) {
        throw InvalidTolerance("tail tolerance must lie in (0, 1e-3]");
    }
    const ModelSummary summary = summarize(model);
    LawTriple out{point_mass(0.0, model.step), point_mass(0.0, model.step),
                  point_mass(0.0, model.step)};
    for (std::size_t i = 0; i < model.size(); ++i) {
        const LatticeDistribution f = model.mixture_law(i);
        out.h1 = detail::fold_factor(out.h1, f, tail_tol, support_cap);
        out.h2 = detail::fold_factor(out.h2, compound_poisson(1.0, f, tail_tol), tail_tol,
                                     support_cap);
        const ShiftResult centered = shift(f, -summary.a[i]);
        const ShiftResult factor3 =
            shift(compound_poisson(1.0, centered.law, tail_tol), summary.a[i]);
        out.residual += centered.residual + factor3.residual;
        out.h3 = detail::fold_factor(out.h3, factor3.law, tail_tol, support_cap);
    }
    return out;
}

// D²(τ) = Σ_i ∫ min{1, x²/τ²} F_i{dx}, the truncated second-moment sum.
inline double d2_tau(const RareEventModel& model, double tau) {
    model.validate();
    if (!(tau > 0.0)) {
        throw BadInput("tau must be positive");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
        const LatticeDistribution f = model.mixture_law(i);
        for (std::size_t j = 0; j < f.size(); ++j) {
            const double x = f.value_at(j);
            total += std::min(1.0, x * x / (tau * tau)) * f.weights()[j];
        }
    }
    return total;
}

// Weight function for the moment functional beta. Conditions checked on a
// probe grid: (a) non-negative, even, positive off zero, non-decreasing on
// x >= 0 is enforced; (b) x/g(x) non-decreasing is recorded, not enforced,
// because the built-in square weight violates it yet stays useful as a
// fourth-moment functional.
struct GFunction {
    std::string name;
    std::function<double(double)> eval;
    bool growth_condition_met = true;  // condition (b) on the probe grid
};

inline GFunction validate_class_g(GFunction g) {
    std::vector<double> probes;
    for (double x = 1e-6; x < 2e4; x *= 2.0) probes.push_back(x);
    const double g0 = g.eval(0.0);
    if (!(g0 >= 0.0)) {
        throw NotClassG(g.name + ": negative at 0");
    }
    double prev = g0;
    double prev_ratio = 0.0;
    g.growth_condition_met = true;
    for (double x : probes) {
        const double gx = g.eval(x);
        const double gnx = g.eval(-x);
        if (!(gx > 0.0)) {
            throw NotClassG(g.name + ": not strictly positive at " + std::to_string(x));
        }
        if (std::abs(gx - gnx) > 1e-12 * std::max(1.0, gx)) {
            throw NotClassG(g.name + ": not even at " + std::to_string(x));
        }
        if (gx < prev * (1.0 - 1e-12)) {
            throw NotClassG(g.name + ": decreasing at " + std::to_string(x));
        }
        const double ratio = x / gx;
        if (ratio < prev_ratio * (1.0 - 1e-12)) {
            g.growth_condition_met = false;
        }
        prev = gx;
        prev_ratio = ratio;
    }
    return g;
}

inline GFunction make_g_abs() {
    return validate_class_g({"abs", [](double x) { return std::abs(x); }, true});
}

inline GFunction make_g_square() {
    return validate_class_g({"square", [](double x) { return x * x; }, true});
}

struct BetaLambda {
    double beta = 0.0;
    double lambda = 0.0;
};

// beta(g) = Σ (1−p_i) ∫ (x−a_i)² g(x−a_i) U_i{dx};
// lambda = min{B, beta/(B g(B))} when B² > 0, else 0.
inline BetaLambda beta_lambda(const RareEventModel& model, const GFunction& g) {
    const GFunction checked = validate_class_g(g);
    const ModelSummary summary = summarize(model);
    double beta = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
        const auto& c = model.components[i];
        double term = 0.0;
        for (std::size_t j = 0; j < c.u.size(); ++j) {
            const double y = c.u.value_at(j) - summary.a[i];
            term += y * y * checked.eval(y) * c.u.weights()[j];
        }
        beta += (1.0 - c.p) * term;
    }
    if (summary.b2 <= 0.0) {
        return {beta, 0.0};
    }
    const double b = std::sqrt(summary.b2);
    return {beta, std::min(b, beta / (b * checked.eval(b)))};
}

// Two-sided Bernstein tail bound for Delta = Σ a_i(ν_i − 1):
// 2 max{exp(−γ²/4|a|₂²), exp(−γ/4|a|_∞)}. Degenerate a ≡ 0 means Delta ≡ 0.
inline double bernstein_delta_tail(const ModelSummary& summary, double gamma) {
    if (!(gamma >= 0.0)) {
        throw BadInput("gamma must be non-negative");
    }
    if (summary.a_l2 == 0.0) {
        return gamma > 0.0 ? 0.0 : 1.0;
    }
    const double quad = std::exp(-gamma * gamma / (4.0 * summary.a_l2 * summary.a_l2));
    const double lin = std::exp(-gamma / (4.0 * summary.a_linf));
    return 2.0 * std::max(quad, lin);
}

struct DeltaTailEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

// Monte-Carlo P{|Delta| >= γ} for each γ in the grid, sharing one pass of
// Poisson draws. Streams are keyed (seed, replication) so results do not
// depend on scheduling.
inline std::vector<DeltaTailEstimate> delta_tail_mc_grid(const ModelSummary& summary,
                                                         std::span<const double> gammas,
                                                         std::uint64_t reps,
                                                         std::uint64_t seed) {
    if (reps < 10000) {
        throw BadInput("delta tail Monte Carlo needs at least 1e4 replications");
    }
    if (gammas.empty()) {
        throw BadInput("delta tail grid needs at least one gamma");
    }
    for (double g : gammas) {
        if (!(g >= 0.0)) {
            throw BadInput("gamma must be non-negative");
        }
    }
    std::vector<DeltaTailEstimate> out(gammas.size());
    if (summary.a_l2 == 0.0) {
        for (std::size_t k = 0; k < gammas.size(); ++k) {
            out[k].estimate = gammas[k] == 0.0 ? 1.0 : 0.0;
        }
        return out;
    }
    std::vector<std::uint64_t> hits(gammas.size(), 0);
    for (std::uint64_t rep = 0; rep < reps; ++rep) {
        PhiloxStream rng(seed, rep);
        double delta = 0.0;
        for (double a : summary.a) {
            delta += a * (static_cast<double>(rng.poisson(1.0)) - 1.0);
        }
        const double mag = std::abs(delta);
        for (std::size_t k = 0; k < gammas.size(); ++k) {
            if (mag >= gammas[k]) ++hits[k];
        }
    }
    for (std::size_t k = 0; k < gammas.size(); ++k) {
        const double est = static_cast<double>(hits[k]) / static_cast<double>(reps);
        out[k] = {est, std::sqrt(est * (1.0 - est) / static_cast<double>(reps))};
    }
    return out;
}

inline DeltaTailEstimate delta_tail_mc(const ModelSummary& summary, double gamma,
                                       std::uint64_t reps, std::uint64_t seed) {
    const double grid[1] = {gamma};
    return delta_tail_mc_grid(summary, grid, reps, seed)[0];
}

// Exact law of Delta = Σ a_i(ν_i − 1) when the means a_i share a lattice.
// Candidate steps are the smallest |a_i| and a few integer refinements of
// it; returns nothing when no candidate fits every a_i.
inline std::optional<LatticeDistribution> delta_law_exact(const RareEventModel& model,
                                                          double tail_tol = 1e-12) {
    const ModelSummary summary = summarize(model);
    std::vector<double> nonzero;
    const double scale = std::max(summary.a_linf, 1.0);
    for (double a : summary.a) {
        if (std::abs(a) > 1e-12 * scale) nonzero.push_back(a);
    }
    if (nonzero.empty()) {
        return point_mass(0.0, model.step);
    }
    double base = std::abs(nonzero[0]);
    for (double a : nonzero) base = std::min(base, std::abs(a));
    double step = 0.0;
    for (int div : {1, 2, 3, 4, 5, 6, 8, 10, 12, 16}) {
        const double h = base / static_cast<double>(div);
        bool fits = true;
        for (double a : nonzero) {
            const double k = std::round(a / h);
            if (std::abs(a - k * h) > 1e-9 * h || std::abs(k) > 1e6) {
                fits = false;
                break;
            }
        }
        if (fits) {
            step = h;
            break;
        }
    }
    if (step == 0.0) {
        return std::nullopt;
    }
    LatticeDistribution law = point_mass(0.0, step);
    for (double a : nonzero) {
        // a·ν has law e(E_a); subtracting the unit mean shifts by −a
        const auto scaled = compound_poisson(1.0, point_mass(detail::nearest_index(a, step) *
                                                                 step,
                                                             step),
                                             tail_tol);
        law = convolve(law, shift(scaled, -a).law);
        if (law.size() > 4096) {
            law = truncate_support(law, std::min(tail_tol, 1e-6));
        }
    }
    return law;
}

// P{|X| > gamma} (strict) or P{|X| >= gamma}; unresolved lost_mass counts
// toward the tail, so the value is an upper reading of the true tail.
inline double abs_tail(const LatticeDistribution& law, double gamma, bool strict_greater) {
    if (!(gamma >= 0.0)) {
        throw BadInput("gamma must be non-negative");
    }
    const double snap = 1e-9 * law.step();
    double inside = 0.0;
    for (std::size_t i = 0; i < law.size(); ++i) {
        const double x = std::abs(law.value_at(i));
        const bool in = strict_greater ? x <= gamma + snap : x < gamma - snap;
        if (in) inside += law.weights()[i];
    }
    return std::max(0.0, 1.0 - inside);
}

enum class TheoremId { T0, LeCam, Cor1, T2, T3, T4, T5, T6, Bernstein };

inline std::string theorem_name(TheoremId id) {
    switch (id) {
        case TheoremId::T0: return "t0";
        case TheoremId::LeCam: return "lecam";
        case TheoremId::Cor1: return "cor1";
        case TheoremId::T2: return "t2";
        case TheoremId::T3: return "t3";
        case TheoremId::T4: return "t4";
        case TheoremId::T5: return "t5";
        case TheoremId::T6: return "t6";
        case TheoremId::Bernstein: return "bernstein";
    }
    throw BadInput("unknown theorem id");
}

inline TheoremId theorem_from_name(const std::string& name) {
    for (TheoremId id : {TheoremId::T0, TheoremId::LeCam, TheoremId::Cor1, TheoremId::T2,
                         TheoremId::T3, TheoremId::T4, TheoremId::T5, TheoremId::T6,
                         TheoremId::Bernstein}) {
        if (theorem_name(id) == name) return id;
    }
    throw BadInput("theorem must be one of t0|lecam|cor1|t2|t3|t4|t5|t6|bernstein, got '" +
                   name + "'");
}

struct FreeParams {
    std::optional<double> tau;
    std::optional<double> gamma;
    std::optional<double> kappa;
    GFunction g = make_g_abs();
    double tail_tol = 1e-12;
    std::uint64_t delta_reps = 100000;
    std::uint64_t delta_seed = 1;
    std::size_t support_cap = kDefaultSupportCap;
};

// One evaluated right-hand side. terms holds every additive piece; keys
// prefixed aux_ are diagnostics excluded from the total. error_budget is
// the lost mass of every law involved plus centering snap residuals.
struct BoundEvaluation {
    TheoremId theorem_id = TheoremId::T0;
    std::map<std::string, double> terms;
    std::map<std::string, double> free_params;
    std::string g_name;
    double total_with_c1 = 0.0;
    double error_budget = 0.0;

    double recompute_total() const {
        double total = 0.0;
        for (const auto& [key, value] : terms) {
            if (key.rfind("aux_", 0) != 0) total += value;
        }
        return total;
    }
};

// Parameter-selection helper: γ = ϰ = max(λ, |a|₂ sqrt(4 ln(1/p))), which
// pushes the Bernstein term below 2p². Degenerate p or a fall back to λ.
inline double default_gamma(const ModelSummary& summary, double lambda) {
    if (summary.p <= 0.0 || summary.a_l2 == 0.0) {
        return lambda;
    }
    return std::max(lambda, summary.a_l2 * std::sqrt(4.0 * std::log(1.0 / summary.p)));
}

namespace detail {

inline double require_param(const std::optional<double>& value, const char* flag,
                            const char* theorem) {
    if (!value.has_value()) {
        throw MissingParam(std::string(theorem) + " requires " + flag);
    }
    return *value;
}

inline void require_u_supports(const RareEventModel& model, double tau) {
    for (std::size_t i = 0; i < model.size(); ++i) {
        const auto& u = model.components[i].u;
        if (u.lost_mass() > 0.0) {
            throw SupportViolation("components[" + std::to_string(i) +
                                   "].U carries unresolved lost mass, cannot certify [-tau,tau]");
        }
        const double snap = 1e-9 * u.step();
        if (u.min_value() < -tau - snap || u.max_value() > tau + snap) {
            throw SupportViolation("components[" + std::to_string(i) +
                                   "].U has mass outside [-tau,tau]");
        }
    }
}

inline double cube_root(double x) { return std::cbrt(x); }

}  // namespace detail

inline BoundEvaluation theorem_rhs(TheoremId id, const RareEventModel& model,
                                   const FreeParams& params = {}) {
    model.validate();
    const ModelSummary summary = summarize(model);
    BoundEvaluation out;
    out.theorem_id = id;
    out.g_name = params.g.name;
    out.free_params["tail_tol"] = params.tail_tol;

    const auto finish = [&]() {
        out.total_with_c1 = out.recompute_total();
        return out;
    };

    switch (id) {
        case TheoremId::T0: {
            out.terms["p"] = summary.p;
            return finish();
        }
        case TheoremId::Bernstein: {
            const double gamma = detail::require_param(params.gamma, "--gamma", "bernstein");
            out.free_params["gamma"] = gamma;
            const double raw = bernstein_delta_tail(summary, gamma);
            out.terms["delta_tail"] = std::min(1.0, raw);
            out.terms["aux_bernstein_raw"] = raw;
            return finish();
        }
        case TheoremId::LeCam:
        case TheoremId::Cor1: {
            const char* label = id == TheoremId::LeCam ? "lecam" : "cor1";
            const double tau = detail::require_param(params.tau, "--tau", label);
            detail::require_u_supports(model, tau);
            out.free_params["tau"] = tau;
            const double d2 = d2_tau(model, tau);
            out.terms["aux_d2"] = d2;
            out.terms["p_cbrt"] = detail::cube_root(summary.p);
            if (id == TheoremId::LeCam) {
                const double ratio = 1.0 + summary.a_l2 * summary.a_l2 / (tau * tau);
                out.terms["lecam"] = detail::cube_root(ratio / (d2 * d2));
            } else {
                out.terms["cor1"] = detail::cube_root(1.0 / (d2 * d2));
            }
            return finish();
        }
        default:
            break;
    }

    // remaining arms need lambda(g) and the law triple
    const BetaLambda bl = beta_lambda(model, params.g);
    out.free_params["beta"] = bl.beta;
    out.free_params["lambda"] = bl.lambda;
    out.free_params["g_growth_ok"] = params.g.growth_condition_met ? 1.0 : 0.0;

    if (id == TheoremId::T2 && summary.b2 <= 0.0) {
        // degenerate backgrounds: the bound collapses to c·p
        out.terms["p"] = summary.p;
        return finish();
    }

    const LawTriple laws = build_laws(model, params.tail_tol, params.support_cap);
    out.error_budget = laws.lost_mass() + laws.residual;

    switch (id) {
        case TheoremId::T2: {
            const double q1 = concentration_q(laws.h1, bl.lambda);
            const double q3 = concentration_q(laws.h3, bl.lambda);
            out.terms["p"] = summary.p;
            out.terms["min_q"] = std::min(q1, q3);
            out.terms["aux_q_h1"] = q1;
            out.terms["aux_q_h3"] = q3;
            // equivalent shape: p + (λ/B) Q(∏ e(p_i V_i E_{−a_i}), B)
            const double b = std::sqrt(summary.b2);
            LatticeDistribution rare = point_mass(0.0, model.step);
            double rare_residual = 0.0;
            for (std::size_t i = 0; i < model.size(); ++i) {
                const auto& c = model.components[i];
                if (c.p <= 0.0) continue;
                const ShiftResult centered = shift(c.v, -summary.a[i]);
                rare_residual += centered.residual;
                rare = detail::fold_factor(rare,
                                           compound_poisson(c.p, centered.law, params.tail_tol),
                                           params.tail_tol, params.support_cap);
            }
            const double shape2_q = concentration_q(rare, b);
            out.terms["aux_shape2_q"] = shape2_q;
            out.terms["aux_shape2_total"] = summary.p + bl.lambda / b * shape2_q;
            out.error_budget += rare.lost_mass() + rare_residual;
            return finish();
        }
        case TheoremId::T3: {
            const double gamma = detail::require_param(params.gamma, "--gamma", "t3");
            if (gamma < bl.lambda) {
                throw ParamBelowLambda("t3 requires gamma >= lambda = " +
                                       std::to_string(bl.lambda));
            }
            out.free_params["gamma"] = gamma;
            const double bern = bernstein_delta_tail(summary, gamma);
            const DeltaTailEstimate mc =
                delta_tail_mc(summary, gamma, params.delta_reps, params.delta_seed);
            out.terms["p"] = summary.p;
            out.terms["delta_tail"] =
                std::min(1.0, std::min(bern, mc.estimate + 3.0 * mc.std_error));
            out.terms["aux_bernstein"] = bern;
            out.terms["aux_mc_estimate"] = mc.estimate;
            out.terms["aux_mc_std_error"] = mc.std_error;
            const double q1 = concentration_q(laws.h1, gamma);
            const double q2 = concentration_q(laws.h2, gamma);
            const double q3 = concentration_q(laws.h3, gamma);
            out.terms["min_q"] = std::min({q1, q2, q3});
            out.terms["aux_q_h1"] = q1;
            out.terms["aux_q_h2"] = q2;
            out.terms["aux_q_h3"] = q3;
            return finish();
        }
        case TheoremId::T4:
        case TheoremId::T5: {
            double width;
            if (id == TheoremId::T4) {
                width = detail::require_param(params.kappa, "--kappa", "t4");
                if (width < bl.lambda) {
                    throw ParamBelowLambda("t4 requires kappa >= lambda = " +
                                           std::to_string(bl.lambda));
                }
                out.free_params["kappa"] = width;
            } else {
                width = detail::require_param(params.tau, "--tau", "t5");
                detail::require_u_supports(model, width);
                out.free_params["tau"] = width;
            }
            const double q = std::min({concentration_q(laws.h1, width),
                                       concentration_q(laws.h2, width),
                                       concentration_q(laws.h3, width)});
            out.terms["p"] = summary.p;
            out.terms["aux_q"] = q;
            if (summary.a_l2 == 0.0) {
                out.terms["weighted_q"] = q;  // log-factor terms vanish with a ≡ 0
                return finish();
            }
            const double log_term = std::log(1.0 + width / (q * summary.a_l2));
            out.terms["aux_log_term"] = log_term;
            out.terms["weighted_q"] =
                (1.0 + summary.a_l2 / width * std::sqrt(log_term) +
                 summary.a_linf / width * log_term) *
                q;
            return finish();
        }
        case TheoremId::T6: {
            const double tau = detail::require_param(params.tau, "--tau", "t6");
            detail::require_u_supports(model, tau);
            out.free_params["tau"] = tau;
            const double d = std::sqrt(d2_tau(model, tau));
            out.terms["p"] = summary.p;
            out.terms["aux_d"] = d;
            const double dinv = d > 0.0 ? 1.0 / d : std::numeric_limits<double>::infinity();
            if (summary.a_l2 == 0.0) {
                out.terms["weighted_dinv"] = dinv;
                return finish();
            }
            const double log_term = std::log(1.0 + tau * d / summary.a_l2);
            out.terms["aux_log_term"] = log_term;
            out.terms["weighted_dinv"] =
                (1.0 + summary.a_l2 / tau * std::sqrt(log_term) +
                 summary.a_linf / tau * log_term) *
                dinv;
            return finish();
        }
        default:
            throw BadInput("unhandled theorem id");
    }
}

}  // namespace poisson_approx
