#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "poisson_approx/errors.hpp"

namespace poisson_approx {

namespace detail {

// Compensated summation; mass budgets are validated to 1e-9 so plain
// accumulation over ~1e6 atoms would sit too close to the tolerance.
inline double stable_sum(const std::vector<double>& xs) {
    double sum = 0.0;
    double carry = 0.0;
    for (double x : xs) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    return sum;
}

inline bool steps_match(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

// Nearest lattice index of x on a grid of spacing step.
inline std::int64_t nearest_index(double x, double step) {
    return static_cast<std::int64_t>(std::llround(x / step));
}

// floor(x/step) robust against values sitting a few ulps below a lattice
// point (0.3/0.1 = 2.999... must count as index 3).
inline std::int64_t lattice_floor(double x, double step) {
    const double q = x / step;
    const double r = std::round(q);
    if (std::abs(q - r) <= 1e-9 * std::max(1.0, std::abs(q))) {
        return static_cast<std::int64_t>(r);
    }
    return static_cast<std::int64_t>(std::floor(q));
}

}  // namespace detail

// A finite probability distribution supported on the arithmetic lattice
// {(origin + i) * step : i = 0..size-1}. Mass removed by truncation is
// carried in lost_mass as an explicit error budget, never renormalized away.
// Instances are immutable; all operations below are pure functions.
class LatticeDistribution {
public:
    static constexpr double kMassTolerance = 1e-9;

    static LatticeDistribution make(double step, std::int64_t origin,
                                    std::vector<double> weights, double lost_mass = 0.0) {
        if (!(step > 0.0)) {
            throw BadInput("lattice step must be positive");
        }
        if (weights.empty()) {
            throw BadInput("lattice distribution needs at least one atom");
        }
        for (double w : weights) {
            if (!(w >= 0.0)) {
                throw BadInput("negative weight in lattice distribution");
            }
        }
        // canonical trimmed form: first and last weights strictly positive
        std::size_t lo = 0;
        std::size_t hi = weights.size();
        while (lo < hi && weights[lo] == 0.0) ++lo;
        while (hi > lo && weights[hi - 1] == 0.0) --hi;
        if (lo == hi) {
            throw BadInput("lattice distribution has zero total mass");
        }
        std::vector<double> trimmed(weights.begin() + static_cast<std::ptrdiff_t>(lo),
                                    weights.begin() + static_cast<std::ptrdiff_t>(hi));
        LatticeDistribution out;
        out.step_ = step;
        out.origin_ = origin + static_cast<std::int64_t>(lo);
        out.weights_ = std::move(trimmed);
        out.lost_mass_ = lost_mass < 0.0 ? 0.0 : lost_mass;
        const double total = out.mass() + out.lost_mass_;
        if (std::abs(total - 1.0) > kMassTolerance) {
            throw BadInput("weights + lost_mass = " + std::to_string(total) +
                           ", expected 1 within 1e-9");
        }
        return out;
    }

    double step() const { return step_; }
    std::int64_t origin() const { return origin_; }
    const std::vector<double>& weights() const { return weights_; }
    double lost_mass() const { return lost_mass_; }
    std::size_t size() const { return weights_.size(); }

    // Location of atom i.
    double value_at(std::size_t i) const {
        return static_cast<double>(origin_ + static_cast<std::int64_t>(i)) * step_;
    }
    double offset() const { return static_cast<double>(origin_) * step_; }
    double min_value() const { return value_at(0); }
    double max_value() const { return value_at(size() - 1); }

    double mass() const { return detail::stable_sum(weights_); }

private:
    LatticeDistribution() = default;

    double step_ = 1.0;
    std::int64_t origin_ = 0;
    std::vector<double> weights_;
    double lost_mass_ = 0.0;
};

struct MomentSummary {
    double mean = 0.0;
    double variance = 0.0;
    double second_moment = 0.0;
};

struct ShiftResult {
    LatticeDistribution law;
    double residual;  // |a - snapped lattice shift|
};

// E_a on the given lattice. a must be an integer multiple of step.
inline LatticeDistribution point_mass(double a, double step) {
    if (!(step > 0.0)) {
        throw BadInput("lattice step must be positive");
    }
    const std::int64_t k = detail::nearest_index(a, step);
    if (std::abs(a - static_cast<double>(k) * step) > 1e-9 * step) {
        throw NonLatticePoint("point " + std::to_string(a) + " is not on a lattice of step " +
                              std::to_string(step));
    }
    return LatticeDistribution::make(step, k, {1.0});
}

// (1-p) U + p V on the shared lattice.
inline LatticeDistribution mixture(double p, const LatticeDistribution& u,
                                   const LatticeDistribution& v) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw BadInput("mixture probability must lie in [0,1]");
    }
    if (!detail::steps_match(u.step(), v.step())) {
        throw IncompatibleLattice("mixture requires equal lattice steps");
    }
    const std::int64_t lo = std::min(u.origin(), v.origin());
    const std::int64_t hi = std::max(u.origin() + static_cast<std::int64_t>(u.size()),
                                     v.origin() + static_cast<std::int64_t>(v.size()));
    std::vector<double> w(static_cast<std::size_t>(hi - lo), 0.0);
    for (std::size_t i = 0; i < u.size(); ++i) {
        w[static_cast<std::size_t>(u.origin() - lo) + i] += (1.0 - p) * u.weights()[i];
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        w[static_cast<std::size_t>(v.origin() - lo) + i] += p * v.weights()[i];
    }
    const double lost = (1.0 - p) * u.lost_mass() + p * v.lost_mass();
    return LatticeDistribution::make(u.step(), lo, std::move(w), lost);
}

// Convolution with E_a, snapping a to the nearest lattice point. The snapping
// residual is surfaced so callers can fold it into their error budgets.
inline ShiftResult shift(const LatticeDistribution& f, double a) {
    const std::int64_t k = detail::nearest_index(a, f.step());
    const double residual = std::abs(a - static_cast<double>(k) * f.step());
    LatticeDistribution out = LatticeDistribution::make(f.step(), f.origin() + k, f.weights(),
                                                        f.lost_mass());
    return {std::move(out), residual};
}

namespace detail {

inline void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> step_w = std::polar(1.0, ang);
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                // refresh the twiddle periodically; pure recurrence drifts
                if ((k & 31u) == 0u) w = std::polar(1.0, ang * static_cast<double>(k));
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= step_w;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv;
    }
}

inline std::vector<double> convolve_weights_direct(const std::vector<double>& f,
                                                   const std::vector<double>& g) {
    std::vector<double> out(f.size() + g.size() - 1, 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double fi = f[i];
        if (fi == 0.0) continue;
        for (std::size_t j = 0; j < g.size(); ++j) {
            out[i + j] += fi * g[j];
        }
    }
    return out;
}

inline std::vector<double> convolve_weights_fft(const std::vector<double>& f,
                                                const std::vector<double>& g) {
    const std::size_t n = f.size() + g.size() - 1;
    std::size_t padded = 1;
    while (padded < n) padded <<= 1;
    std::vector<std::complex<double>> fa(padded), ga(padded);
    std::copy(f.begin(), f.end(), fa.begin());
    std::copy(g.begin(), g.end(), ga.begin());
    fft_inplace(fa, false);
    fft_inplace(ga, false);
    for (std::size_t i = 0; i < padded; ++i) fa[i] *= ga[i];
    fft_inplace(fa, true);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double w = fa[i].real();
        if (w < 0.0) {
            if (w < -1e-12) {
                throw NumericalCorruption("convolution weight " + std::to_string(w) +
                                          " below -1e-12 after transform");
            }
            w = 0.0;
        }
        out[i] = w;
    }
    return out;
}

constexpr std::size_t kDirectConvThreshold = 4096;  // atom pairs

}  // namespace detail

inline LatticeDistribution convolve(const LatticeDistribution& f, const LatticeDistribution& g) {
    if (!detail::steps_match(f.step(), g.step())) {
        throw IncompatibleLattice("convolve requires equal lattice steps");
    }
    std::vector<double> w;
    if (f.size() * g.size() <= detail::kDirectConvThreshold) {
        w = detail::convolve_weights_direct(f.weights(), g.weights());
    } else {
        w = detail::convolve_weights_fft(f.weights(), g.weights());
    }
    const double mass_f = f.mass();
    const double mass_g = g.mass();
    const double lost = 1.0 - mass_f * mass_g;
    return LatticeDistribution::make(f.step(), f.origin() + g.origin(), std::move(w),
                                     std::max(lost, 0.0));
}

// m-fold convolution power via repeated squaring; power(H, 0) = E_0.
inline LatticeDistribution power(const LatticeDistribution& h, std::uint64_t m) {
    LatticeDistribution result = LatticeDistribution::make(h.step(), 0, {1.0});
    if (m == 0) return result;
    LatticeDistribution base = h;
    while (true) {
        if (m & 1u) result = convolve(result, base);
        m >>= 1u;
        if (m == 0) break;
        base = convolve(base, base);
    }
    return result;
}

namespace detail {

// acc (anchored at acc_origin, step implied) += coeff * law
inline void add_scaled(std::int64_t& acc_origin, std::vector<double>& acc, double coeff,
                       const LatticeDistribution& law) {
    if (acc.empty()) {
        acc_origin = law.origin();
        acc.assign(law.size(), 0.0);
    } else {
        const std::int64_t lo = std::min(acc_origin, law.origin());
        const std::int64_t hi =
            std::max(acc_origin + static_cast<std::int64_t>(acc.size()),
                     law.origin() + static_cast<std::int64_t>(law.size()));
        if (lo != acc_origin || hi != acc_origin + static_cast<std::int64_t>(acc.size())) {
            std::vector<double> widened(static_cast<std::size_t>(hi - lo), 0.0);
            std::copy(acc.begin(), acc.end(),
                      widened.begin() + static_cast<std::ptrdiff_t>(acc_origin - lo));
            acc = std::move(widened);
            acc_origin = lo;
        }
    }
    const std::size_t base = static_cast<std::size_t>(law.origin() - acc_origin);
    for (std::size_t i = 0; i < law.size(); ++i) {
        acc[base + i] += coeff * law.weights()[i];
    }
}

}  // namespace detail

// Truncated-series compound Poisson exponential: exp(-alpha) sum alpha^m H^m / m!.
// The series is cut at the smallest M whose Poisson(alpha) upper tail is at
// most tail_tol; the discarded tail lands in lost_mass.
inline LatticeDistribution compound_poisson(double alpha, const LatticeDistribution& h,
                                            double tail_tol) {
    if (!(alpha > 0.0) || alpha > 700.0) {
        throw BadInput("compound_poisson requires alpha in (0, 700]");
    }
    if (!(tail_tol > 0.0) || tail_tol > 1e-3) {
        throw InvalidTolerance("tail tolerance must lie in (0, 1e-3]");
    }
    // Poisson(alpha) weights by recurrence until the remaining tail <= tail_tol
    std::vector<double> poisson_w;
    double pmf = std::exp(-alpha);
    double cdf = pmf;
    poisson_w.push_back(pmf);
    while (1.0 - cdf > tail_tol) {
        pmf *= alpha / static_cast<double>(poisson_w.size());
        if (pmf == 0.0) break;  // tail below double precision
        poisson_w.push_back(pmf);
        cdf += pmf;
        if (poisson_w.size() > 200000) {
            throw InvalidTolerance("compound_poisson series failed to converge");
        }
    }

    std::int64_t acc_origin = 0;
    std::vector<double> acc;
    LatticeDistribution term = LatticeDistribution::make(h.step(), 0, {1.0});  // H^0
    detail::add_scaled(acc_origin, acc, poisson_w[0], term);
    for (std::size_t m = 1; m < poisson_w.size(); ++m) {
        term = convolve(term, h);
        detail::add_scaled(acc_origin, acc, poisson_w[m], term);
    }
    const double represented = detail::stable_sum(acc);
    return LatticeDistribution::make(h.step(), acc_origin, std::move(acc),
                                     std::max(1.0 - represented, 0.0));
}

// Raw moment sums over the atoms (lost mass excluded by construction).
inline MomentSummary moments(const LatticeDistribution& f) {
    double mean = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        mean += f.value_at(i) * f.weights()[i];
    }
    double var = 0.0;
    double second = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double x = f.value_at(i);
        const double w = f.weights()[i];
        var += (x - mean) * (x - mean) * w;
        second += x * x * w;
    }
    return {mean, var, second};
}

// Trims machine-light support ends; trimmed mass moves to lost_mass so the
// total budget is preserved, never renormalized.
inline LatticeDistribution truncate_support(const LatticeDistribution& f, double tol) {
    if (!(tol > 0.0) || tol > 1e-6) {
        throw InvalidTolerance("truncation tolerance must lie in (0, 1e-6]");
    }
    std::size_t lo = 0;
    std::size_t hi = f.size();
    double trimmed = 0.0;
    while (hi - lo > 1) {
        const double left = f.weights()[lo];
        const double right = f.weights()[hi - 1];
        if (left <= right) {
            if (trimmed + left > tol) break;
            trimmed += left;
            ++lo;
        } else {
            if (trimmed + right > tol) break;
            trimmed += right;
            --hi;
        }
    }
    std::vector<double> w(f.weights().begin() + static_cast<std::ptrdiff_t>(lo),
                          f.weights().begin() + static_cast<std::ptrdiff_t>(hi));
    return LatticeDistribution::make(f.step(), f.origin() + static_cast<std::int64_t>(lo),
                                     std::move(w), f.lost_mass() + trimmed);
}

}  // namespace poisson_approx
