#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace poisson_approx {

// Philox4x32-10 counter-based generator. A stream is keyed by
// (seed, stream, substream); draws depend only on the key and the position
// within the stream, so replications scheduled on different threads produce
// identical output. stream and substream must fit in 32 bits.
class PhiloxStream {
public:
    PhiloxStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          ctr_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(substream)} {}

    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t prod0 = std::uint64_t{0xD2511F53u} * ctr[0];
            const std::uint64_t prod1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(prod0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(prod0);
            const auto hi1 = static_cast<std::uint32_t>(prod1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(prod1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += 0x9E3779B9u;
            key[1] += 0xBB67AE85u;
        }
        return ctr;
    }

    std::uint32_t next_u32() {
        if (pos_ == 4) {
            buf_ = block(ctr_, key_);
            // 64-bit block index lives in the low two counter words
            if (++ctr_[0] == 0) ++ctr_[1];
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Poisson sampling by inversion; means above 30 are split into
    // independent chunks so the linear search stays short.
    std::uint64_t poisson(double mean) {
        std::uint64_t total = 0;
        while (mean > 30.0) {
            total += poisson_small(30.0);
            mean -= 30.0;
        }
        return total + poisson_small(mean);
    }

    // Index into a discrete law given its inclusive cumulative weights.
    std::size_t discrete(std::span<const double> cumulative) {
        const double u = uniform01() * cumulative.back();
        std::size_t lo = 0;
        std::size_t hi = cumulative.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (cumulative[mid] > u) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        return lo;
    }

private:
    std::uint64_t poisson_small(double mean) {
        if (mean <= 0.0) return 0;
        const double u = uniform01();
        double pmf = std::exp(-mean);
        double cdf = pmf;
        std::uint64_t k = 0;
        while (u > cdf && k < 4096) {
            ++k;
            pmf *= mean / static_cast<double>(k);
            cdf += pmf;
        }
        return k;
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
};

// Inclusive prefix sums used by PhiloxStream::discrete.
inline std::vector<double> cumulative_weights(std::span<const double> weights) {
    std::vector<double> cum(weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        cum[i] = acc;
    }
    return cum;
}

}  // namespace poisson_approx
