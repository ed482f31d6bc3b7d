#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "poisson_approx/philox.hpp"

using poisson_approx::PhiloxStream;
using poisson_approx::cumulative_weights;

TEST(Philox, KnownAnswerZeroInput) {
    const auto out = PhiloxStream::block({0u, 0u, 0u, 0u}, {0u, 0u});
    EXPECT_EQ(out[0], 0x6627e8d5u);
    EXPECT_EQ(out[1], 0xe169c58du);
    EXPECT_EQ(out[2], 0xbc57ac4cu);
    EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, DeterministicAcrossInstances) {
    PhiloxStream a(42, 7, 3);
    PhiloxStream b(42, 7, 3);
    for (int i = 0; i < 256; ++i) {
        ASSERT_EQ(a.next_u32(), b.next_u32());
    }
}

TEST(Philox, StreamsSeparate) {
    PhiloxStream a(42, 7, 3);
    PhiloxStream b(42, 8, 3);
    PhiloxStream c(42, 7, 4);
    PhiloxStream d(43, 7, 3);
    bool differ_b = false;
    bool differ_c = false;
    bool differ_d = false;
    const std::uint32_t first = PhiloxStream(42, 7, 3).next_u32();
    (void)first;
    for (int i = 0; i < 64; ++i) {
        const std::uint32_t ref = a.next_u32();
        differ_b |= ref != b.next_u32();
        differ_c |= ref != c.next_u32();
        differ_d |= ref != d.next_u32();
    }
    EXPECT_TRUE(differ_b);
    EXPECT_TRUE(differ_c);
    EXPECT_TRUE(differ_d);
}

TEST(Philox, Uniform01RangeAndMean) {
    PhiloxStream rng(1, 0);
    double sum = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / n, 0.5, 0.02);
}

TEST(Philox, PoissonSmallMeanMatches) {
    PhiloxStream rng(2, 0);
    const double mean = 3.0;
    const int n = 20000;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double k = static_cast<double>(rng.poisson(mean));
        sum += k;
        sq += k * k;
    }
    const double m = sum / n;
    EXPECT_NEAR(m, mean, 0.1);
    EXPECT_NEAR(sq / n - m * m, mean, 0.35);
}

TEST(Philox, PoissonChunkedMeanMatches) {
    PhiloxStream rng(3, 0);
    const double mean = 100.5;
    const int n = 5000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        sum += static_cast<double>(rng.poisson(mean));
    }
    EXPECT_NEAR(sum / n, mean, 1.0);
}

TEST(Philox, DiscreteFrequencies) {
    PhiloxStream rng(4, 0);
    const std::vector<double> w{0.2, 0.3, 0.5};
    const std::vector<double> cum = cumulative_weights(w);
    ASSERT_EQ(cum.size(), 3u);
    EXPECT_NEAR(cum[2], 1.0, 1e-15);
    std::array<int, 3> counts{};
    const int n = 30000;
    for (int i = 0; i < n; ++i) {
        const std::size_t idx = rng.discrete(cum);
        ASSERT_LT(idx, 3u);
        ++counts[idx];
    }
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(static_cast<double>(counts[i]) / n, w[i], 0.02);
    }
}

TEST(Philox, DiscreteDegenerateAndEdges) {
    PhiloxStream rng(5, 0);
    const std::vector<double> cum = cumulative_weights(std::vector<double>{1.0});
    for (int i = 0; i < 16; ++i) {
        EXPECT_EQ(rng.discrete(cum), 0u);
    }
    const std::vector<double> cum2 = cumulative_weights(std::vector<double>{0.0, 1.0, 0.0});
    for (int i = 0; i < 64; ++i) {
        EXPECT_EQ(rng.discrete(cum2), 1u);
    }
}

TEST(Philox, PoissonZeroMean) {
    PhiloxStream rng(6, 0);
    for (int i = 0; i < 16; ++i) {
        EXPECT_EQ(rng.poisson(0.0), 0u);
    }
}
