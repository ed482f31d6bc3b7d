#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "poisson_approx/simulator.hpp"
#include "testutil.hpp"

using namespace poisson_approx;

namespace {

RareEventModel theorem0_fixture(std::size_t n, double p) {
    RareEventModel model;
    model.step = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        model.components.push_back({p, point_mass(0.0, 1.0), point_mass(1.0, 1.0)});
    }
    return model;
}

MarkSampler plane_sampler() {
    MarkSampler sampler;
    sampler.dim = 2;
    const auto u = DiscreteVectorLaw::make(
        2, {{-1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {0.0, -1.0, 0.0}, {0.0, 1.0, 0.0}},
        {0.25, 0.25, 0.25, 0.25});
    const auto v = DiscreteVectorLaw::make(2, {{3.0, 3.0, 0.0}}, {1.0});
    sampler.components.push_back({0.05, u, v});
    sampler.components.push_back({0.02, u, v});
    return sampler;
}

}  // namespace

TEST(DiscreteVectorLaw, MakeValidatesAndNormalises) {
    EXPECT_THROW(DiscreteVectorLaw::make(0, {{0, 0, 0}}, {1.0}), BadInput);
    EXPECT_THROW(DiscreteVectorLaw::make(4, {{0, 0, 0}}, {1.0}), BadInput);
    EXPECT_THROW(DiscreteVectorLaw::make(1, {}, {}), BadInput);
    EXPECT_THROW(DiscreteVectorLaw::make(1, {{0, 0, 0}}, {0.5}), BadInput);
    EXPECT_THROW(DiscreteVectorLaw::make(1, {{0, 0, 0}, {1, 0, 0}}, {1.5, -0.5}), BadInput);

    const auto law = DiscreteVectorLaw::make(1, {{-2.0, 9.0, 9.0}, {2.0, 9.0, 9.0}},
                                             {0.5, 0.5});
    // coordinates beyond dim are cleared
    EXPECT_DOUBLE_EQ(law.atoms[0][1], 0.0);
    EXPECT_DOUBLE_EQ(law.mean()[0], 0.0);
    EXPECT_DOUBLE_EQ(law.support_radius(), 2.0);
}

TEST(DiscreteVectorLaw, FromLatticeKeepsValuesAndRejectsLossy) {
    const auto src = LatticeDistribution::make(0.5, -1, {0.25, 0.5, 0.25});
    const auto law = DiscreteVectorLaw::from_lattice(src);
    ASSERT_EQ(law.atoms.size(), 3u);
    EXPECT_DOUBLE_EQ(law.atoms[0][0], -0.5);
    EXPECT_DOUBLE_EQ(law.atoms[2][0], 0.5);
    EXPECT_DOUBLE_EQ(law.mean()[0], 0.0);

    const auto lossy = LatticeDistribution::make(1.0, 0, {0.5}, 0.5);
    EXPECT_THROW(DiscreteVectorLaw::from_lattice(lossy), BadInput);
}

TEST(MarkSampler, ValidationCatchesShapeErrors) {
    auto sampler = plane_sampler();
    EXPECT_NO_THROW(sampler.validate());
    sampler.components[1].p = 1.5;
    EXPECT_THROW(sampler.validate(), BadInput);
    sampler.components[1].p = 0.5;
    sampler.components[1].u = DiscreteVectorLaw::make(1, {{0, 0, 0}}, {1.0});
    EXPECT_THROW(sampler.validate(), BadInput);
    MarkSampler empty;
    EXPECT_THROW(empty.validate(), BadInput);
}

TEST(SampleX, BranchesFollowMixtureProbability) {
    const auto never = MarkSampler::from_model(theorem0_fixture(4, 0.0));
    const auto always = MarkSampler::from_model(theorem0_fixture(4, 1.0));
    for (std::uint64_t r = 0; r < 50; ++r) {
        for (const auto& mark : sample_x(never, 3, r)) EXPECT_DOUBLE_EQ(mark[0], 0.0);
        for (const auto& mark : sample_x(always, 3, r)) EXPECT_DOUBLE_EQ(mark[0], 1.0);
    }

    const auto mixed = MarkSampler::from_model(theorem0_fixture(1, 0.3));
    const std::size_t reps = 100000;
    double hits = 0.0;
    for (std::uint64_t r = 0; r < reps; ++r) {
        hits += sample_x(mixed, 5, r)[0][0];
    }
    const double freq = hits / static_cast<double>(reps);
    EXPECT_NEAR(freq, 0.3, 3.0 * std::sqrt(0.3 * 0.7 / static_cast<double>(reps)));
}

TEST(SampleX, DeterministicUnderSeedAndReplication) {
    const auto sampler = plane_sampler();
    const auto a = sample_x(sampler, 11, 7);
    const auto b = sample_x(sampler, 11, 7);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
    EXPECT_NE(sample_x(sampler, 11, 8), a);
}

TEST(Poissonize, CountMomentsMatchPoissonOne) {
    const auto sampler = MarkSampler::from_model(theorem0_fixture(3, 0.1));
    const std::size_t reps = 100000;
    double sum = 0.0, sum_sq = 0.0, zeros = 0.0, totals = 0.0;
    for (std::uint64_t r = 0; r < reps; ++r) {
        const auto y = poissonize(sampler, 9, r);
        const double nu = static_cast<double>(y.groups[0].nu);
        sum += nu;
        sum_sq += nu * nu;
        if (y.groups[0].nu == 0) zeros += 1.0;
        totals += static_cast<double>(y.total_count());
        for (const auto& g : y.groups) ASSERT_EQ(g.marks.size(), g.nu);
    }
    const double n = static_cast<double>(reps);
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    EXPECT_NEAR(mean, 1.0, 3.0 / std::sqrt(n));
    EXPECT_NEAR(var, 1.0, 3.0 * std::sqrt(3.0 / n));
    EXPECT_NEAR(zeros / n, std::exp(-1.0), 3.0 * std::sqrt(std::exp(-1.0) / n));
    // total mark count over all components has mean equal to the component count
    EXPECT_NEAR(totals / n, 3.0, 3.0 * std::sqrt(3.0 / n));
}

TEST(FunctionalSums, RawSumsAndGuards) {
    const auto sampler = MarkSampler::from_model(theorem0_fixture(5, 0.0));
    const auto marks = sample_x(sampler, 1, 0);
    const auto sums = functional_sums(marks, sampler);
    EXPECT_DOUBLE_EQ(sums.sum[0], 0.0);
    EXPECT_DOUBLE_EQ(sums.delta[0], 0.0);
    EXPECT_THROW(functional_sums(std::vector<Mark>{}, sampler), BadInput);
}

TEST(FunctionalSums, DeltaUsesSameCountDraw) {
    MarkSampler sampler;
    sampler.dim = 1;
    const auto u = DiscreteVectorLaw::make(1, {{2.0, 0, 0}}, {1.0});  // a = 2
    const auto v = DiscreteVectorLaw::make(1, {{0.0, 0, 0}}, {1.0});
    sampler.components.push_back({0.0, u, v});

    PointProcessSample y;
    y.groups.push_back({3, {{2.0, 0, 0}, {2.0, 0, 0}, {2.0, 0, 0}}});
    const auto sums = functional_sums(y, sampler);
    EXPECT_DOUBLE_EQ(sums.sum[0], 6.0);
    EXPECT_DOUBLE_EQ(sums.delta[0], 4.0);  // (nu - 1) * a = 2 * 2

    PointProcessSample single;
    single.groups.push_back({1, {{2.0, 0, 0}}});
    EXPECT_DOUBLE_EQ(functional_sums(single, sampler).delta[0], 0.0);

    PointProcessSample broken;
    broken.groups.push_back({2, {{2.0, 0, 0}}});
    EXPECT_THROW(functional_sums(broken, sampler), BadInput);
}

TEST(FunctionalSums, PoissonizedMeanMatchesIntensityMean) {
    RareEventModel model;
    model.step = 0.5;
    model.components.push_back(
        {0.2, LatticeDistribution::make(0.5, 0, {0.5, 0.5}), point_mass(2.0, 0.5)});
    model.components.push_back(
        {0.1, LatticeDistribution::make(0.5, -2, {0.5, 0.5}), point_mass(-1.5, 0.5)});
    const auto sampler = MarkSampler::from_model(model);
    double expected = 0.0;
    for (const auto& comp : model.components) {
        const auto mix = moments(mixture(comp.p, comp.u, comp.v));
        expected += mix.mean;
    }
    const std::size_t reps = 100000;
    double sum = 0.0;
    for (std::uint64_t r = 0; r < reps; ++r) {
        sum += functional_sums(poissonize(sampler, 21, r), sampler).sum[0];
    }
    EXPECT_NEAR(sum / static_cast<double>(reps), expected, 0.05);
}

TEST(VerifySandwich, Theorem0FixtureHasNonNegativeSlack) {
    const auto model = theorem0_fixture(3, 0.1);
    const auto report = verify_sandwich(model, 1.0, 100000, 17);
    EXPECT_DOUBLE_EQ(report.tau, 0.0);
    EXPECT_DOUBLE_EQ(report.control_term, 0.1);
    EXPECT_TRUE(report.delta_exact);
    EXPECT_DOUBLE_EQ(report.delta_term, 0.0);
    EXPECT_GE(report.slack_lower, 0.0);
    EXPECT_GE(report.slack_upper, 0.0);
    EXPECT_FALSE(report.pair_coupled);
    EXPECT_GE(report.pair_excess, 0.0);
    EXPECT_LE(report.pair_excess, 1.0);
    EXPECT_LE(report.error_budget, 1e-9);
}

TEST(VerifySandwich, CenteredModelDropsDeltaTerm) {
    RareEventModel model;
    model.step = 1.0;
    for (int i = 0; i < 3; ++i) {
        model.components.push_back({0.05, LatticeDistribution::make(1.0, -1, {0.5, 0.0, 0.5}),
                                    point_mass(4.0, 1.0)});
    }
    const auto report = verify_sandwich(model, 0.5, 100000, 3);
    EXPECT_DOUBLE_EQ(report.delta_term, 0.0);
    EXPECT_DOUBLE_EQ(report.tau, 1.0);
    EXPECT_NEAR(report.control_term, 0.05 + std::exp(-0.5), 1e-15);
    // generous allowance makes both sandwich directions hold exactly
    EXPECT_GE(report.slack_lower, 0.0);
    EXPECT_GE(report.slack_upper, 0.0);
}

TEST(VerifySandwich, ValidatesInputsAndSupport) {
    const auto model = theorem0_fixture(2, 0.1);
    EXPECT_THROW(verify_sandwich(model, 0.0, 100000, 1), BadInput);
    EXPECT_THROW(verify_sandwich(model, 1.0, 50000, 1), BadInput);

    RareEventModel lossy;
    lossy.step = 1.0;
    lossy.components.push_back(
        {0.1, LatticeDistribution::make(1.0, 0, {0.5}, 0.5), point_mass(1.0, 1.0)});
    EXPECT_THROW(verify_sandwich(lossy, 1.0, 100000, 1), SupportViolation);
}

TEST(VerifySandwich, FallsBackToBernsteinOffLattice) {
    RareEventModel model;
    model.step = 1.0;
    const double w = 0.1 * std::sqrt(2.0);
    model.components.push_back(
        {0.05, LatticeDistribution::make(1.0, 0, {0.8, 0.2}), point_mass(2.0, 1.0)});
    model.components.push_back(
        {0.05, LatticeDistribution::make(1.0, 0, {1.0 - w, w}), point_mass(2.0, 1.0)});
    const auto report = verify_sandwich(model, 0.75, 100000, 5);
    EXPECT_FALSE(report.delta_exact);
    const auto summary = summarize(model);
    EXPECT_DOUBLE_EQ(report.delta_term,
                     std::min(1.0, bernstein_delta_tail(summary, 0.75)));
}

TEST(VerifySandwich, DeterministicReports) {
    const auto model = theorem0_fixture(2, 0.08);
    const auto a = verify_sandwich(model, 1.0, 100000, 23);
    const auto b = verify_sandwich(model, 1.0, 100000, 23);
    EXPECT_DOUBLE_EQ(a.pair_excess, b.pair_excess);
    EXPECT_DOUBLE_EQ(a.slack_lower, b.slack_lower);
}

TEST(VerifySandwichMc, PlaneModelWithinBands) {
    const auto sampler = plane_sampler();
    const auto report = verify_sandwich_mc(sampler, 1.5, 20000, 29);
    EXPECT_DOUBLE_EQ(report.tau, 1.0);
    EXPECT_FALSE(report.delta_exact);
    EXPECT_DOUBLE_EQ(report.delta_term, 0.0);  // symmetric U means vanish coordinatewise
    EXPECT_GE(report.slack_lower, -report.error_budget);
    EXPECT_GE(report.slack_upper, -report.error_budget);
    EXPECT_THROW(verify_sandwich_mc(sampler, -1.0, 20000, 29), BadInput);
    EXPECT_THROW(verify_sandwich_mc(sampler, 1.0, 100, 29), BadInput);
    EXPECT_THROW(verify_sandwich_mc(sampler, 1.0, 20000, 29, 1), BadInput);
}

TEST(IndependenceCheck, PoissonCountsAreUncorrelated) {
    MarkSampler sampler;
    sampler.dim = 1;
    const auto u = DiscreteVectorLaw::make(1, {{-1.0, 0, 0}, {1.0, 0, 0}}, {0.5, 0.5});
    const auto v = DiscreteVectorLaw::make(1, {{0.0, 0, 0}}, {1.0});
    sampler.components.push_back({0.1, u, v});
    sampler.components.push_back({0.2, u, v});

    Box a{{0.5, 0.0, 0.0}, {1.5, 0.0, 0.0}};
    Box b{{-1.5, 0.0, 0.0}, {-0.5, 0.0, 0.0}};
    const auto report = independence_check(sampler, a, b, 20000, 31);
    EXPECT_TRUE(report.poissonized_independent);
    EXPECT_LE(std::abs(report.poissonized.correlation), report.corr_band);
    EXPECT_NEAR(report.intensity_a, 0.9 * 0.5 + 0.8 * 0.5, 1e-12);
    EXPECT_NEAR(report.poissonized.mean_a, report.intensity_a,
                3.0 * report.mean_a_std_error);
    EXPECT_NEAR(report.poissonized.mean_b, report.intensity_b,
                3.0 * report.mean_b_std_error);
}

TEST(IndependenceCheck, RawCountsShowForcedAnticorrelation) {
    MarkSampler sampler;
    sampler.dim = 1;
    const auto u = DiscreteVectorLaw::make(1, {{-1.0, 0, 0}, {1.0, 0, 0}}, {0.5, 0.5});
    const auto v = DiscreteVectorLaw::make(1, {{1.0, 0, 0}}, {1.0});
    sampler.components.push_back({0.0, u, v});

    Box a{{0.5, 0.0, 0.0}, {1.5, 0.0, 0.0}};
    Box b{{-1.5, 0.0, 0.0}, {-0.5, 0.0, 0.0}};
    const auto report = independence_check(sampler, a, b, 20000, 37);
    // one mark lands in exactly one box, so the raw counts are perfectly opposed
    EXPECT_NEAR(report.raw.correlation, -1.0, 1e-12);
    EXPECT_LT(report.raw.correlation, -report.corr_band);
    EXPECT_TRUE(report.poissonized_independent);
}

TEST(IndependenceCheck, RejectsBadRegions) {
    const auto sampler = MarkSampler::from_model(theorem0_fixture(2, 0.1));
    Box a{{-0.5, 0, 0}, {0.5, 0, 0}};
    Box overlapping{{0.25, 0, 0}, {2.0, 0, 0}};
    EXPECT_THROW(independence_check(sampler, a, overlapping, 20000, 1),
                 OverlappingRegions);
    Box inverted{{2.0, 0, 0}, {1.0, 0, 0}};
    EXPECT_THROW(independence_check(sampler, a, inverted, 20000, 1), BadInput);
    Box b{{1.5, 0, 0}, {2.5, 0, 0}};
    EXPECT_THROW(independence_check(sampler, a, b, 100, 1), BadInput);
}
