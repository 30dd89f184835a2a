#include <gtest/gtest.h>

#include "support.hpp"

using namespace emmkit;

namespace {

bool has_code(const ValidationReport& r, ErrorCode c) {
    for (const Violation& v : r.violations)
        if (v.code == c) return true;
    return false;
}

} // namespace

TEST(Validate, FrozenInstancesAreValid) {
    EXPECT_TRUE(validate_market(fixtures::three_by_three()).ok());
    EXPECT_TRUE(validate_market(fixtures::three_stock_original()).ok());
    EXPECT_TRUE(validate_market(fixtures::batch_market(true)).ok());
    EXPECT_TRUE(validate_market(fixtures::marks_market(true).spec).ok());
    EXPECT_TRUE(validate_market(fixtures::single_stock(1.0, 0.05, 0.2, 0.1)).ok());
}

TEST(Validate, JumpAtOrBelowMinusOne) {
    MarketSpec s = fixtures::three_by_three();
    std::get<DiscreteJumps>(s.jumps).loadings[1][0] = -1.0;
    EXPECT_TRUE(has_code(validate_market(s), ErrorCode::JumpBelowFloor));
}

TEST(Validate, IntensityMustStayPositive) {
    MarketSpec s = fixtures::three_by_three();
    std::get<DiscreteJumps>(s.jumps).intensities[0] = TimeFunction::samples({0.0, 1.0}, {1.0, 0.0});
    EXPECT_TRUE(has_code(validate_market(s), ErrorCode::NonpositiveIntensity));
}

TEST(Validate, ShapeMismatches) {
    MarketSpec s = fixtures::three_by_three();
    s.stocks[0].sigma.push_back(0.1);
    EXPECT_TRUE(has_code(validate_market(s), ErrorCode::ShapeMismatch));
    MarketSpec t = fixtures::three_by_three();
    std::get<DiscreteJumps>(t.jumps).loadings[2].pop_back();
    EXPECT_TRUE(has_code(validate_market(t), ErrorCode::ShapeMismatch));
}

TEST(Validate, SamplesMustCoverHorizon) {
    MarketSpec s = fixtures::three_by_three();
    s.stocks[0].alpha = TimeFunction::samples({0.0, 0.5}, {0.1, 0.2});
    EXPECT_TRUE(has_code(validate_market(s), ErrorCode::InvalidTimeFunction));
}

TEST(Validate, HistogramMustIntegrateToOne) {
    MarketSpec s = fixtures::marks_market(false).spec;
    std::get<ContinuousJumps>(s.jumps).density = MarkDensity::histogram({-0.4, 0.1, 0.6}, {1.0, 1.5});
    EXPECT_TRUE(has_code(validate_market(s), ErrorCode::DensityNotNormalized));
    std::get<ContinuousJumps>(s.jumps).density = MarkDensity::histogram({-0.4, 0.1, 0.6}, {0.8, 1.2});
    EXPECT_TRUE(validate_market(s).ok());
}

TEST(Validate, ResponseBelowFloorInsideSupport) {
    MarketSpec s = fixtures::marks_market(false).spec;
    // 0.2 - 4 y^2 is -1.24 at y = 0.6
    std::get<ContinuousJumps>(s.jumps).response[1] = {0.2, 0.0, -4.0};
    EXPECT_TRUE(has_code(validate_market(s), ErrorCode::JumpBelowFloor));
}

TEST(MarkDensity, FamiliesIntegrateToOne) {
    const std::vector<MarkDensity> ds{MarkDensity::uniform(-0.5, 1.0), MarkDensity::truncated_normal(-0.3, 0.8, 0.1, 0.2),
                                      MarkDensity::truncated_exponential(-0.2, 2.0, 1.5),
                                      MarkDensity::histogram({-0.5, 0.0, 0.5}, {0.6, 1.4})};
    for (const MarkDensity& d : ds) {
        EXPECT_NEAR(d.probability(d.lo(), d.hi()), 1.0, 1e-9);
        const double oracle = fixtures::gauss_legendre([&](double y) { return d(y); }, d.lo(), d.hi(), 4000);
        EXPECT_NEAR(oracle, 1.0, 1e-6);
    }
}

TEST(MarkDensity, SupBoundsTheDensity) {
    const MarkDensity d = MarkDensity::truncated_normal(-1.0, 1.0, 0.3, 0.25);
    for (auto [a, b] : {std::pair{-1.0, 0.0}, std::pair{0.0, 0.5}, std::pair{0.5, 1.0}})
        for (int k = 0; k <= 100; ++k) {
            const double y = a + (b - a) * k / 100.0;
            EXPECT_LE(d(y), d.sup(a, b) * (1.0 + 1e-12));
        }
}

TEST(MarkDensity, TruncatedNormalProbabilityMatchesErf) {
    const MarkDensity d = MarkDensity::truncated_normal(-1.0, 1.0, 0.2, 0.5);
    auto cdf = [](double x) { return fixtures::norm_cdf((x - 0.2) / 0.5); };
    const double z = cdf(1.0) - cdf(-1.0);
    EXPECT_NEAR(d.probability(-0.3, 0.4), (cdf(0.4) - cdf(-0.3)) / z, 1e-10);
}

TEST(ContinuousJumps, ConditionalMeansOfUniformMarks) {
    const fixtures::MarksInstance m = fixtures::marks_market(false);
    const ContinuousJumps& c = m.spec.continuous();
    for (int k = 0; k < 2; ++k)
        for (std::size_t i = 0; i < 3; ++i) {
            const Interval b = m.plan.cells[static_cast<std::size_t>(k)];
            EXPECT_NEAR(c.conditional_mean(i, b.lo, b.hi), m.cell_mean[k][i], 1e-12);
        }
}

TEST(Compensator, DriftSumsLoadingTimesIntensity) {
    const MarketSpec s = fixtures::three_stock_original();
    EXPECT_NEAR(compensator_drift(s, 0, 0.5), 0.1 * 2 - 0.2 * 1 + 0.15 * 3, 1e-15);
    EXPECT_NEAR(cumulative_intensity(fixtures::linear(1.0, 1.0), 0.0, 1.0), 1.5, 1e-15);
    EXPECT_THROW(cumulative_intensity(TimeFunction(1.0), 0.5, 0.2), Error);
}
