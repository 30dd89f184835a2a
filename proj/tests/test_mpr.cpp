#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace emmkit;

TEST(Mpr, ThreeByThreeInstance) {
    const MarketClassification c = solve_mpr(assemble_mpr_system(fixtures::three_by_three(), 0.0));
    ASSERT_EQ(c.tag, MarketTag::Complete);
    EXPECT_NEAR(c.solution(0), 0.5, 1e-12);
    EXPECT_NEAR(c.solution(1), 1.5, 1e-12);
    EXPECT_NEAR(c.solution(2), 1.2, 1e-12);
    EXPECT_LT(c.residual, 1e-10);
    EXPECT_TRUE(c.intensities_valid);
    EXPECT_FALSE(c.minimum_norm);
}

TEST(Mpr, AgreesWithEliminationOracleOnRandomCompleteMarkets) {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(-0.4, 0.4), pos(0.5, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t D = trial % 3, M = 3 - D, n = 3;
        MarketSpec s;
        s.rate = 0.03;
        s.brownians = D;
        DiscreteJumps d;
        for (std::size_t m = 0; m < M; ++m) d.intensities.push_back(pos(gen));
        d.loadings.assign(n, {});
        for (std::size_t i = 0; i < n; ++i) {
            Stock st{1.0, TimeFunction(0.03 + u(gen)), {}};
            for (std::size_t j = 0; j < D; ++j) st.sigma.push_back(u(gen));
            for (std::size_t m = 0; m < M; ++m) d.loadings[i].push_back(u(gen));
            s.stocks.push_back(st);
        }
        s.jumps = d;
        const MprSystem sys = assemble_mpr_system(s, 0.0);
        std::vector<std::vector<double>> a(n, std::vector<double>(n));
        std::vector<double> b(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < D; ++j) a[i][j] = s.stocks[i].sigma[j](0.0);
            double rhs = s.stocks[i].alpha(0.0) - 0.03;
            for (std::size_t m = 0; m < M; ++m) {
                a[i][D + m] = -d.loadings[i][m](0.0);
                rhs -= d.intensities[m](0.0) * d.loadings[i][m](0.0);
            }
            b[i] = rhs;
        }
        const std::vector<double> x = fixtures::gauss_solve(a, b);
        const MarketClassification c = solve_mpr(sys);
        ASSERT_EQ(c.tag, MarketTag::Complete);
        for (std::size_t k = 0; k < n; ++k)
            EXPECT_NEAR(c.solution(static_cast<Eigen::Index>(k)), x[k], 1e-9 * (1.0 + std::abs(x[k])));
    }
}

TEST(Mpr, IncompleteMarketHasNullspace) {
    const MarketClassification c = solve_mpr(assemble_mpr_system(fixtures::three_stock_original(), 0.0));
    EXPECT_EQ(c.tag, MarketTag::IncompleteArbitrageFree);
    EXPECT_EQ(c.nullspace_dim, 1u);
    EXPECT_EQ(c.rank, 3u);
    EXPECT_TRUE(c.minimum_norm);
    EXPECT_LT(c.residual, 1e-12);
}

TEST(Mpr, RedundantStocksWithDifferentDriftsAreArbitrage) {
    MarketSpec s = fixtures::single_stock(1.0, 0.05, 0.2, 0.1);
    s.stocks.push_back(Stock{1.0, TimeFunction(0.2), {TimeFunction(0.2)}});
    s.jumps = DiscreteJumps{{}, {{}, {}}};
    const MarketClassification c = solve_mpr(assemble_mpr_system(s, 0.0));
    EXPECT_EQ(c.tag, MarketTag::Arbitrage);
    EXPECT_GT(c.residual, 1e-3);
}

TEST(Mpr, NegativeIntensityFlagged) {
    MarketSpec s = fixtures::three_by_three();
    s.stocks[0].alpha = TimeFunction(0.05 + 0.19 - 0.5);
    const MarketClassification c = solve_mpr(assemble_mpr_system(s, 0.0));
    EXPECT_EQ(c.tag, MarketTag::Complete);
    EXPECT_FALSE(c.intensities_valid);
    try {
        solve_unique_emm(s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidIntensities);
    }
}

TEST(Mpr, PureDiffusionAndPureJumpMarkets) {
    const MarketClassification bs = solve_mpr(assemble_mpr_system(fixtures::single_stock(1.0, 0.05, 0.2, 0.13), 0.0));
    ASSERT_EQ(bs.tag, MarketTag::Complete);
    EXPECT_NEAR(bs.solution(0), 0.4, 1e-14);

    MarketSpec pj;
    pj.rate = 0.0;
    pj.brownians = 0;
    pj.stocks.push_back(Stock{1.0, TimeFunction(0.0), {}});
    pj.jumps = DiscreteJumps{{2.0}, {{TimeFunction(0.1)}}};
    const MarketClassification c = solve_mpr(assemble_mpr_system(pj, 0.0));
    ASSERT_EQ(c.tag, MarketTag::Complete);
    EXPECT_NEAR(c.solution(0), 2.0, 1e-14);
}

TEST(Mpr, UniqueEmmFollowsTimeVariation) {
    MarketSpec s = fixtures::single_stock(1.0, 0.05, 0.2, 0.0);
    s.stocks[0].alpha = fixtures::linear(0.05, 0.1);
    const Emm e = solve_unique_emm(s);
    EXPECT_EQ(e.theta[0].kind(), TimeFunction::Kind::samples);
    for (double t : {0.0, 0.3, 0.77, 1.0}) EXPECT_NEAR(e.theta[0](t), 0.1 * t / 0.2, 1e-12);
}

TEST(Mpr, IncompleteMarketHasNoUniqueEmm) {
    try {
        solve_unique_emm(fixtures::three_stock_original());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotComplete);
        EXPECT_NE(std::string(e.what()).find("t=0"), std::string::npos);
    }
}

TEST(Mpr, ContinuousMarketSolvesForTotalIntensity) {
    MarketSpec s;
    s.rate = 0.0;
    s.brownians = 0;
    s.stocks.push_back(Stock{1.0, TimeFunction(0.0), {}});
    s.jumps = ContinuousJumps{MarkDensity::uniform(0.0, 0.2), 2.0, {{0.0, 1.0}}};
    const MarketClassification c = solve_mpr(assemble_mpr_system(s, 0.0));
    ASSERT_EQ(c.tag, MarketTag::Complete);
    EXPECT_NEAR(c.solution(0), 2.0, 1e-12);
}
