#include <gtest/gtest.h>

#include "support.hpp"

using namespace emmkit;

namespace {

std::vector<double> pooled_times(const TimeFunction& lambda, double horizon, std::size_t paths, std::uint64_t seed) {
    std::vector<double> all;
    for (std::size_t p = 0; p < paths; ++p) {
        Philox tm(seed, p, StreamRole::event_times), th(seed, p, StreamRole::thinning);
        const std::vector<double> ev = sample_poisson_inhomogeneous(lambda, horizon, tm, th);
        all.insert(all.end(), ev.begin(), ev.end());
    }
    return all;
}

} // namespace

TEST(Poisson, ThinnedEventsFollowTheIntensity) {
    const TimeFunction lambda = TimeFunction::samples({0.0, 0.5, 2.0}, {1.0, 4.0, 2.0});
    const std::vector<double> ev = pooled_times(lambda, 2.0, 10'000, 5);
    const IntensityTestReport r = empirical_intensity_test(ev, 10'000, lambda, 2.0);
    EXPECT_TRUE(r.pass) << "max |z| " << r.max_abs_z << " count z " << r.count_z;
}

TEST(Poisson, IntensityTestRejectsWrongRate) {
    const TimeFunction lambda = fixtures::linear(1.0, 1.0);
    const std::vector<double> ev = pooled_times(lambda, 1.0, 10'000, 6);
    EXPECT_FALSE(empirical_intensity_test(ev, 10'000, TimeFunction(1.5), 1.0).pass);
    EXPECT_THROW(empirical_intensity_test(ev, 9'999, lambda, 1.0), Error);
}

TEST(Poisson, PiecewiseIntensityWithZeroStretch) {
    const TimeFunction lambda = TimeFunction::piecewise({0.0, 0.5}, {0.0, 3.0});
    for (double t : pooled_times(lambda, 1.0, 2000, 7)) EXPECT_GE(t, 0.5);
}

TEST(JumpSampler, CellCountsAreIndependentPoisson) {
    const fixtures::MarksInstance m = fixtures::marks_market(false);
    std::vector<Interval> cells = m.plan.cells;
    cells.push_back({0.3, 0.6});
    const Emm phys = physical_measure(m.spec, cells);
    const JumpSampler js(m.spec, phys);
    const std::size_t n = 20'000;
    std::vector<std::vector<double>> counts(3, std::vector<double>(n, 0.0));
    for (std::size_t p = 0; p < n; ++p) {
        Philox tm(1, p, StreamRole::event_times), th(1, p, StreamRole::thinning), mk(1, p, StreamRole::marks);
        for (const Event& e : js.sample(tm, th, mk)) {
            counts[e.channel][p] += 1.0;
            ASSERT_TRUE(cells[e.channel].contains(e.mark));
        }
    }
    const double probs[3] = {0.4, 0.3, 0.3};
    for (std::size_t k = 0; k < 3; ++k) {
        const SampleStats s = sample_stats(counts[k]);
        EXPECT_NEAR(s.mean, 2.0 * probs[k], 4.0 * s.std_error);
        for (std::size_t q = k + 1; q < 3; ++q)
            EXPECT_LT(std::abs(fixtures::correlation(counts[k], counts[q])) * std::sqrt(double(n)), 4.0);
    }
}

TEST(PathSimulator, PureDiffusionPathIsClosedForm) {
    const MarketSpec s = fixtures::single_stock(1.3, 0.05, 0.2, 0.11);
    const PathSimulator sim(s, physical_measure(s), {0.25, 0.5});
    for (std::uint64_t p = 0; p < 50; ++p) {
        const PathBundle b = sim.simulate(3, p);
        EXPECT_TRUE(b.events.empty());
        for (std::size_t k = 0; k < sim.times().size(); ++k) {
            const double t = sim.times()[k];
            const double w = sim.brownian_value(b, 0, k);
            const double expect = 1.3 * std::exp((0.11 - 0.02) * t + 0.2 * w);
            EXPECT_NEAR(sim.stock(b, k, 0), expect, 1e-12 * expect);
        }
    }
}

TEST(PathSimulator, JumpPathIsClosedForm) {
    const MarketSpec s = fixtures::single_stock(1.0, 0.0, 0.3, 0.07, 2.0, -0.15);
    const PathSimulator sim(s, physical_measure(s));
    for (std::uint64_t p = 0; p < 50; ++p) {
        const PathBundle b = sim.simulate(4, p);
        const double w = sim.brownian_value(b, 0, 1);
        const double n = static_cast<double>(sim.channel_counts(b, 1)[0]);
        const double expect = std::exp((0.07 - 0.045 + 2.0 * 0.15) + 0.3 * w + n * std::log(0.85));
        EXPECT_NEAR(sim.stock(b, 1, 0), expect, 1e-12 * expect);
    }
}

TEST(PathSimulator, MeasureShiftsBrownianDrift) {
    MarketSpec s = fixtures::single_stock(1.0, 0.05, 0.2, 0.05);
    s.stocks[0].sigma[0] = TimeFunction::piecewise({0.0, 0.5}, {0.1, 0.4});
    Emm q = physical_measure(s);
    q.theta[0] = fixtures::linear(0.5, 1.0);
    const PathSimulator sim(s, q, {0.5});
    std::vector<double> w(20'000), x(20'000);
    for (std::size_t p = 0; p < w.size(); ++p) {
        const PathBundle b = sim.simulate(9, p);
        w[p] = sim.brownian_value(b, 0, 2);
        x[p] = b.gauss[sim.gauss_offset(1, 0) + sim.sigma_slot(0)];
    }
    const SampleStats sw = sample_stats(w), sx = sample_stats(x);
    // physical W = W~ - int theta, so its mean is -(0.5 + 0.5) under q
    EXPECT_NEAR(sw.mean, -1.0, 4.0 * sw.std_error);
    EXPECT_NEAR(sw.std_dev * sw.std_dev, 1.0, 0.05);
    // int_{0.5}^{1} 0.4 dW has mean -0.4 * int_{0.5}^{1} (0.5 + s) ds
    const double mean_x = -0.4 * (0.25 + 0.375);
    EXPECT_NEAR(sx.mean, mean_x, 4.0 * sx.std_error);
    EXPECT_NEAR(sx.std_dev * sx.std_dev, 0.16 * 0.5, 0.01);
}

TEST(PathSimulator, DensityOfShiftedMeasureIsExplicit) {
    const MarketSpec s = fixtures::single_stock(1.0, 0.05, 0.2, 0.13, 1.5, 0.1);
    // one equation, two unknowns: fix lambda_tilde = 2 and solve for theta
    Emm q = physical_measure(s);
    q.lambda_tilde[0] = TimeFunction(2.0);
    q.theta[0] = TimeFunction((0.13 - 0.05 - (1.5 - 2.0) * 0.1) / 0.2);
    ASSERT_TRUE(verify_uplift(q, s).pass);
    const PathSimulator sim(s, physical_measure(s), {}, {q});
    const double th = q.theta[0](0.0), lt = q.lambda_tilde[0](0.0);
    for (std::uint64_t p = 0; p < 30; ++p) {
        const PathBundle b = sim.simulate(2, p);
        const double w = sim.brownian_value(b, 0, 1);
        const double n = static_cast<double>(sim.channel_counts(b, 1)[0]);
        const double expect = -th * w - 0.5 * th * th + (1.5 - lt) + n * std::log(lt / 1.5);
        EXPECT_NEAR(b.log_z[1], expect, 1e-10);
        EXPECT_NEAR(rn_density_path(sim, b)[1], std::exp(expect), 1e-10 * std::exp(expect));
    }
}

TEST(PathSimulator, NullMarkWhenMeasuresDisagreeOnAnEvent) {
    const MarketSpec s = fixtures::single_stock(1.0, 0.05, 0.2, 0.13, 5.0, 0.1);
    Emm q = physical_measure(s);
    q.lambda_tilde[0] = TimeFunction(0.0);
    const PathSimulator sim(s, physical_measure(s), {}, {q});
    bool thrown = false;
    for (std::uint64_t p = 0; p < 10 && !thrown; ++p) {
        try {
            sim.simulate(1, p);
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::NullMark);
            thrown = true;
        }
    }
    EXPECT_TRUE(thrown);
}

TEST(PathSimulator, CompleteKeepsSelectedRandomness) {
    const MarketSpec s = fixtures::three_stock_original();
    const PathSimulator sim(s, physical_measure(s), {0.5});
    const PathBundle base = sim.simulate(5, 0);
    const PathBundle same = sim.complete(base, {true}, {true, true, true}, 5, 77);
    EXPECT_EQ(same.stocks, base.stocks);
    const PathBundle part = sim.complete(base, {true}, {true, true, false}, 5, 78);
    for (std::size_t k = 0; k < sim.times().size(); ++k) EXPECT_EQ(sim.brownian_value(part, 0, k), sim.brownian_value(base, 0, k));
    const auto c0 = sim.channel_counts(base, 2), c1 = sim.channel_counts(part, 2);
    EXPECT_EQ(c0[0], c1[0]);
    EXPECT_EQ(c0[1], c1[1]);
}

TEST(PathSimulator, ObservationTimesMustLieInHorizon) {
    const MarketSpec s = fixtures::single_stock(1.0, 0.05, 0.2, 0.1);
    EXPECT_THROW(PathSimulator(s, physical_measure(s), {1.5}), Error);
    const PathSimulator sim(s, physical_measure(s), {0.3});
    EXPECT_THROW(sim.time_index(0.31), Error);
    EXPECT_EQ(sim.time_index(0.3), 1u);
}

TEST(PathSimulator, ResultsDoNotDependOnThreadCount) {
    const MarketSpec s = fixtures::three_stock_original();
    const Emm q = construct_uplifted_emm(s, fixtures::neglect_plan({2})).emm;
    McOptions a;
    a.paths = 3000;
    a.threads = 1;
    McOptions b = a;
    b.threads = 3;
    const std::vector<Payoff> claims{Payoff::terminal(0), Payoff::call(1, 1.0)};
    const auto ra = price_mc_many(s, q, claims, a), rb = price_mc_many(s, q, claims, b);
    for (std::size_t k = 0; k < claims.size(); ++k) {
        EXPECT_EQ(ra[k].estimate, rb[k].estimate);
        EXPECT_EQ(ra[k].std_error, rb[k].std_error);
    }
}

TEST(DoleansDade, ProductFormula) {
    const JumpProcessPath x{0.3, 0.04, {0.1, -0.2, 0.5}};
    EXPECT_NEAR(doleans_dade_eval(x), std::exp(0.3 - 0.02) * 1.1 * 0.8 * 1.5, 1e-14);
    const JumpProcessPath neg{0.0, 0.0, {-1.5}};
    EXPECT_NEAR(doleans_dade_eval(neg), -0.5, 1e-15);
    try {
        doleans_dade_eval({0.0, 0.0, {-1.0}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::FactorAtMinusOne);
    }
}
