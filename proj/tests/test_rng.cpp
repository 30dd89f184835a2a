#include <gtest/gtest.h>

#include <cstdlib>

#include "support.hpp"

using namespace emmkit;

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox, KnownAnswers) {
    using A4 = std::array<std::uint32_t, 4>;
    using A2 = std::array<std::uint32_t, 2>;
    EXPECT_EQ(Philox::block(A4{0, 0, 0, 0}, A2{0, 0}), (A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(Philox::block(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}),
              (A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(Philox::block(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}),
              (A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, StreamsAreReproducibleAndDistinct) {
    Philox a(7, 3, StreamRole::brownian), b(7, 3, StreamRole::brownian);
    Philox c(7, 3, StreamRole::marks), d(7, 4, StreamRole::brownian), e(8, 3, StreamRole::brownian);
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
    EXPECT_NE(x, d());
    EXPECT_NE(x, e());
}

TEST(Philox, UniformExponentialNormalMoments) {
    Philox g(11, 0, StreamRole::brownian);
    const int n = 200'000;
    double su = 0.0, se = 0.0, sn = 0.0, sn2 = 0.0;
    for (int k = 0; k < n; ++k) {
        const double u = g.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        su += u;
        se += g.exponential();
        const double z = g.normal();
        sn += z;
        sn2 += z * z;
    }
    EXPECT_NEAR(su / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
    EXPECT_NEAR(se / n, 1.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(sn / n, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(sn2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Philox, SeedFromEnvironment) {
    ::unsetenv("EMMKIT_SEED");
    EXPECT_EQ(seed_from_env(), 0x5EEDu);
    ::setenv("EMMKIT_SEED", "0x1234", 1);
    EXPECT_EQ(seed_from_env(), 0x1234u);
    ::setenv("EMMKIT_SEED", "99", 1);
    EXPECT_EQ(seed_from_env(), 99u);
    ::unsetenv("EMMKIT_SEED");
}

TEST(Parallel, PairwiseSumAndStats) {
    std::vector<double> x(1001);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = static_cast<double>(k);
    EXPECT_EQ(pairwise_sum(x), 500500.0);
    const SampleStats s = sample_stats(x);
    EXPECT_DOUBLE_EQ(s.mean, 500.0);
    EXPECT_NEAR(s.std_dev, std::sqrt(1001.0 * 1002.0 / 12.0), 1e-9);
    EXPECT_NEAR(s.std_error, s.std_dev / std::sqrt(1001.0), 1e-12);
}

TEST(Parallel, ForCoversEveryIndexAndRethrows) {
    std::vector<int> hit(10'000, 0);
    parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
    for (int h : hit) ASSERT_EQ(h, 1);
    EXPECT_THROW(parallel_for(1000, 3, [](std::size_t i) { if (i == 517) throw std::runtime_error("boom"); }),
                 std::runtime_error);
}
