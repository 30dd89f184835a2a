#pragma once

// Frozen instances and independent reference computations shared by the tests.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <vector>

#include "emmkit/emmkit.hpp"

namespace fixtures {

using emmkit::ContinuousJumps;
using emmkit::DiscreteJumps;
using emmkit::MarketSpec;
using emmkit::MarkDensity;
using emmkit::Stock;
using emmkit::TimeFunction;

inline TimeFunction linear(double a, double b, double horizon = 1.0) {
    return TimeFunction::samples({0.0, horizon}, {a, a + b * horizon});
}

inline std::vector<std::vector<TimeFunction>> const_matrix(const std::vector<std::vector<double>>& m) {
    std::vector<std::vector<TimeFunction>> out;
    for (const auto& row : m) out.emplace_back(row.begin(), row.end());
    return out;
}

/// Three stocks, one Brownian motion, two drivers; unique solution theta = 0.5,
/// lambda_tilde = (1.5, 1.2) with r = 0.05.
inline MarketSpec three_by_three() {
    MarketSpec s;
    s.horizon = 1.0;
    s.rate = 0.05;
    s.brownians = 1;
    const double sig[3] = {0.2, 0.3, 0.1}, excess[3] = {0.19, 0.155, -0.06};
    for (int i = 0; i < 3; ++i) s.stocks.push_back(Stock{1.0, TimeFunction(0.05 + excess[i]), {TimeFunction(sig[i])}});
    s.jumps = DiscreteJumps{{2.0, 1.0}, const_matrix({{0.1, -0.2}, {0.05, 0.1}, {-0.1, 0.3}})};
    return s;
}

/// n equally spaced points on [0, T], both ends included.
inline std::vector<double> uniform_grid(double horizon, std::size_t n) {
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = horizon * static_cast<double>(k) / static_cast<double>(n - 1);
    return t;
}

/// The same market with a third driver (intensity 3) that the reduction neglects.
inline MarketSpec three_stock_original() {
    MarketSpec s = three_by_three();
    s.jumps = DiscreteJumps{{2.0, 1.0, 3.0}, const_matrix({{0.1, -0.2, 0.15}, {0.05, 0.1, -0.1}, {-0.1, 0.3, 0.2}})};
    return s;
}

/// Four drivers: the last two are neglected, for sequential reductions.
inline MarketSpec four_driver_original() {
    MarketSpec s = three_by_three();
    s.jumps = DiscreteJumps{{2.0, 1.0, 3.0, 0.5},
                            const_matrix({{0.1, -0.2, 0.15, -0.3}, {0.05, 0.1, -0.1, 0.25}, {-0.1, 0.3, 0.2, 0.1}})};
    return s;
}

/// Batching instance: drivers 1 and 2 are batched. Targets theta = 0.4,
/// lambda_tilde_0 = 1.5 and a batch intensity of 0.8 times the physical one. With
/// time_varying, driver 2 has intensity 1 + t and the drifts follow.
inline MarketSpec batch_market(bool time_varying) {
    MarketSpec s;
    s.horizon = 1.0;
    s.rate = 0.05;
    s.brownians = 1;
    const double sig[3] = {0.2, 0.3, 0.1};
    const double y[3][3] = {{0.1, -0.2, 0.3}, {0.05, 0.1, -0.15}, {-0.1, 0.3, 0.2}};
    const double theta = 0.4, l0 = 2.0, lt0 = 1.5, l1 = 1.0;
    DiscreteJumps d;
    d.intensities = {l0, l1, time_varying ? linear(1.0, 1.0) : TimeFunction(3.0)};
    d.loadings = const_matrix({{y[0][0], y[0][1], y[0][2]}, {y[1][0], y[1][1], y[1][2]}, {y[2][0], y[2][1], y[2][2]}});
    for (int i = 0; i < 3; ++i) {
        // (gamma - 0.8 gamma) * ybar = 0.2 * (l1 y1 + l2(t) y2), linear in t
        auto excess = [&](double l2) { return sig[i] * theta + (l0 - lt0) * y[i][0] + 0.2 * (l1 * y[i][1] + l2 * y[i][2]); };
        const TimeFunction alpha =
            time_varying ? TimeFunction::samples({0.0, 1.0}, {0.05 + excess(1.0), 0.05 + excess(2.0)})
                         : TimeFunction(0.05 + excess(3.0));
        s.stocks.push_back(Stock{1.0, alpha, {TimeFunction(sig[i])}});
    }
    s.jumps = std::move(d);
    return s;
}

inline emmkit::ReductionPlan batch_plan() {
    emmkit::ReductionPlan p;
    p.retain = std::vector<std::size_t>{0};
    p.batches = {{1, 2}};
    return p;
}

inline emmkit::ReductionPlan neglect_plan(std::vector<std::size_t> drivers) {
    emmkit::ReductionPlan p;
    p.neglect = std::move(drivers);
    return p;
}

/// Mark-driven market: uniform marks on (-0.4, 0.6), polynomial responses, cells
/// (-0.4, 0) and (0, 0.3), remainder (0.3, 0.6) neglected. Targets theta = 0.3 and
/// cell intensities 0.75 and 1.5 times the physical ones. Conditional means below are
/// worked out by hand for the uniform law.
struct MarksInstance {
    MarketSpec spec;
    emmkit::ReductionPlan plan;
    double theta = 0.3;
    double scale[2] = {0.75, 1.5};
    double cell_mean[2][3] = {{-0.2, -0.1 + 0.16 / 3.0, 0.14}, {0.15, 0.075 + 0.03, -0.07}};
    double cell_prob[2] = {0.4, 0.3};
};

inline MarksInstance marks_market(bool time_varying) {
    MarksInstance m;
    MarketSpec& s = m.spec;
    s.horizon = 1.0;
    s.rate = 0.05;
    s.brownians = 1;
    const double sig[3] = {0.2, 0.25, 0.15};
    const TimeFunction total = time_varying ? linear(2.0, 1.0) : TimeFunction(2.0);
    for (int i = 0; i < 3; ++i) {
        auto excess = [&](double lb) {
            double v = sig[i] * m.theta;
            for (int k = 0; k < 2; ++k) v += lb * m.cell_prob[k] * (1.0 - m.scale[k]) * m.cell_mean[k][i];
            return v;
        };
        const TimeFunction alpha = time_varying ? TimeFunction::samples({0.0, 1.0}, {0.05 + excess(2.0), 0.05 + excess(3.0)})
                                                : TimeFunction(0.05 + excess(2.0));
        s.stocks.push_back(Stock{1.0, alpha, {TimeFunction(sig[i])}});
    }
    s.jumps = ContinuousJumps{MarkDensity::uniform(-0.4, 0.6), total, {{0.0, 1.0}, {0.0, 0.5, 1.0}, {0.02, -0.6}}};
    m.plan.cells = {{-0.4, 0.0}, {0.0, 0.3}};
    return m;
}

/// Single stock with constant coefficients. Without a jump size the market is pure
/// diffusion; with one, a single driver of intensity lambda.
inline MarketSpec single_stock(double s0, double r, double sigma, double alpha, double lambda = 0.0, double jump = 0.0,
                               double horizon = 1.0) {
    MarketSpec s;
    s.horizon = horizon;
    s.rate = r;
    s.brownians = 1;
    s.stocks.push_back(Stock{s0, TimeFunction(alpha), {TimeFunction(sigma)}});
    if (lambda > 0.0) s.jumps = DiscreteJumps{{lambda}, {{TimeFunction(jump)}}};
    else s.jumps = DiscreteJumps{{}, {{}}};
    return s;
}

// ---------------------------------------------------------------------------
// Reference computations
// ---------------------------------------------------------------------------

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double bs_call(double s, double k, double r, double vol, double t) {
    const double sd = vol * std::sqrt(t);
    const double d1 = (std::log(s / k) + (r + 0.5 * vol * vol) * t) / sd;
    return s * norm_cdf(d1) - k * std::exp(-r * t) * norm_cdf(d1 - sd);
}

/// Call on a stock with one jump size y at risk-neutral rate lt: condition on the
/// number of jumps and sum the Black-Scholes values with the adjusted spot.
inline double poisson_mixture_call(double s, double k, double r, double vol, double t, double lt, double y) {
    double acc = 0.0, weight = std::exp(-lt * t);
    for (int j = 0; j < 200; ++j) {
        const double spot = s * std::pow(1.0 + y, j) * std::exp(-lt * y * t);
        acc += weight * bs_call(spot, k, r, vol, t);
        weight *= lt * t / (j + 1);
    }
    return acc;
}

/// Gaussian elimination with partial pivoting on a dense square system.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
        std::swap(a[p], a[c]);
        std::swap(b[p], b[c]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t c = n; c-- > 0;) {
        double s = b[c];
        for (std::size_t k = c + 1; k < n; ++k) s -= a[c][k] * x[k];
        x[c] = s / a[c][c];
    }
    return x;
}

/// Composite 5-point Gauss-Legendre rule on equal panels.
inline double gauss_legendre(const std::function<double(double)>& f, double a, double b, int panels = 400) {
    static const double x[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640, 0.9061798459386640};
    static const double w[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
                                0.2369268850561891};
    const double h = (b - a) / panels;
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        for (int k = 0; k < 5; ++k) acc += w[k] * f(mid + 0.5 * h * x[k]);
    }
    return 0.5 * h * acc;
}

/// Pearson correlation of two samples.
inline double correlation(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
        syy += (y[k] - my) * (y[k] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

} // namespace fixtures
