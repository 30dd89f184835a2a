#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "emmkit/model.hpp"
#include "emmkit/mpr.hpp"

namespace emmkit {

/// Indices are zero-based. For discrete markets an omitted retain list means every
/// driver not batched or neglected; an omitted keep_brownians keeps all of them.
struct ReductionPlan {
    std::optional<std::vector<std::size_t>> keep_brownians;
    std::optional<std::vector<std::size_t>> retain;
    std::vector<std::vector<std::size_t>> batches;
    std::vector<std::size_t> neglect;
    std::vector<Interval> cells;
    bool neglect_remainder = true;

    bool is_continuous() const noexcept { return !cells.empty(); }
    bool has_batches() const noexcept { return !batches.empty(); }
};

struct ReducedDriver {
    enum class Kind { retained, batch, cell };
    Kind kind = Kind::retained;
    std::vector<std::size_t> members;
    std::vector<TimeFunction> weights;
    Interval cell;
};

struct FictitiousMarket {
    MarketSpec original;
    ReductionPlan plan;
    MarketSpec spec;
    std::vector<std::size_t> kept_brownians;
    std::vector<ReducedDriver> drivers;
    std::vector<std::size_t> neglected;
    std::vector<Interval> remainder;
    std::vector<std::string> warnings;
    std::size_t grid_points = 256;

    TimeGrid grid() const { return market_grid(original, grid_points); }
    bool complete_neglect() const noexcept { return !plan.is_continuous() && !plan.has_batches(); }
};

namespace detail {

inline std::vector<std::size_t> resolve_brownians(const MarketSpec& spec, const ReductionPlan& plan) {
    std::vector<std::size_t> keep;
    if (!plan.keep_brownians) {
        for (std::size_t j = 0; j < spec.brownians; ++j) keep.push_back(j);
        return keep;
    }
    keep = *plan.keep_brownians;
    std::vector<bool> seen(spec.brownians, false);
    for (std::size_t j : keep) {
        if (j >= spec.brownians) throw Error(ErrorCode::PlanError, "keep_brownians index " + std::to_string(j) + " out of range");
        if (seen[j]) throw Error(ErrorCode::PlanError, "keep_brownians repeats index " + std::to_string(j));
        seen[j] = true;
    }
    return keep;
}

inline std::vector<std::size_t> resolve_retained(const MarketSpec& spec, const ReductionPlan& plan) {
    const std::size_t M = spec.drivers();
    std::vector<int> owner(M, 0);
    auto claim = [&](std::size_t m) {
        if (m >= M) throw Error(ErrorCode::PlanError, "driver index " + std::to_string(m) + " out of range");
        if (owner[m]++) throw Error(ErrorCode::PlanError, "driver " + std::to_string(m) + " assigned twice");
    };
    for (const auto& b : plan.batches) {
        if (b.empty()) throw Error(ErrorCode::PlanError, "empty batch");
        for (std::size_t m : b) claim(m);
    }
    for (std::size_t m : plan.neglect) claim(m);
    std::vector<std::size_t> retain;
    if (plan.retain) {
        retain = *plan.retain;
        for (std::size_t m : retain) claim(m);
        for (std::size_t m = 0; m < M; ++m)
            if (!owner[m]) throw Error(ErrorCode::PlanError, "driver " + std::to_string(m) + " not assigned");
    } else {
        for (std::size_t m = 0; m < M; ++m)
            if (!owner[m]) retain.push_back(m);
    }
    return retain;
}

inline MarketSpec restrict_brownians(const MarketSpec& spec, const std::vector<std::size_t>& keep) {
    MarketSpec out;
    out.horizon = spec.horizon;
    out.rate = spec.rate;
    out.brownians = keep.size();
    for (const Stock& s : spec.stocks) {
        Stock t{s.s0, s.alpha, {}};
        for (std::size_t j : keep) t.sigma.push_back(s.sigma[j]);
        out.stocks.push_back(std::move(t));
    }
    return out;
}

inline void check_size(FictitiousMarket& fm) {
    const std::size_t unknowns = fm.kept_brownians.size() + fm.drivers.size();
    if (fm.kept_brownians.empty() && fm.drivers.empty())
        throw Error(ErrorCode::EmptyRetention, "plan retains no Brownian motion and no jump driver");
    if (unknowns != fm.original.n())
        fm.warnings.push_back("reduced market has " + std::to_string(unknowns) + " sources of risk for " +
                              std::to_string(fm.original.n()) + " stocks; it cannot be complete");
}

inline FictitiousMarket reduce_discrete(const MarketSpec& spec, const ReductionPlan& plan, std::size_t points) {
    if (!spec.is_discrete()) throw Error(ErrorCode::PlanMismatch, "discrete plan on a market with a mark density");
    if (plan.is_continuous()) throw Error(ErrorCode::PlanMismatch, "cell plan on a discrete market");
    FictitiousMarket fm;
    fm.original = spec;
    fm.plan = plan;
    fm.grid_points = points;
    fm.kept_brownians = resolve_brownians(spec, plan);
    const std::vector<std::size_t> retain = resolve_retained(spec, plan);
    fm.neglected = plan.neglect;
    std::sort(fm.neglected.begin(), fm.neglected.end());
    fm.spec = restrict_brownians(spec, fm.kept_brownians);

    const DiscreteJumps& d = spec.discrete();
    const std::size_t n = spec.n();
    DiscreteJumps out;
    out.loadings.assign(n, {});
    for (std::size_t m : retain) {
        fm.drivers.push_back({ReducedDriver::Kind::retained, {m}, {TimeFunction(1.0)}, {}});
        out.intensities.push_back(d.intensities[m]);
        for (std::size_t i = 0; i < n; ++i) out.loadings[i].push_back(d.loadings[i][m]);
    }
    for (const auto& batch : plan.batches) {
        ReducedDriver rd{ReducedDriver::Kind::batch, batch, {}, {}};
        if (batch.size() == 1) {
            const std::size_t m = batch.front();
            rd.weights = {TimeFunction(1.0)};
            out.intensities.push_back(d.intensities[m]);
            for (std::size_t i = 0; i < n; ++i) out.loadings[i].push_back(d.loadings[i][m]);
            fm.drivers.push_back(std::move(rd));
            continue;
        }
        TimeGrid g(spec.horizon, points);
        for (std::size_t m : batch) {
            g.include(d.intensities[m]);
            for (std::size_t i = 0; i < n; ++i) g.include(d.loadings[i][m]);
        }
        auto gamma_at = [&](double t) {
            double s = 0.0;
            for (std::size_t m : batch) s += d.intensities[m](t);
            return s;
        };
        out.intensities.push_back(g.tabulate(gamma_at));
        for (std::size_t m : batch)
            rd.weights.push_back(g.tabulate([&](double t) { return d.intensities[m](t) / gamma_at(t); }));
        for (std::size_t i = 0; i < n; ++i) {
            out.loadings[i].push_back(g.tabulate([&](double t) {
                const double gamma = gamma_at(t);
                double acc = 0.0;
                for (std::size_t m : batch) acc += d.intensities[m](t) / gamma * d.loadings[i][m](t);
                return acc;
            }));
        }
        fm.drivers.push_back(std::move(rd));
    }
    fm.spec.jumps = std::move(out);
    check_size(fm);
    return fm;
}

} // namespace detail

inline FictitiousMarket reduce_complete_neglect(const MarketSpec& spec, const ReductionPlan& plan,
                                                std::size_t points = 256) {
    if (plan.has_batches()) throw Error(ErrorCode::PlanMismatch, "complete neglect plan may not contain batches");
    return detail::reduce_discrete(spec, plan, points);
}

inline FictitiousMarket reduce_batch(const MarketSpec& spec, const ReductionPlan& plan, std::size_t points = 256) {
    return detail::reduce_discrete(spec, plan, points);
}

inline FictitiousMarket reduce_continuous(const MarketSpec& spec, const ReductionPlan& plan, std::size_t points = 256) {
    if (spec.is_discrete()) throw Error(ErrorCode::PlanMismatch, "cell plan on a discrete market");
    if (!plan.is_continuous()) throw Error(ErrorCode::PlanMismatch, "market with a mark density needs a cell plan");
    const ContinuousJumps& c = spec.continuous();
    const Interval B = c.density.support();
    const double tol = 1e-12 * std::max(1.0, B.width());

    std::vector<Interval> sorted = plan.cells;
    for (const Interval& b : sorted) {
        if (!(b.hi > b.lo)) throw Error(ErrorCode::PlanError, "cell with empty interior");
        if (b.lo < B.lo - tol || b.hi > B.hi + tol) throw Error(ErrorCode::PlanError, "cell outside the mark support");
    }
    std::sort(sorted.begin(), sorted.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
    for (std::size_t k = 1; k < sorted.size(); ++k)
        if (sorted[k].lo < sorted[k - 1].hi - tol) throw Error(ErrorCode::PlanError, "cells overlap");

    FictitiousMarket fm;
    fm.original = spec;
    fm.plan = plan;
    fm.grid_points = points;
    fm.kept_brownians = detail::resolve_brownians(spec, plan);
    fm.spec = detail::restrict_brownians(spec, fm.kept_brownians);

    DiscreteJumps out;
    out.loadings.assign(spec.n(), {});
    for (const Interval& b : plan.cells) {
        const double p = c.density.probability(b.lo, b.hi);
        if (!(p >= 1e-12)) throw Error(ErrorCode::EmptyCell, "cell carries probability " + std::to_string(p));
        fm.drivers.push_back({ReducedDriver::Kind::cell, {}, {TimeFunction(1.0)}, b});
        out.intensities.push_back(c.total_intensity.scaled(p));
        for (std::size_t i = 0; i < spec.n(); ++i) out.loadings[i].push_back(TimeFunction(c.conditional_mean(i, b.lo, b.hi)));
    }

    double cursor = B.lo;
    auto gap = [&](double lo, double hi) {
        if (hi - lo > tol && c.density.probability(lo, hi) >= 1e-12) fm.remainder.push_back({lo, hi});
    };
    for (const Interval& b : sorted) {
        gap(cursor, b.lo);
        cursor = std::max(cursor, b.hi);
    }
    gap(cursor, B.hi);
    if (!plan.neglect_remainder && !fm.remainder.empty())
        throw Error(ErrorCode::PlanError, "cells leave part of the support uncovered but the remainder is not neglected");

    fm.spec.jumps = std::move(out);
    detail::check_size(fm);
    return fm;
}

inline FictitiousMarket reduce(const MarketSpec& spec, const ReductionPlan& plan, std::size_t points = 256) {
    if (plan.is_continuous() || !spec.is_discrete()) return reduce_continuous(spec, plan, points);
    return reduce_batch(spec, plan, points);
}

} // namespace emmkit
