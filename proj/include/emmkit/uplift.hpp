#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "emmkit/emm.hpp"
#include "emmkit/mpr.hpp"
#include "emmkit/reduction.hpp"

namespace emmkit {

namespace detail {

inline void check_fictitious_shape(const Emm& fict, const FictitiousMarket& fm) {
    if (fict.theta.size() != fm.kept_brownians.size() || fict.lambda_tilde.size() != fm.drivers.size())
        throw Error(ErrorCode::ShapeMismatch, "fictitious EMM does not match the reduced market");
}

inline std::vector<TimeFunction> lift_theta(const Emm& fict, const FictitiousMarket& fm) {
    std::vector<TimeFunction> theta(fm.original.brownians, TimeFunction(0.0));
    for (std::size_t j = 0; j < fm.kept_brownians.size(); ++j) theta[fm.kept_brownians[j]] = fict.theta[j];
    return theta;
}

inline Emm uplift_discrete(const Emm& fict, const FictitiousMarket& fm) {
    check_fictitious_shape(fict, fm);
    const DiscreteJumps& d = fm.original.discrete();
    Emm e;
    e.theta = lift_theta(fict, fm);
    // neglected drivers keep their physical intensity
    e.lambda_tilde = d.intensities;
    for (std::size_t k = 0; k < fm.drivers.size(); ++k) {
        const ReducedDriver& rd = fm.drivers[k];
        const TimeFunction& gbar = fict.lambda_tilde[k];
        if (rd.members.size() == 1) {
            if (!(gbar.inf(0.0, fm.original.horizon) > 0.0))
                throw Error(ErrorCode::NonpositiveGamma, "reduced intensity not positive");
            e.lambda_tilde[rd.members.front()] = gbar;
            continue;
        }
        TimeGrid g(fm.original.horizon, fm.grid_points);
        g.include(gbar);
        for (std::size_t m : rd.members) g.include(d.intensities[m]);
        for (double t : g.nodes())
            if (!(gbar(t) > 0.0))
                throw Error(ErrorCode::NonpositiveGamma, "batch intensity not positive at t=" + std::to_string(t));
        for (std::size_t m : rd.members) {
            e.lambda_tilde[m] = g.tabulate([&](double t) {
                double gamma = 0.0;
                for (std::size_t j : rd.members) gamma += d.intensities[j](t);
                return gbar(t) * (d.intensities[m](t) / gamma);
            });
        }
    }
    return e;
}

} // namespace detail

inline Emm uplift_complete_neglect(const Emm& fict, const FictitiousMarket& fm) {
    if (!fm.complete_neglect()) throw Error(ErrorCode::PlanMismatch, "plan is not a complete neglect plan");
    Emm e = detail::uplift_discrete(fict, fm);
    e.provenance = "complete neglect uplift";
    return e;
}

inline Emm uplift_batch(const Emm& fict, const FictitiousMarket& fm) {
    if (fm.plan.is_continuous()) throw Error(ErrorCode::PlanMismatch, "batch uplift needs a discrete plan");
    Emm e = detail::uplift_discrete(fict, fm);
    e.provenance = fm.plan.has_batches() ? "batch uplift" : "complete neglect uplift";
    return e;
}

inline Emm uplift_continuous(const Emm& fict, const FictitiousMarket& fm) {
    if (!fm.plan.is_continuous()) throw Error(ErrorCode::PlanMismatch, "continuous uplift needs a cell plan");
    detail::check_fictitious_shape(fict, fm);
    const ContinuousJumps& c = fm.original.continuous();
    Emm e;
    e.theta = detail::lift_theta(fict, fm);
    CellIntensities ci;
    for (std::size_t k = 0; k < fm.drivers.size(); ++k) {
        ci.cells.push_back(fm.drivers[k].cell);
        ci.intensity.push_back(fict.lambda_tilde[k]);
    }
    for (const Interval& b : fm.remainder) {
        const double p = c.density.probability(b.lo, b.hi);
        if (!(p >= 1e-12)) throw Error(ErrorCode::EmptyCell, "remainder piece without mass");
        ci.cells.push_back(b);
        ci.intensity.push_back(c.total_intensity.scaled(p));
    }
    e.density = std::move(ci);
    e.provenance = "mark cell uplift";
    return e;
}

inline Emm uplift_general(const Emm& fict, const FictitiousMarket& fm) {
    if (fm.plan.is_continuous()) return uplift_continuous(fict, fm);
    if (fm.plan.has_batches()) return uplift_batch(fict, fm);
    return uplift_complete_neglect(fict, fm);
}

struct UpliftResult {
    FictitiousMarket fictitious;
    Emm fictitious_emm;
    Emm emm;
};

/// Reduce, solve the reduced market, and lift its unique EMM back. Refuses reduced
/// markets that are not complete.
inline UpliftResult construct_uplifted_emm(const MarketSpec& spec, const ReductionPlan& plan,
                                           std::size_t points = 256) {
    UpliftResult r{reduce(spec, plan, points), {}, {}};
    r.fictitious_emm = solve_unique_emm(r.fictitious.spec, r.fictitious.grid());
    r.emm = uplift_general(r.fictitious_emm, r.fictitious);
    return r;
}

struct UpliftResidualReport {
    double max_residual = 0.0;
    double worst_t = 0.0;
    std::size_t worst_stock = 0;
    double tolerance = 1e-9;
    std::size_t grid_size = 0;
    bool intensities_positive = true;
    std::vector<std::string> notes;
    bool pass = false;
};

/// Substitutes the measure into the market's own price-of-risk equations on its grid.
inline UpliftResidualReport verify_uplift(const Emm& emm, const MarketSpec& spec, std::size_t points = 256) {
    UpliftResidualReport rep;
    const std::size_t n = spec.n(), D = spec.brownians;
    rep.tolerance = spec.is_discrete() ? 1e-9 : 1e-7;
    if (emm.theta.size() != D) {
        rep.notes.push_back("theta has " + std::to_string(emm.theta.size()) + " entries for " + std::to_string(D) +
                            " Brownian motions");
        return rep;
    }
    TimeGrid g = market_grid(spec, points);
    g.include_all(emm.theta);
    std::vector<std::vector<double>> cell_means;
    std::vector<double> cell_mass;
    if (spec.is_discrete()) {
        if (emm.lambda_tilde.size() != spec.drivers() || emm.density) {
            rep.notes.push_back("intensity vector does not match the jump drivers");
            return rep;
        }
        g.include_all(emm.lambda_tilde);
    } else {
        if (!emm.density || emm.density->cells.size() != emm.density->intensity.size()) {
            rep.notes.push_back("continuous market needs per-cell intensities");
            return rep;
        }
        const ContinuousJumps& c = spec.continuous();
        double covered = 0.0;
        for (const Interval& b : emm.density->cells) {
            const double p = c.density.probability(b.lo, b.hi);
            cell_mass.push_back(p);
            covered += p;
            std::vector<double> means;
            for (std::size_t i = 0; i < n; ++i) means.push_back(p > 0.0 ? c.conditional_mean(i, b.lo, b.hi) : 0.0);
            cell_means.push_back(std::move(means));
        }
        if (std::abs(covered - 1.0) > 1e-8) rep.notes.push_back("cells cover mass " + std::to_string(covered));
        g.include_all(emm.density->intensity);
    }
    const std::vector<double> nodes = g.nodes();
    rep.grid_size = nodes.size();
    for (double t : nodes) {
        const double r = spec.rate(t);
        for (std::size_t i = 0; i < n; ++i) {
            double res = spec.stocks[i].alpha(t) - r;
            for (std::size_t j = 0; j < D; ++j) res -= spec.stocks[i].sigma[j](t) * emm.theta[j](t);
            if (spec.is_discrete()) {
                const DiscreteJumps& d = spec.discrete();
                for (std::size_t m = 0; m < d.intensities.size(); ++m) {
                    const double lt = emm.lambda_tilde[m](t);
                    if (!(lt > 0.0)) rep.intensities_positive = false;
                    res -= (d.intensities[m](t) - lt) * d.loadings[i][m](t);
                }
            } else {
                const double lb = spec.continuous().total_intensity(t);
                for (std::size_t k = 0; k < cell_mass.size(); ++k) {
                    const double lt = emm.density->intensity[k](t);
                    if (!(lt > 0.0)) rep.intensities_positive = false;
                    res -= (lb * cell_mass[k] - lt) * cell_means[k][i];
                }
            }
            if (std::abs(res) > rep.max_residual || !std::isfinite(res)) {
                rep.max_residual = std::isfinite(res) ? std::abs(res) : INFINITY;
                rep.worst_t = t;
                rep.worst_stock = i;
            }
        }
    }
    if (!rep.intensities_positive) rep.notes.push_back("some intensity is not positive");
    rep.pass = rep.notes.empty() && rep.max_residual < rep.tolerance;
    return rep;
}

} // namespace emmkit
