#pragma once

#include <optional>
#include <string>
#include <vector>

#include "emmkit/model.hpp"

namespace emmkit {

/// Intensities of a measure over a partition of the mark support. Under the
/// physical measure piece k fires at total_intensity(t) * P_f(piece k).
struct CellIntensities {
    std::vector<Interval> cells;
    std::vector<TimeFunction> intensity;
};

/// A measure change: Brownian shifts theta (W + int theta ds is a Brownian motion under
/// the new measure) and jump intensities, per driver or per mark cell.
struct Emm {
    std::vector<TimeFunction> theta;
    std::vector<TimeFunction> lambda_tilde;
    std::optional<CellIntensities> density;
    std::string provenance;
};

inline Emm physical_measure(const MarketSpec& spec, const std::vector<Interval>& cells = {}) {
    Emm e;
    e.theta.assign(spec.brownians, TimeFunction(0.0));
    e.provenance = "physical";
    if (spec.is_discrete()) {
        e.lambda_tilde = spec.discrete().intensities;
    } else {
        const ContinuousJumps& c = spec.continuous();
        CellIntensities ci;
        ci.cells = cells.empty() ? std::vector<Interval>{c.density.support()} : cells;
        for (const Interval& b : ci.cells)
            ci.intensity.push_back(c.total_intensity.scaled(c.density.probability(b.lo, b.hi)));
        e.density = std::move(ci);
    }
    return e;
}

/// Uplifted mark density at time t: f rescaled cell by cell to the measure's cell weights.
inline double emm_density(const MarketSpec& spec, const Emm& emm, double t, double y) {
    const ContinuousJumps& c = spec.continuous();
    const CellIntensities& ci = *emm.density;
    double total = 0.0;
    for (const TimeFunction& f : ci.intensity) total += f(t);
    for (std::size_t k = 0; k < ci.cells.size(); ++k) {
        const Interval& b = ci.cells[k];
        if ((y >= b.lo && y < b.hi) || (y == b.hi && b.hi == c.density.hi())) {
            const double p = c.density.probability(b.lo, b.hi);
            return c.density(y) / p * ci.intensity[k](t) / total;
        }
    }
    return 0.0;
}

/// Cell probabilities of the uplifted density at time t.
inline std::vector<double> emm_cell_weights(const Emm& emm, double t) {
    const CellIntensities& ci = *emm.density;
    double total = 0.0;
    for (const TimeFunction& f : ci.intensity) total += f(t);
    std::vector<double> p;
    for (const TimeFunction& f : ci.intensity) p.push_back(f(t) / total);
    return p;
}

} // namespace emmkit
