#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "emmkit/quadrature.hpp"
#include "emmkit/reduction.hpp"
#include "emmkit/stochastic.hpp"

namespace emmkit {

enum class ProjectionVariant {
    exact,
    /// Drops the neglected jumps but keeps their compensator in the drift (a wrong formula, kept as a control).
    keep_neglected_compensator,
};

/// Conditional expectation of the original prices given the retained drivers, read off
/// an original-market path: only kept Brownian integrals and retained-driver events are used.
inline std::vector<double> project_price_closed_form(const PathSimulator& sim, const FictitiousMarket& fm,
                                                     const PathBundle& path, std::size_t time_index,
                                                     ProjectionVariant variant = ProjectionVariant::exact) {
    if (!fm.complete_neglect()) throw Error(ErrorCode::PlanMismatch, "projection needs a complete neglect plan");
    const MarketSpec& spec = fm.original;
    const DiscreteJumps& d = spec.discrete();
    const std::size_t n = spec.n();
    const double t = sim.times()[time_index];
    std::vector<bool> retained(d.intensities.size(), false);
    for (const ReducedDriver& rd : fm.drivers) retained[rd.members.front()] = true;

    std::vector<const TimeFunction*> fs;
    std::vector<TimeFunction> coeffs = spec.coefficients();
    for (const TimeFunction& f : coeffs) fs.push_back(&f);
    const std::vector<double> br = breakpoints(fs, 0.0, t);

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x = 0.0;
        for (std::size_t j : fm.kept_brownians)
            for (std::size_t k = 0; k < time_index; ++k) x += path.gauss[sim.gauss_offset(k, j) + sim.sigma_slot(i)];
        x += integrate(
            [&](double s) {
                double v = spec.stocks[i].alpha(s);
                for (std::size_t j : fm.kept_brownians) v -= 0.5 * spec.stocks[i].sigma[j](s) * spec.stocks[i].sigma[j](s);
                for (std::size_t m = 0; m < d.intensities.size(); ++m)
                    if (retained[m] || variant == ProjectionVariant::keep_neglected_compensator)
                        v -= d.loadings[i][m](s) * d.intensities[m](s);
                return v;
            },
            0.0, t, br);
        for (const Event& e : path.events)
            if (e.time <= t && retained[e.channel]) x += std::log1p(d.loadings[i][e.channel](e.time));
        out[i] = spec.stocks[i].s0 * std::exp(x);
    }
    return out;
}

} // namespace emmkit
