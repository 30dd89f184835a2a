#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "emmkit/json_io.hpp"
#include "emmkit/pricing.hpp"
#include "emmkit/uplift.hpp"

namespace emmkit {

inline const std::vector<std::string>& verify_check_names() {
    static const std::vector<std::string> names{"uplift", "restriction", "projection", "martingale", "density_mass"};
    return names;
}

struct VerifyOptions {
    McOptions mc;
    NestedOptions nested;
    std::size_t grid_points = 256;
    std::set<std::string> checks;  // empty runs everything
    std::optional<double> uplift_tolerance;
};

/// Events on the retained information used by the restriction section: the whole space,
/// no jump of the first retained channel, exactly one of the first and none of the
/// second, and the first kept Brownian motion ending above zero.
inline std::vector<RestrictionEvent> default_restriction_events(const FictitiousMarket& fm) {
    std::vector<std::size_t> channels;
    for (std::size_t k = 0; k < fm.drivers.size(); ++k) {
        const ReducedDriver& rd = fm.drivers[k];
        if (rd.kind == ReducedDriver::Kind::cell) channels.push_back(k);
        else if (rd.members.size() == 1) channels.push_back(rd.members.front());
    }
    using K = EventCondition::Kind;
    std::vector<RestrictionEvent> ev{{"all", {}}};
    if (!channels.empty())
        ev.push_back({"N" + std::to_string(channels[0]) + "(T)=0", {{K::driver_count, channels[0], 0, 0.0}}});
    if (channels.size() > 1)
        ev.push_back({"N" + std::to_string(channels[0]) + "(T)=1,N" + std::to_string(channels[1]) + "(T)=0",
                      {{K::driver_count, channels[0], 1, 0.0}, {K::driver_count, channels[1], 0, 0.0}}});
    if (!fm.kept_brownians.empty())
        ev.push_back({"W" + std::to_string(fm.kept_brownians[0]) + "(T)>0",
                      {{K::brownian_above, fm.kept_brownians[0], 0, 0.0}}});
    return ev;
}

/// Runs the selected checks. emm defaults to the uplifted measure of the plan.
inline json verify_suite(const MarketSpec& spec, const ReductionPlan& plan, const VerifyOptions& opt,
                         const std::optional<Emm>& supplied = std::nullopt) {
    auto wanted = [&](const std::string& name) { return opt.checks.empty() || opt.checks.count(name) > 0; };
    const UpliftResult up = construct_uplifted_emm(spec, plan, opt.grid_points);
    const Emm emm = supplied ? *supplied : up.emm;
    json out;
    out["seed"] = opt.mc.seed;
    out["paths"] = opt.mc.paths;
    json sections = json::object();
    bool pass = true;

    if (wanted("uplift")) {
        UpliftResidualReport r = verify_uplift(emm, spec, opt.grid_points);
        if (opt.uplift_tolerance) {
            r.tolerance = *opt.uplift_tolerance;
            r.pass = r.notes.empty() && r.max_residual < r.tolerance;
        }
        sections["uplift"] = to_json(r);
        pass = pass && r.pass;
    }
    if (wanted("restriction")) {
        const RestrictionReport r = restriction_check(up.fictitious, emm, up.fictitious_emm,
                                                      default_restriction_events(up.fictitious), opt.mc);
        sections["restriction"] = to_json(r);
        pass = pass && r.pass;
    }
    if (wanted("projection")) {
        if (up.fictitious.complete_neglect()) {
            const ProjectionReport r = projection_consistency_check(up.fictitious, opt.nested, 0.5 * spec.horizon, opt.mc);
            sections["projection"] = to_json(r);
            pass = pass && r.pass;
        } else {
            sections["projection"] = {{"skipped", "plan is not a complete neglect plan"}};
        }
    }
    if (wanted("martingale")) {
        std::vector<Payoff> claims;
        for (std::size_t i = 0; i < spec.n(); ++i) claims.push_back(Payoff::terminal(i));
        const std::vector<McReport> r = price_mc_many(spec, emm, claims, opt.mc);
        json rows = json::array();
        bool ok = true;
        for (std::size_t i = 0; i < spec.n(); ++i) {
            const double s0 = spec.stocks[i].s0;
            const bool p = std::abs(r[i].estimate - s0) <= 4.0 * r[i].std_error + 1e-12 * s0;
            ok = ok && p;
            rows.push_back({{"stock", i}, {"s0", s0}, {"report", to_json(r[i])}, {"pass", p}});
        }
        sections["martingale"] = {{"stocks", rows}, {"pass", ok}};
        pass = pass && ok;
    }
    if (wanted("density_mass")) {
        const McReport r = density_mass(spec, emm, opt.mc);
        const bool p = std::abs(r.estimate - 1.0) <= 4.0 * r.std_error;
        sections["density_mass"] = {{"report", to_json(r)}, {"pass", p}};
        pass = pass && p;
    }
    out["checks"] = sections;
    out["pass"] = pass;
    return out;
}

} // namespace emmkit
