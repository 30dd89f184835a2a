#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "emmkit/emm.hpp"
#include "emmkit/model.hpp"
#include "emmkit/mpr.hpp"
#include "emmkit/pricing.hpp"
#include "emmkit/reduction.hpp"
#include "emmkit/uplift.hpp"

namespace emmkit {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Reading
// ---------------------------------------------------------------------------

namespace detail {

inline const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::ParseError, std::string("missing field '") + key + "'");
    return j.at(key);
}

template <class T>
T get_as(const json& j, const char* what) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string(what) + ": " + e.what());
    }
}

inline Interval interval_from_json(const json& j) {
    const auto v = get_as<std::vector<double>>(j, "interval");
    if (v.size() != 2) throw Error(ErrorCode::ParseError, "interval must be [lo, hi]");
    return {v[0], v[1]};
}

} // namespace detail

/// A bare number is read as a constant.
inline TimeFunction time_function_from_json(const json& j) {
    if (j.is_number()) return TimeFunction(j.get<double>());
    if (!j.is_object() || j.size() != 1) throw Error(ErrorCode::ParseError, "time function must be a number or a one-key object");
    if (j.contains("const")) return TimeFunction(detail::get_as<double>(j["const"], "const"));
    const bool pw = j.contains("piecewise");
    if (!pw && !j.contains("samples")) throw Error(ErrorCode::ParseError, "unknown time function kind");
    const json& body = j.at(pw ? "piecewise" : "samples");
    auto t = detail::get_as<std::vector<double>>(detail::field(body, "t"), "t");
    auto v = detail::get_as<std::vector<double>>(detail::field(body, "v"), "v");
    return pw ? TimeFunction::piecewise(std::move(t), std::move(v)) : TimeFunction::samples(std::move(t), std::move(v));
}

inline std::vector<TimeFunction> time_functions_from_json(const json& j) {
    if (!j.is_array()) throw Error(ErrorCode::ParseError, "expected an array of time functions");
    std::vector<TimeFunction> out;
    for (const json& x : j) out.push_back(time_function_from_json(x));
    return out;
}

inline MarkDensity density_from_json(const json& j) {
    const std::string fam = detail::get_as<std::string>(detail::field(j, "family"), "family");
    const Interval s = detail::interval_from_json(detail::field(j, "support"));
    const json params = j.contains("params") ? j.at("params") : json::array();
    auto num = [&](const char* key, std::size_t pos) {
        if (params.is_object()) return detail::get_as<double>(detail::field(params, key), key);
        if (!params.is_array() || params.size() <= pos) throw Error(ErrorCode::ParseError, std::string("missing parameter ") + key);
        return detail::get_as<double>(params[pos], key);
    };
    if (fam == "uniform") return MarkDensity::uniform(s.lo, s.hi);
    if (fam == "truncated_normal") return MarkDensity::truncated_normal(s.lo, s.hi, num("mu", 0), num("sd", 1));
    if (fam == "truncated_exponential") return MarkDensity::truncated_exponential(s.lo, s.hi, num("rate", 0));
    if (fam == "histogram") {
        auto edges = detail::get_as<std::vector<double>>(detail::field(params, "edges"), "edges");
        auto dens = detail::get_as<std::vector<double>>(detail::field(params, "densities"), "densities");
        if (edges.front() != s.lo || edges.back() != s.hi)
            throw Error(ErrorCode::ParseError, "histogram edges must span the support");
        return MarkDensity::histogram(std::move(edges), std::move(dens));
    }
    throw Error(ErrorCode::ParseError, "unknown density family '" + fam + "'");
}

inline MarketSpec market_from_json(const json& j) {
    MarketSpec s;
    s.horizon = detail::get_as<double>(detail::field(j, "horizon"), "horizon");
    s.rate = time_function_from_json(detail::field(j, "rate"));
    s.brownians = detail::get_as<std::size_t>(detail::field(j, "brownians"), "brownians");
    for (const json& st : detail::field(j, "stocks")) {
        Stock k;
        k.s0 = detail::get_as<double>(detail::field(st, "s0"), "s0");
        k.alpha = time_function_from_json(detail::field(st, "alpha"));
        k.sigma = time_functions_from_json(detail::field(st, "sigma"));
        s.stocks.push_back(std::move(k));
    }
    const json& jm = detail::field(j, "jumps");
    const std::string type = detail::get_as<std::string>(detail::field(jm, "type"), "jumps.type");
    if (type == "discrete") {
        DiscreteJumps d;
        d.intensities = time_functions_from_json(detail::field(jm, "intensities"));
        for (const json& row : detail::field(jm, "loadings")) d.loadings.push_back(time_functions_from_json(row));
        s.jumps = std::move(d);
    } else if (type == "density") {
        ContinuousJumps c{density_from_json(jm), time_function_from_json(detail::field(jm, "total_intensity")), {}};
        if (jm.contains("jump_response")) {
            for (const json& row : jm.at("jump_response"))
                c.response.push_back(detail::get_as<std::vector<double>>(row, "jump_response"));
        } else {
            c.response.assign(s.n(), {0.0, 1.0});
        }
        s.jumps = std::move(c);
    } else {
        throw Error(ErrorCode::ParseError, "jumps.type must be 'discrete' or 'density'");
    }
    return s;
}

inline ReductionPlan plan_from_json(const json& j) {
    ReductionPlan p;
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "plan must be an object");
    using idx = std::vector<std::size_t>;
    if (j.contains("keep_brownians")) p.keep_brownians = detail::get_as<idx>(j["keep_brownians"], "keep_brownians");
    if (j.contains("retain")) p.retain = detail::get_as<idx>(j["retain"], "retain");
    if (j.contains("batches")) p.batches = detail::get_as<std::vector<idx>>(j["batches"], "batches");
    if (j.contains("neglect")) p.neglect = detail::get_as<idx>(j["neglect"], "neglect");
    if (j.contains("cells"))
        for (const json& c : j["cells"]) p.cells.push_back(detail::interval_from_json(c));
    if (j.contains("neglect_remainder")) p.neglect_remainder = detail::get_as<bool>(j["neglect_remainder"], "neglect_remainder");
    return p;
}

inline Emm emm_from_json(const json& j) {
    Emm e;
    e.theta = time_functions_from_json(detail::field(j, "theta"));
    if (j.contains("lambda_tilde")) e.lambda_tilde = time_functions_from_json(j["lambda_tilde"]);
    if (j.contains("density") && !j["density"].is_null()) {
        CellIntensities ci;
        for (const json& c : detail::field(j["density"], "cells")) ci.cells.push_back(detail::interval_from_json(c));
        ci.intensity = time_functions_from_json(detail::field(j["density"], "intensity"));
        if (ci.cells.size() != ci.intensity.size()) throw Error(ErrorCode::ParseError, "one intensity per cell");
        e.density = std::move(ci);
    }
    if (j.contains("provenance")) e.provenance = detail::get_as<std::string>(j["provenance"], "provenance");
    return e;
}

inline Payoff payoff_from_json(const json& j) {
    Payoff p;
    const std::string type = detail::get_as<std::string>(detail::field(j, "type"), "type");
    if (type == "terminal") p.type = Payoff::Type::terminal;
    else if (type == "forward") p.type = Payoff::Type::forward;
    else if (type == "call") p.type = Payoff::Type::call;
    else if (type == "put") p.type = Payoff::Type::put;
    else if (type == "indicator_count") p.type = Payoff::Type::indicator_count;
    else if (type == "sum") p.type = Payoff::Type::sum;
    else throw Error(ErrorCode::ParseError, "unknown payoff type '" + type + "'");
    p.asset.reset();
    if (j.contains("asset") && !j["asset"].is_null()) p.asset = detail::get_as<std::size_t>(j["asset"], "asset");
    if (j.contains("strike")) p.strike = detail::get_as<double>(j["strike"], "strike");
    if (j.contains("cap") && !j["cap"].is_null()) p.cap = detail::get_as<double>(j["cap"], "cap");
    if (j.contains("driver")) p.driver = detail::get_as<std::size_t>(j["driver"], "driver");
    if (j.contains("count")) p.count = detail::get_as<std::size_t>(j["count"], "count");
    if (j.contains("discounted")) p.discounted = detail::get_as<bool>(j["discounted"], "discounted");
    if (p.type == Payoff::Type::sum) {
        for (const json& t : detail::field(j, "terms")) {
            p.weights.push_back(t.contains("weight") ? detail::get_as<double>(t["weight"], "weight") : 1.0);
            p.terms.push_back(payoff_from_json(t));
        }
    }
    return p;
}

inline Strategy strategy_from_json(const json& j) {
    Strategy s;
    s.grid = detail::get_as<std::vector<double>>(detail::field(j, "grid"), "grid");
    s.holdings = detail::get_as<std::vector<std::vector<double>>>(detail::field(j, "holdings"), "holdings");
    if (j.contains("jump")) s.jump = detail::get_as<std::vector<std::vector<double>>>(j["jump"], "jump");
    if (j.contains("initial_value")) s.initial_value = detail::get_as<double>(j["initial_value"], "initial_value");
    return s;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Writing
// ---------------------------------------------------------------------------

inline json to_json(const TimeFunction& f) {
    switch (f.kind()) {
    case TimeFunction::Kind::constant: return {{"const", f.values().front()}};
    case TimeFunction::Kind::piecewise: return {{"piecewise", {{"t", f.knots()}, {"v", f.values()}}}};
    case TimeFunction::Kind::samples: return {{"samples", {{"t", f.knots()}, {"v", f.values()}}}};
    }
    return nullptr;
}

inline json to_json(const std::vector<TimeFunction>& fs) {
    json a = json::array();
    for (const TimeFunction& f : fs) a.push_back(to_json(f));
    return a;
}

inline json to_json(const Interval& b) { return json::array({b.lo, b.hi}); }

inline json to_json(const MarkDensity& d) {
    json j;
    switch (d.family()) {
    case DensityFamily::uniform: j["family"] = "uniform"; j["params"] = json::array(); break;
    case DensityFamily::truncated_normal: j["family"] = "truncated_normal"; j["params"] = d.params(); break;
    case DensityFamily::truncated_exponential: j["family"] = "truncated_exponential"; j["params"] = d.params(); break;
    case DensityFamily::histogram:
        j["family"] = "histogram";
        j["params"] = {{"edges", d.edges()}, {"densities", d.params()}};
        break;
    }
    j["support"] = to_json(d.support());
    return j;
}

inline json to_json(const MarketSpec& s) {
    json j;
    j["horizon"] = s.horizon;
    j["rate"] = to_json(s.rate);
    j["brownians"] = s.brownians;
    json stocks = json::array();
    for (const Stock& k : s.stocks) stocks.push_back({{"s0", k.s0}, {"alpha", to_json(k.alpha)}, {"sigma", to_json(k.sigma)}});
    j["stocks"] = stocks;
    if (s.is_discrete()) {
        const DiscreteJumps& d = s.discrete();
        json rows = json::array();
        for (const auto& row : d.loadings) rows.push_back(to_json(row));
        j["jumps"] = {{"type", "discrete"}, {"intensities", to_json(d.intensities)}, {"loadings", rows}};
    } else {
        const ContinuousJumps& c = s.continuous();
        json jm = {{"type", "density"}};
        jm.update(to_json(c.density));
        jm["total_intensity"] = to_json(c.total_intensity);
        jm["jump_response"] = c.response;
        j["jumps"] = jm;
    }
    return j;
}

inline json to_json(const ReductionPlan& p) {
    json j = json::object();
    if (p.keep_brownians) j["keep_brownians"] = *p.keep_brownians;
    if (p.retain) j["retain"] = *p.retain;
    if (!p.batches.empty()) j["batches"] = p.batches;
    if (!p.neglect.empty()) j["neglect"] = p.neglect;
    if (p.is_continuous()) {
        json cells = json::array();
        for (const Interval& b : p.cells) cells.push_back(to_json(b));
        j["cells"] = cells;
        j["neglect_remainder"] = p.neglect_remainder;
    }
    return j;
}

inline json to_json(const Emm& e) {
    json j;
    j["theta"] = to_json(e.theta);
    j["lambda_tilde"] = to_json(e.lambda_tilde);
    if (e.density) {
        json cells = json::array();
        for (const Interval& b : e.density->cells) cells.push_back(to_json(b));
        j["density"] = {{"cells", cells}, {"intensity", to_json(e.density->intensity)}};
    } else {
        j["density"] = nullptr;
    }
    j["provenance"] = e.provenance;
    return j;
}

/// Reduced market with a provenance block describing where each driver came from.
inline json to_json(const FictitiousMarket& fm) {
    json j = to_json(fm.spec);
    json drivers = json::array();
    for (const ReducedDriver& rd : fm.drivers) {
        json d;
        d["kind"] = rd.kind == ReducedDriver::Kind::retained ? "retained" : rd.kind == ReducedDriver::Kind::batch ? "batch" : "cell";
        if (rd.kind == ReducedDriver::Kind::cell) d["cell"] = to_json(rd.cell);
        else d["members"] = rd.members;
        drivers.push_back(d);
    }
    json rem = json::array();
    for (const Interval& b : fm.remainder) rem.push_back(to_json(b));
    j["provenance"] = {{"plan", to_json(fm.plan)},   {"kept_brownians", fm.kept_brownians},
                       {"drivers", drivers},         {"neglected", fm.neglected},
                       {"remainder", rem},           {"warnings", fm.warnings}};
    return j;
}

inline json to_json(const MarketClassification& c) {
    const Eigen::VectorXd th = c.theta(), lt = c.lambda_tilde();
    return {{"tag", to_string(c.tag)},
            {"t", c.t},
            {"theta", std::vector<double>(th.data(), th.data() + th.size())},
            {"lambda_tilde", std::vector<double>(lt.data(), lt.data() + lt.size())},
            {"minimum_norm", c.minimum_norm},
            {"rank", c.rank},
            {"residual", c.residual},
            {"nullspace_dim", c.nullspace_dim},
            {"intensities_valid", c.intensities_valid}};
}

inline json to_json(const ValidationReport& r) {
    json v = json::array();
    for (const Violation& x : r.violations) v.push_back({{"code", to_string(x.code)}, {"message", x.message}});
    return {{"ok", r.ok()}, {"violations", v}};
}

inline json to_json(const McReport& r) {
    return {{"estimate", r.estimate}, {"std_error", r.std_error}, {"n_paths", r.n_paths}, {"seed", r.seed}, {"measure", r.measure}};
}

inline json to_json(const UpliftResidualReport& r) {
    return {{"max_residual", r.max_residual}, {"worst_t", r.worst_t},   {"worst_stock", r.worst_stock},
            {"tolerance", r.tolerance},       {"grid_size", r.grid_size}, {"intensities_positive", r.intensities_positive},
            {"notes", r.notes},               {"pass", r.pass}};
}

inline json to_json(const RestrictionReport& r) {
    json rows = json::array();
    for (const RestrictionRow& x : r.rows)
        rows.push_back({{"event", x.label},
                        {"uplifted", to_json(x.uplifted)},
                        {"fictitious", to_json(x.fictitious)},
                        {"difference", x.difference},
                        {"combined_se", x.combined_se},
                        {"pass", x.pass}});
    return {{"events", rows}, {"pass", r.pass}};
}

inline json to_json(const CostReport& r) {
    return {{"nested", to_json(r.nested)}, {"plain", to_json(r.plain)}, {"difference", r.difference},
            {"combined_se", r.combined_se}, {"outer", r.outer}, {"inner", r.inner}, {"pass", r.pass}};
}

inline json to_json(const HedgingReport& r) {
    return {{"error", to_json(r.error)},       {"gain", to_json(r.gain)},
            {"stock_gain", to_json(r.stock_gain)}, {"jump_gain", to_json(r.jump_gain)},
            {"max_abs_error", r.max_abs_error}, {"non_priced", r.non_priced}};
}

inline json to_json(const ProjectionReport& r) {
    return {{"time", r.time}, {"outer", r.outer}, {"inner", r.inner}, {"max_abs_z", r.max_abs_z},
            {"failures", r.failures}, {"pass", r.pass}};
}

inline std::string dump(const json& j) { return j.dump(2); }

} // namespace emmkit
