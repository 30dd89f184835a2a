#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "emmkit/json_io.hpp"
#include "emmkit/mpr.hpp"
#include "emmkit/pricing.hpp"
#include "emmkit/reduction.hpp"
#include "emmkit/rng.hpp"
#include "emmkit/uplift.hpp"
#include "emmkit/verify.hpp"

namespace emmkit::cli {

struct RunConfig {
    std::string subcommand;
    std::string market;
    std::string plan;
    std::string emm;
    std::string payoff;
    std::string measure = "physical";
    std::string out;
    std::string format = "text";
    std::string checks;
    std::size_t paths = 100'000;
    std::uint64_t seed = default_seed;
    std::size_t threads = default_threads();
    std::size_t grid = 256;
    std::size_t outer = 100;
    std::size_t inner = 10'000;
    bool weighted = false;
    std::optional<double> uplift_tol;
};

namespace detail {

/// Exit status for a library error: model outcomes are failures, everything else is a
/// problem with the inputs.
inline int exit_code(ErrorCode c) {
    switch (c) {
    case ErrorCode::NotComplete:
    case ErrorCode::InvalidIntensities:
    case ErrorCode::NonpositiveGamma:
    case ErrorCode::NullMark:
    case ErrorCode::UnboundedIntensity:
        return 1;
    default:
        return 2;
    }
}

struct Outcome {
    json report;
    std::string text;
    bool pass = true;
};

inline void write_file(const std::string& path, const std::string& body) {
    std::ofstream f(path);
    if (!f) throw Error(ErrorCode::ParseError, "cannot write " + path);
    f << body;
}

inline MarketSpec load_market(const RunConfig& c) {
    if (c.market.empty()) throw Error(ErrorCode::ParseError, "--market is required");
    return market_from_json(read_json_file(c.market));
}

inline ReductionPlan load_plan(const RunConfig& c) {
    if (c.plan.empty()) throw Error(ErrorCode::ParseError, "--plan is required");
    return plan_from_json(read_json_file(c.plan));
}

inline MarketSpec load_valid_market(const RunConfig& c) {
    MarketSpec s = load_market(c);
    const ValidationReport r = validate_market(s);
    if (!r.ok()) throw Error(r.violations.front().code, "invalid market: " + r.violations.front().message);
    return s;
}

inline McOptions mc_options(const RunConfig& c) {
    McOptions o;
    o.paths = c.paths;
    o.seed = c.seed;
    o.threads = c.threads;
    return o;
}

inline std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(10) << x;
    return os.str();
}

inline Outcome do_validate(const RunConfig& c) {
    const ValidationReport r = validate_market(load_market(c));
    Outcome o{to_json(r), "", r.ok()};
    if (r.ok()) o.text = "OK\n";
    for (const Violation& v : r.violations) o.text += std::string(to_string(v.code)) + ": " + v.message + "\n";
    return o;
}

inline Outcome do_solve(const RunConfig& c) {
    const MarketSpec s = load_valid_market(c);
    const std::vector<double> nodes = market_grid(s, c.grid).nodes();
    const std::vector<MarketClassification> cls = classify_over_grid(s, nodes);
    // the reported solution is the one at t = 0; the overall tag is the worst over the grid
    MarketTag worst = MarketTag::Complete;
    bool valid = true;
    double max_res = 0.0;
    std::size_t max_null = 0;
    for (const MarketClassification& k : cls) {
        if (k.tag == MarketTag::Arbitrage || (k.tag == MarketTag::IncompleteArbitrageFree && worst == MarketTag::Complete))
            worst = k.tag;
        valid = valid && k.intensities_valid;
        max_res = std::max(max_res, k.residual);
        max_null = std::max(max_null, k.nullspace_dim);
    }
    Outcome o;
    o.report = to_json(cls.front());
    o.report["tag"] = to_string(worst);
    o.report["residual"] = max_res;
    o.report["nullspace_dim"] = max_null;
    o.report["intensities_valid"] = valid;
    o.report["grid_size"] = nodes.size();
    o.pass = worst != MarketTag::Arbitrage && valid;
    std::ostringstream os;
    os << "tag " << to_string(worst) << "\n";
    for (const auto& x : o.report["theta"]) os << "theta " << fmt(x.get<double>()) << "\n";
    for (const auto& x : o.report["lambda_tilde"]) os << "lambda_tilde " << fmt(x.get<double>()) << "\n";
    os << "residual " << fmt(max_res) << "\nnullspace_dim " << max_null << "\n";
    o.text = os.str();
    return o;
}

inline Outcome do_reduce(const RunConfig& c) {
    const FictitiousMarket fm = reduce(load_valid_market(c), load_plan(c), c.grid);
    Outcome o{to_json(fm), "", true};
    std::ostringstream os;
    os << "reduced market: " << fm.kept_brownians.size() << " Brownian motions, " << fm.drivers.size()
       << " jump drivers, " << fm.spec.n() << " stocks\n";
    for (const std::string& w : fm.warnings) os << "warning: " << w << "\n";
    o.text = os.str();
    return o;
}

inline Outcome do_uplift(const RunConfig& c) {
    const UpliftResult r = construct_uplifted_emm(load_valid_market(c), load_plan(c), c.grid);
    Outcome o{to_json(r.emm), "", true};
    o.text = "uplifted EMM (" + r.emm.provenance + ")\n" + dump(o.report) + "\n";
    return o;
}

inline std::optional<Emm> load_measure(const RunConfig& c, const MarketSpec& s) {
    if (!c.emm.empty()) return emm_from_json(read_json_file(c.emm));
    if (!c.plan.empty()) return construct_uplifted_emm(s, load_plan(c), c.grid).emm;
    if (c.measure != "physical") return emm_from_json(read_json_file(c.measure));
    return std::nullopt;
}

inline Outcome do_simulate(const RunConfig& c) {
    const MarketSpec s = load_valid_market(c);
    const std::optional<Emm> q = c.measure == "physical" ? std::nullopt
                                                         : std::optional<Emm>(emm_from_json(read_json_file(c.measure)));
    const Emm measure = q ? *q : physical_measure(s);
    const PathSimulator sim(s, measure, {}, q ? std::vector<Emm>{*q} : std::vector<Emm>{});
    const std::size_t K = sim.times().size() - 1;
    std::vector<std::string> lines(c.paths);
    parallel_for(c.paths, c.threads, [&](std::size_t p) {
        const PathBundle b = sim.simulate(c.seed, p);
        json ev = json::array();
        for (const Event& e : b.events) {
            json x = {{"time", e.time}, {"channel", e.channel}};
            if (!std::isnan(e.mark)) x["mark"] = e.mark;
            ev.push_back(x);
        }
        std::vector<double> terminal(b.stocks.end() - static_cast<std::ptrdiff_t>(s.n()), b.stocks.end());
        const double z = q ? std::exp(b.log_z[K]) : 1.0;
        lines[p] = json{{"path", p}, {"events", ev}, {"terminal", terminal}, {"z", z}}.dump();
    });
    Outcome o;
    std::string body;
    for (const std::string& l : lines) body += l + "\n";
    o.text = body;
    o.report = json{{"paths", c.paths}, {"seed", c.seed}, {"measure", measure.provenance}};
    if (!c.out.empty()) {
        write_file(c.out, body);
        o.text = "wrote " + std::to_string(c.paths) + " paths to " + c.out + "\n";
    }
    return o;
}

inline Outcome do_price(const RunConfig& c) {
    const MarketSpec s = load_valid_market(c);
    if (c.payoff.empty()) throw Error(ErrorCode::ParseError, "--payoff is required");
    const Payoff pay = payoff_from_json(read_json_file(c.payoff));
    const std::optional<Emm> q = load_measure(c, s);
    const Emm measure = q ? *q : physical_measure(s);
    const McReport r = c.weighted ? price_weighted_many(s, measure, {pay}, mc_options(c)).front()
                                  : price_mc(s, measure, pay, mc_options(c));
    Outcome o{to_json(r), "", true};
    std::ostringstream os;
    os << std::left << std::setw(18) << "estimate" << std::setw(18) << "std_error" << std::setw(10) << "paths"
       << "measure\n"
       << std::setw(18) << fmt(r.estimate) << std::setw(18) << fmt(r.std_error) << std::setw(10) << r.n_paths
       << r.measure << "\n";
    o.text = os.str();
    return o;
}

inline std::set<std::string> parse_checks(const std::string& s) {
    std::set<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto& names = verify_check_names();
        if (std::find(names.begin(), names.end(), item) == names.end())
            throw Error(ErrorCode::ParseError, "unknown check '" + item + "'");
        out.insert(item);
    }
    return out;
}

inline Outcome do_verify(const RunConfig& c) {
    const MarketSpec s = load_valid_market(c);
    VerifyOptions v;
    v.mc = mc_options(c);
    v.nested.outer = c.outer;
    v.nested.inner = c.inner;
    v.grid_points = c.grid;
    v.checks = parse_checks(c.checks);
    v.uplift_tolerance = c.uplift_tol;
    const std::optional<Emm> e = c.emm.empty() ? std::nullopt : std::optional<Emm>(emm_from_json(read_json_file(c.emm)));
    Outcome o;
    o.report = verify_suite(s, load_plan(c), v, e);
    o.pass = o.report["pass"].get<bool>();
    std::ostringstream os;
    for (const auto& [name, sec] : o.report["checks"].items()) {
        if (sec.contains("skipped")) os << std::left << std::setw(14) << name << "SKIPPED\n";
        else os << std::left << std::setw(14) << name << (sec["pass"].get<bool>() ? "PASS" : "FAIL") << "\n";
    }
    os << std::left << std::setw(14) << "overall" << (o.pass ? "PASS" : "FAIL") << "\n";
    o.text = os.str();
    return o;
}

} // namespace detail

/// Entry point; returns 0 on success or PASS, 1 on FAIL, 2 on usage or input errors.
inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    RunConfig c;
    c.seed = seed_from_env();
    CLI::App app{"uplifted martingale measures for jump-diffusion markets", "emmkit"};
    app.require_subcommand(1, 1);

    auto common = [&](CLI::App* s) {
        s->add_option("-m,--market", c.market, "market JSON")->check(CLI::ExistingFile);
        s->add_option("--grid", c.grid, "time grid points")->check(CLI::Range(std::size_t{2}, std::size_t{1'000'000}));
        s->add_option("--out", c.out, "write the JSON report here");
        s->add_option("--format", c.format, "stdout format")->check(CLI::IsMember({"json", "text"}));
    };
    auto mc = [&](CLI::App* s) {
        s->add_option("--paths", c.paths, "Monte Carlo paths")->check(CLI::Range(std::size_t{2}, std::size_t{1'000'000'000}));
        s->add_option("--seed", c.seed, "master seed (default 0x5EED or EMMKIT_SEED)");
        s->add_option("--threads", c.threads, "worker threads")->check(CLI::Range(std::size_t{1}, std::size_t{1024}));
    };
    auto plan = [&](CLI::App* s) { s->add_option("-p,--plan", c.plan, "reduction plan JSON")->check(CLI::ExistingFile); };
    auto emm = [&](CLI::App* s) { s->add_option("-e,--emm", c.emm, "EMM JSON")->check(CLI::ExistingFile); };

    CLI::App* validate = app.add_subcommand("validate", "check a market file");
    common(validate);
    CLI::App* solve = app.add_subcommand("solve", "classify the market and solve for the price of risk");
    common(solve);
    CLI::App* reduce_cmd = app.add_subcommand("reduce", "build the reduced market of a plan");
    common(reduce_cmd);
    plan(reduce_cmd);
    CLI::App* uplift = app.add_subcommand("uplift", "construct the uplifted EMM of a plan");
    common(uplift);
    plan(uplift);
    CLI::App* simulate = app.add_subcommand("simulate", "write sample paths as JSON lines");
    common(simulate);
    mc(simulate);
    simulate->add_option("--measure", c.measure, "EMM JSON file or 'physical'");
    CLI::App* price = app.add_subcommand("price", "Monte Carlo price of a payoff");
    common(price);
    mc(price);
    plan(price);
    emm(price);
    price->add_option("--payoff", c.payoff, "payoff JSON")->check(CLI::ExistingFile);
    price->add_option("--measure", c.measure, "EMM JSON file or 'physical'");
    price->add_flag("--weighted", c.weighted, "simulate under P and weight by the density");
    CLI::App* verify = app.add_subcommand("verify", "run the verification suite");
    common(verify);
    mc(verify);
    plan(verify);
    emm(verify);
    verify->add_option("--checks", c.checks, "comma-separated subset of uplift,restriction,projection,martingale,density_mass");
    verify->add_option("--outer", c.outer, "outer paths for the projection check")->check(CLI::Range(std::size_t{1}, std::size_t{1'000'000}));
    verify->add_option("--inner", c.inner, "inner paths for the projection check")->check(CLI::Range(std::size_t{2}, std::size_t{10'000'000}));
    verify->add_option("--uplift-tol", c.uplift_tol, "residual tolerance override")->check(CLI::Range(0.0, 1.0));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << app.help();
        return 2;
    }
    c.subcommand = app.get_subcommands().front()->get_name();

    try {
        detail::Outcome o;
        if (c.subcommand == "validate") o = detail::do_validate(c);
        else if (c.subcommand == "solve") o = detail::do_solve(c);
        else if (c.subcommand == "reduce") o = detail::do_reduce(c);
        else if (c.subcommand == "uplift") o = detail::do_uplift(c);
        else if (c.subcommand == "simulate") o = detail::do_simulate(c);
        else if (c.subcommand == "price") o = detail::do_price(c);
        else o = detail::do_verify(c);
        if (!c.out.empty() && c.subcommand != "simulate") detail::write_file(c.out, dump(o.report) + "\n");
        if (c.format == "json" && !(c.subcommand == "simulate" && c.out.empty())) out << dump(o.report) << "\n";
        else out << o.text;
        return o.pass ? 0 : 1;
    } catch (const Error& e) {
        err << to_string(e.code()) << ": " << e.what() << "\n";
        return detail::exit_code(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace emmkit::cli
