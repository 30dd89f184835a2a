#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "emmkit/emm.hpp"
#include "emmkit/parallel.hpp"
#include "emmkit/projection.hpp"
#include "emmkit/reduction.hpp"
#include "emmkit/rng.hpp"
#include "emmkit/stochastic.hpp"

namespace emmkit {

/// Claim on the terminal state. driver indexes the simulation's jump channels (drivers,
/// or mark cells for continuous markets). A sum applies its own terms' discount flags.
struct Payoff {
    enum class Type { terminal, forward, call, put, indicator_count, sum };
    Type type = Type::terminal;
    std::optional<std::size_t> asset = 0;
    double strike = 0.0;
    std::optional<double> cap;
    std::size_t driver = 0;
    std::size_t count = 0;
    bool discounted = true;
    std::vector<double> weights;
    std::vector<Payoff> terms;

    static Payoff terminal(std::size_t i, bool disc = true) { return {Type::terminal, i, 0.0, {}, 0, 0, disc, {}, {}}; }
    static Payoff call(std::size_t i, double k, bool disc = true) { return {Type::call, i, k, {}, 0, 0, disc, {}, {}}; }
    static Payoff put(std::size_t i, double k, bool disc = true) { return {Type::put, i, k, {}, 0, 0, disc, {}, {}}; }
    static Payoff forward(std::size_t i, double k, bool disc = true) {
        return {Type::forward, i, k, {}, 0, 0, disc, {}, {}};
    }
    static Payoff indicator(std::size_t driver, std::size_t count, std::optional<std::size_t> asset = std::nullopt,
                            bool disc = true) {
        return {Type::indicator_count, asset, 0.0, {}, driver, count, disc, {}, {}};
    }
};

struct TerminalState {
    const double* stocks = nullptr;
    std::vector<std::size_t> counts;
    double discount = 1.0;
};

inline double evaluate(const Payoff& p, const TerminalState& s) {
    if (p.type == Payoff::Type::sum) {
        double acc = 0.0;
        for (std::size_t k = 0; k < p.terms.size(); ++k) acc += p.weights[k] * evaluate(p.terms[k], s);
        return acc;
    }
    const double x = p.asset ? s.stocks[*p.asset] : 1.0;
    double v = 0.0;
    switch (p.type) {
    case Payoff::Type::terminal: v = x; break;
    case Payoff::Type::forward: v = x - p.strike; break;
    case Payoff::Type::call: v = std::max(x - p.strike, 0.0); break;
    case Payoff::Type::put: v = std::max(p.strike - x, 0.0); break;
    case Payoff::Type::indicator_count: v = s.counts[p.driver] == p.count ? x : 0.0; break;
    case Payoff::Type::sum: break;
    }
    if (p.cap) v = std::min(v, *p.cap);
    return p.discounted ? v * s.discount : v;
}

inline void check_payoff(const Payoff& p, std::size_t n, std::size_t channels) {
    if (p.type == Payoff::Type::sum) {
        if (p.weights.size() != p.terms.size()) throw Error(ErrorCode::ShapeMismatch, "sum payoff weights/terms");
        for (const Payoff& q : p.terms) check_payoff(q, n, channels);
        return;
    }
    if (p.type != Payoff::Type::indicator_count && !p.asset)
        throw Error(ErrorCode::ShapeMismatch, "payoff needs an asset");
    if (p.asset && *p.asset >= n) throw Error(ErrorCode::ShapeMismatch, "payoff asset out of range");
    if (p.type == Payoff::Type::indicator_count && p.driver >= channels)
        throw Error(ErrorCode::ShapeMismatch, "payoff driver out of range");
}

struct McReport {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    std::string measure;
};

struct McOptions {
    std::size_t paths = 100'000;
    std::uint64_t seed = default_seed;
    std::size_t threads = default_threads();
    std::uint64_t stream_offset = 0;
};

inline McReport make_report(std::span<const double> x, std::uint64_t seed, std::string measure) {
    const SampleStats s = sample_stats(x);
    return {s.mean, s.std_error, s.n, seed, std::move(measure)};
}

/// Simulates opt.paths bundles and stores width values per path via f(bundle, out).
template <class F>
std::vector<double> run_paths(const PathSimulator& sim, const McOptions& opt, std::size_t width, F&& f) {
    std::vector<double> values(opt.paths * width);
    parallel_for(opt.paths, opt.threads, [&](std::size_t p) {
        const PathBundle b = sim.simulate(opt.seed, opt.stream_offset + p);
        f(b, values.data() + p * width);
    });
    return values;
}

inline std::vector<McReport> column_reports(const std::vector<double>& values, std::size_t width,
                                            std::size_t paths, std::uint64_t seed, const std::string& measure) {
    std::vector<McReport> out;
    std::vector<double> col(paths);
    for (std::size_t c = 0; c < width; ++c) {
        for (std::size_t p = 0; p < paths; ++p) col[p] = values[p * width + c];
        out.push_back(make_report(col, seed, measure));
    }
    return out;
}

inline TerminalState terminal_state(const PathSimulator& sim, const PathBundle& b) {
    const std::size_t K = sim.times().size() - 1;
    return {b.stocks.data() + K * sim.spec().n(), sim.channel_counts(b, K), sim.discount(K)};
}

/// Prices several claims on common paths simulated directly under the measure.
inline std::vector<McReport> price_mc_many(const MarketSpec& spec, const Emm& emm, const std::vector<Payoff>& payoffs,
                                           const McOptions& opt = {}) {
    const PathSimulator sim(spec, emm);
    for (const Payoff& p : payoffs) check_payoff(p, spec.n(), sim.jumps().channels());
    const std::vector<double> v = run_paths(sim, opt, payoffs.size(), [&](const PathBundle& b, double* out) {
        const TerminalState s = terminal_state(sim, b);
        for (std::size_t k = 0; k < payoffs.size(); ++k) out[k] = evaluate(payoffs[k], s);
    });
    return column_reports(v, payoffs.size(), opt.paths, opt.seed, emm.provenance);
}

inline McReport price_mc(const MarketSpec& spec, const Emm& emm, const Payoff& payoff, const McOptions& opt = {}) {
    return price_mc_many(spec, emm, {payoff}, opt).front();
}

/// Same claims under the physical measure, weighted by the density of emm.
inline std::vector<McReport> price_weighted_many(const MarketSpec& spec, const Emm& emm,
                                                 const std::vector<Payoff>& payoffs, const McOptions& opt = {}) {
    const Emm phys = physical_measure(spec, emm.density ? emm.density->cells : std::vector<Interval>{});
    const PathSimulator sim(spec, phys, {}, {emm});
    for (const Payoff& p : payoffs) check_payoff(p, spec.n(), sim.jumps().channels());
    const std::size_t K = sim.times().size() - 1;
    const std::vector<double> v = run_paths(sim, opt, payoffs.size(), [&](const PathBundle& b, double* out) {
        const TerminalState s = terminal_state(sim, b);
        const double z = std::exp(b.log_z[K]);
        for (std::size_t k = 0; k < payoffs.size(); ++k) out[k] = z * evaluate(payoffs[k], s);
    });
    return column_reports(v, payoffs.size(), opt.paths, opt.seed, "physical weighted by " + emm.provenance);
}

/// E_P[Z(T)] for the measure.
inline McReport density_mass(const MarketSpec& spec, const Emm& emm, const McOptions& opt = {}) {
    const Emm phys = physical_measure(spec, emm.density ? emm.density->cells : std::vector<Interval>{});
    const PathSimulator sim(spec, phys, {}, {emm});
    const std::size_t K = sim.times().size() - 1;
    const std::vector<double> v =
        run_paths(sim, opt, 1, [&](const PathBundle& b, double* out) { out[0] = std::exp(b.log_z[K]); });
    return make_report(v, opt.seed, "physical weighted by " + emm.provenance);
}

inline double combined_se(const McReport& a, const McReport& b) {
    return std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
}

// ===========================================================================
// Restriction of the uplifted measure to the retained information
// ===========================================================================

struct EventCondition {
    enum class Kind { driver_count, brownian_above };
    Kind kind = Kind::driver_count;
    std::size_t index = 0;
    std::size_t count = 0;
    double level = 0.0;
};

/// Conjunction of conditions on the terminal state; empty means the whole space.
struct RestrictionEvent {
    std::string label;
    std::vector<EventCondition> all_of;
};

struct RestrictionRow {
    std::string label;
    McReport uplifted;
    McReport fictitious;
    double difference = 0.0;
    double combined_se = 0.0;
    bool pass = false;
};

struct RestrictionReport {
    std::vector<RestrictionRow> rows;
    bool pass = false;
};

namespace detail {

/// Index of the reduced driver that is exactly original channel c, if any.
inline std::optional<std::size_t> reduced_channel(const FictitiousMarket& fm, std::size_t c) {
    if (fm.plan.is_continuous()) {
        if (c < fm.drivers.size()) return c;
        return std::nullopt;
    }
    for (std::size_t k = 0; k < fm.drivers.size(); ++k) {
        const ReducedDriver& rd = fm.drivers[k];
        if (rd.members.size() == 1 && rd.members.front() == c) return k;
    }
    return std::nullopt;
}

inline std::optional<std::size_t> reduced_brownian(const FictitiousMarket& fm, std::size_t j) {
    for (std::size_t k = 0; k < fm.kept_brownians.size(); ++k)
        if (fm.kept_brownians[k] == j) return k;
    return std::nullopt;
}

inline bool holds(const std::vector<EventCondition>& conds, const PathSimulator& sim, const PathBundle& b) {
    const std::size_t K = sim.times().size() - 1;
    std::vector<std::size_t> counts;
    for (const EventCondition& c : conds) {
        if (c.kind == EventCondition::Kind::driver_count) {
            if (counts.empty()) counts = sim.channel_counts(b, K);
            if (counts[c.index] != c.count) return false;
        } else if (!(sim.brownian_value(b, c.index, K) > c.level)) {
            return false;
        }
    }
    return true;
}

} // namespace detail

/// Compares E_P[Z* 1_A] on the original market with E_P[Z~ 1_A] on the reduced market,
/// each from its own independent simulation.
inline RestrictionReport restriction_check(const FictitiousMarket& fm, const Emm& emm, const Emm& fict_emm,
                                           const std::vector<RestrictionEvent>& events, const McOptions& opt = {}) {
    std::vector<std::vector<EventCondition>> mapped;
    for (const RestrictionEvent& ev : events) {
        std::vector<EventCondition> m;
        for (const EventCondition& c : ev.all_of) {
            EventCondition r = c;
            const auto idx = c.kind == EventCondition::Kind::driver_count ? detail::reduced_channel(fm, c.index)
                                                                          : detail::reduced_brownian(fm, c.index);
            if (!idx) throw Error(ErrorCode::NonReducedEvent, "event '" + ev.label + "' uses information outside the reduced market");
            r.index = *idx;
            m.push_back(r);
        }
        mapped.push_back(std::move(m));
    }
    const std::size_t E = events.size();
    const Emm phys = physical_measure(fm.original, emm.density ? emm.density->cells : std::vector<Interval>{});
    const PathSimulator orig(fm.original, phys, {}, {emm});
    const PathSimulator fict(fm.spec, physical_measure(fm.spec), {}, {fict_emm});
    const std::size_t Ko = orig.times().size() - 1, Kf = fict.times().size() - 1;

    const std::vector<double> vo = run_paths(orig, opt, E, [&](const PathBundle& b, double* out) {
        const double z = std::exp(b.log_z[Ko]);
        for (std::size_t e = 0; e < E; ++e) out[e] = detail::holds(events[e].all_of, orig, b) ? z : 0.0;
    });
    McOptions fopt = opt;
    fopt.stream_offset = opt.stream_offset + (std::uint64_t{1} << 40);
    const std::vector<double> vf = run_paths(fict, fopt, E, [&](const PathBundle& b, double* out) {
        const double z = std::exp(b.log_z[Kf]);
        for (std::size_t e = 0; e < E; ++e) out[e] = detail::holds(mapped[e], fict, b) ? z : 0.0;
    });
    const std::vector<McReport> ro = column_reports(vo, E, opt.paths, opt.seed, "physical weighted by " + emm.provenance);
    const std::vector<McReport> rf = column_reports(vf, E, opt.paths, opt.seed, "physical weighted by " + fict_emm.provenance);
    RestrictionReport rep;
    rep.pass = true;
    for (std::size_t e = 0; e < E; ++e) {
        RestrictionRow row{events[e].label, ro[e], rf[e], ro[e].estimate - rf[e].estimate, combined_se(ro[e], rf[e]), false};
        row.pass = std::abs(row.difference) <= 4.0 * row.combined_se;
        rep.pass = rep.pass && row.pass;
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

// ===========================================================================
// Cost of construction: nested conditional simulation
// ===========================================================================

struct CostReport {
    McReport nested;
    McReport plain;
    double difference = 0.0;
    double combined_se = 0.0;
    std::size_t outer = 0;
    std::size_t inner = 0;
    bool pass = false;
};

namespace detail {

/// Original-market bundle carrying a reduced path's information: kept Brownian
/// integrals copied, reduced events mapped back (batch members and cell marks drawn
/// from their conditional laws). Everything else is left for complete() to redraw.
inline PathBundle lift_reduced_path(const FictitiousMarket& fm, const PathSimulator& fict, const PathSimulator& orig,
                                    const PathBundle& reduced, Philox& marks) {
    PathBundle b;
    b.gauss.assign(orig.intervals() * fm.original.brownians * orig.integrands(), 0.0);
    const std::size_t copy = 1 + fm.original.n();
    for (std::size_t k = 0; k < orig.intervals(); ++k)
        for (std::size_t jf = 0; jf < fm.kept_brownians.size(); ++jf) {
            const double* src = reduced.gauss.data() + fict.gauss_offset(k, jf);
            double* dst = b.gauss.data() + orig.gauss_offset(k, fm.kept_brownians[jf]);
            std::copy(src, src + copy, dst);
        }
    for (const Event& e : reduced.events) {
        const ReducedDriver& rd = fm.drivers[e.channel];
        Event out{e.time, 0};
        if (rd.kind == ReducedDriver::Kind::cell) {
            out.channel = e.channel;
            out.mark = orig.jumps().draw_mark(out.channel, marks);
        } else if (rd.members.size() == 1) {
            out.channel = rd.members.front();
        } else {
            double u = marks.uniform();
            out.channel = rd.members.back();
            for (std::size_t q = 0; q < rd.members.size(); ++q) {
                const double w = rd.weights[q](e.time);
                if (u < w) {
                    out.channel = rd.members[q];
                    break;
                }
                u -= w;
            }
        }
        b.events.push_back(out);
    }
    return b;
}

inline std::vector<bool> covered_channels(const FictitiousMarket& fm, std::size_t channels) {
    std::vector<bool> keep(channels, false);
    for (std::size_t k = 0; k < fm.drivers.size(); ++k) {
        const ReducedDriver& rd = fm.drivers[k];
        if (rd.kind == ReducedDriver::Kind::cell) keep[k] = true;
        else
            for (std::size_t m : rd.members) keep[m] = true;
    }
    return keep;
}

inline std::vector<bool> kept_mask(const FictitiousMarket& fm) {
    std::vector<bool> keep(fm.original.brownians, false);
    for (std::size_t j : fm.kept_brownians) keep[j] = true;
    return keep;
}

} // namespace detail

struct NestedOptions {
    std::size_t outer = 100;
    std::size_t inner = 10'000;
    std::size_t budget = 50'000'000;
};

/// Outer paths of the reduced market under its EMM; each gets the conditional
/// expectation of the claim under the uplifted measure by inner simulation of
/// everything the reduced market does not see.
inline CostReport cost_of_construction_check(const FictitiousMarket& fm, const Emm& emm, const Emm& fict_emm,
                                             const Payoff& payoff, const NestedOptions& nested, const McOptions& opt = {}) {
    if (nested.outer * nested.inner > nested.budget)
        throw Error(ErrorCode::BudgetExceeded, "nested simulation exceeds the path budget");
    const PathSimulator fict(fm.spec, fict_emm);
    const PathSimulator orig(fm.original, emm);
    check_payoff(payoff, fm.original.n(), orig.jumps().channels());
    const std::vector<bool> keep_b = detail::kept_mask(fm);
    const std::vector<bool> keep_c = detail::covered_channels(fm, orig.jumps().channels());
    const std::uint64_t inner_base = opt.stream_offset + (std::uint64_t{1} << 41);

    std::vector<double> outer_values(nested.outer);
    parallel_for(nested.outer, opt.threads, [&](std::size_t o) {
        const PathBundle reduced = fict.simulate(opt.seed, opt.stream_offset + o);
        std::vector<double> inner(nested.inner);
        for (std::size_t q = 0; q < nested.inner; ++q) {
            const std::uint64_t stream = inner_base + o * nested.inner + q;
            Philox marks(opt.seed, stream ^ (std::uint64_t{1} << 63), StreamRole::marks);
            const PathBundle lifted = detail::lift_reduced_path(fm, fict, orig, reduced, marks);
            const PathBundle full = orig.complete(lifted, keep_b, keep_c, opt.seed, stream);
            inner[q] = evaluate(payoff, terminal_state(orig, full));
        }
        outer_values[o] = pairwise_sum(inner) / static_cast<double>(nested.inner);
    });
    CostReport rep;
    rep.outer = nested.outer;
    rep.inner = nested.inner;
    rep.nested = make_report(outer_values, opt.seed, fict_emm.provenance + " with conditional inner simulation");
    McOptions popt = opt;
    popt.stream_offset = opt.stream_offset + (std::uint64_t{1} << 42);
    rep.plain = price_mc(fm.original, emm, payoff, popt);
    rep.difference = rep.nested.estimate - rep.plain.estimate;
    rep.combined_se = combined_se(rep.nested, rep.plain);
    rep.pass = std::abs(rep.difference) <= 4.0 * rep.combined_se;
    return rep;
}

// ===========================================================================
// Hedging error of a simple strategy
// ===========================================================================

/// Holdings in discounted stock units and a jump integrand per channel, both constant on
/// each (grid[k], grid[k+1]]. An empty jump table means no jump position.
struct Strategy {
    std::vector<double> grid;
    std::vector<std::vector<double>> holdings;
    std::vector<std::vector<double>> jump;
    double initial_value = 0.0;
};

struct HedgingReport {
    McReport error;
    McReport gain;
    McReport stock_gain;
    McReport jump_gain;
    double max_abs_error = 0.0;
    bool non_priced = false;
};

inline HedgingReport hedging_error(const MarketSpec& spec, const Emm& emm, const Strategy& st, const Payoff& payoff,
                                   const McOptions& opt = {}) {
    const std::size_t n = spec.n();
    if (st.grid.size() < 2 || st.grid.front() != 0.0 || st.grid.back() != spec.horizon)
        throw Error(ErrorCode::InvalidParameter, "strategy grid must run from 0 to the horizon");
    const std::size_t I = st.grid.size() - 1;
    if (st.holdings.size() != I) throw Error(ErrorCode::ShapeMismatch, "one holding row per rebalance interval");
    for (const auto& row : st.holdings)
        if (row.size() != n) throw Error(ErrorCode::ShapeMismatch, "one holding per stock");
    const PathSimulator sim(spec, emm, st.grid);
    const std::size_t C = sim.jumps().channels();
    if (!st.jump.empty()) {
        if (st.jump.size() != I) throw Error(ErrorCode::ShapeMismatch, "one jump row per rebalance interval");
        for (const auto& row : st.jump)
            if (row.size() != C) throw Error(ErrorCode::ShapeMismatch, "one jump integrand per channel");
    }
    check_payoff(payoff, n, C);
    std::vector<std::size_t> at(I + 1);
    for (std::size_t k = 0; k <= I; ++k) at[k] = sim.time_index(st.grid[k]);
    double compensator = 0.0;
    if (!st.jump.empty())
        for (std::size_t k = 0; k < I; ++k)
            for (std::size_t c = 0; c < C; ++c)
                compensator += st.jump[k][c] * sim.jumps().rate(c).integral(st.grid[k], st.grid[k + 1]);

    const std::vector<double> v = run_paths(sim, opt, 4, [&](const PathBundle& b, double* out) {
        double sg = 0.0;
        for (std::size_t k = 0; k < I; ++k)
            for (std::size_t i = 0; i < n; ++i) {
                if (st.holdings[k][i] == 0.0) continue;
                const double s1 = sim.discount(at[k + 1]) * sim.stock(b, at[k + 1], i);
                const double s0 = sim.discount(at[k]) * sim.stock(b, at[k], i);
                sg += st.holdings[k][i] * (s1 - s0);
            }
        double jg = 0.0;
        if (!st.jump.empty()) {
            for (const Event& e : b.events) {
                const auto it = std::lower_bound(st.grid.begin(), st.grid.end(), e.time);
                const std::size_t k = it == st.grid.begin() ? 0 : static_cast<std::size_t>(it - st.grid.begin()) - 1;
                jg += st.jump[k][e.channel];
            }
            jg -= compensator;
        }
        const double claim = evaluate(payoff, terminal_state(sim, b));
        out[0] = ((claim - st.initial_value) - sg) - jg;
        out[1] = sg + jg;
        out[2] = sg;
        out[3] = jg;
    });
    const std::vector<McReport> r = column_reports(v, 4, opt.paths, opt.seed, emm.provenance);
    HedgingReport rep{r[0], r[1], r[2], r[3], 0.0, false};
    for (std::size_t p = 0; p < opt.paths; ++p) rep.max_abs_error = std::max(rep.max_abs_error, std::abs(v[p * 4]));
    rep.non_priced = std::abs(rep.gain.estimate) <= 4.0 * rep.gain.std_error;
    return rep;
}

// ===========================================================================
// Projection of full prices onto the retained information
// ===========================================================================

struct ProjectionReport {
    std::size_t outer = 0;
    std::size_t inner = 0;
    double time = 0.0;
    double max_abs_z = 0.0;
    std::size_t failures = 0;
    bool pass = false;
};

inline ProjectionReport projection_consistency_check(const FictitiousMarket& fm, const NestedOptions& nested,
                                                     double t, const McOptions& opt = {},
                                                     ProjectionVariant variant = ProjectionVariant::exact) {
    if (!fm.complete_neglect()) throw Error(ErrorCode::PlanMismatch, "projection needs a complete neglect plan");
    if (nested.outer * nested.inner > nested.budget)
        throw Error(ErrorCode::BudgetExceeded, "nested simulation exceeds the path budget");
    const PathSimulator sim(fm.original, physical_measure(fm.original), {t});
    const std::size_t k = sim.time_index(t);
    const std::size_t n = fm.original.n();
    const std::vector<bool> keep_b = detail::kept_mask(fm);
    const std::vector<bool> keep_c = detail::covered_channels(fm, sim.jumps().channels());
    const std::uint64_t inner_base = opt.stream_offset + (std::uint64_t{1} << 41);

    std::vector<double> z(nested.outer * n, 0.0);
    std::vector<int> failed(nested.outer * n, 0);
    parallel_for(nested.outer, opt.threads, [&](std::size_t o) {
        const PathBundle base = sim.simulate(opt.seed, opt.stream_offset + o);
        const std::vector<double> proj = project_price_closed_form(sim, fm, base, k, variant);
        std::vector<std::vector<double>> samples(n, std::vector<double>(nested.inner));
        for (std::size_t q = 0; q < nested.inner; ++q) {
            const PathBundle full = sim.complete(base, keep_b, keep_c, opt.seed, inner_base + o * nested.inner + q);
            for (std::size_t i = 0; i < n; ++i) samples[i][q] = sim.stock(full, k, i);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const SampleStats s = sample_stats(samples[i]);
            const double diff = std::abs(s.mean - proj[i]);
            const double scale = s.std_error + 0.25e-12 * std::abs(proj[i]);
            const double allowance = 4.0 * scale;
            z[o * n + i] = scale > 0.0 ? diff / scale : (diff > 0.0 ? INFINITY : 0.0);
            failed[o * n + i] = diff > allowance ? 1 : 0;
        }
    });
    ProjectionReport rep{nested.outer, nested.inner, t, 0.0, 0, false};
    for (std::size_t q = 0; q < z.size(); ++q) {
        rep.max_abs_z = std::max(rep.max_abs_z, z[q]);
        rep.failures += static_cast<std::size_t>(failed[q]);
    }
    rep.pass = rep.failures == 0;
    return rep;
}

} // namespace emmkit
