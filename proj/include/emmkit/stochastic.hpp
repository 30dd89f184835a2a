#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "emmkit/emm.hpp"
#include "emmkit/model.hpp"
#include "emmkit/quadrature.hpp"
#include "emmkit/rng.hpp"

namespace emmkit {

/// A jump: its time, the channel that fired (a driver, or a mark cell for continuous
/// markets) and the mark value (NaN for discrete drivers).
struct Event {
    double time = 0.0;
    std::size_t channel = 0;
    double mark = std::numeric_limits<double>::quiet_NaN();
};

/// One scenario. gauss holds, per observation interval and Brownian motion, the Wiener
/// integrals of that motion's integrands (the constant 1 first, then each stock's
/// volatility, then each tracked density's theta). Integrals are against the physical W.
struct PathBundle {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::vector<double> gauss;
    std::vector<Event> events;
    std::vector<double> stocks;  // [time][stock]
    std::vector<double> log_z;   // [density][time]
};

inline std::vector<double> sample_poisson_inhomogeneous(const TimeFunction& lambda, double horizon, Philox& times,
                                                        Philox& thinning) {
    const double bound = lambda.sup(0.0, horizon) * (1.0 + 1e-9);
    if (!std::isfinite(bound) || bound < 0.0) throw Error(ErrorCode::UnboundedIntensity, "no finite majorant");
    std::vector<double> out;
    if (bound == 0.0) return out;
    double t = 0.0;
    for (;;) {
        t += times.exponential() / bound;
        if (t > horizon) break;
        if (thinning.uniform() * bound <= lambda(t)) out.push_back(t);
    }
    return out;
}

/// Event channels of a market under a measure, with thinning and mark sampling.
class JumpSampler {
public:
    JumpSampler(const MarketSpec& spec, const Emm& measure) : horizon_(spec.horizon) {
        if (spec.is_discrete()) {
            const DiscreteJumps& d = spec.discrete();
            if (measure.lambda_tilde.size() != d.intensities.size())
                throw Error(ErrorCode::ShapeMismatch, "measure intensities do not match the drivers");
            for (std::size_t m = 0; m < d.intensities.size(); ++m) {
                physical_.push_back(d.intensities[m]);
                rate_.push_back(measure.lambda_tilde[m]);
                cells_.push_back({});
                envelope_.push_back(0.0);
            }
        } else {
            if (!measure.density) throw Error(ErrorCode::ShapeMismatch, "measure has no mark cells");
            const ContinuousJumps& c = spec.continuous();
            density_ = spec.continuous().density;
            marked_ = true;
            for (std::size_t k = 0; k < measure.density->cells.size(); ++k) {
                const Interval& b = measure.density->cells[k];
                cells_.push_back(b);
                physical_.push_back(c.total_intensity.scaled(c.density.probability(b.lo, b.hi)));
                rate_.push_back(measure.density->intensity[k]);
                envelope_.push_back(c.density.sup(b.lo, b.hi));
            }
        }
        for (const TimeFunction& f : rate_) {
            const double s = f.sup(0.0, horizon_);
            if (!std::isfinite(s)) throw Error(ErrorCode::UnboundedIntensity, "no finite majorant");
            sup_.push_back(std::max(0.0, s));
        }
    }

    std::size_t channels() const noexcept { return rate_.size(); }
    bool marked() const noexcept { return marked_; }
    const TimeFunction& rate(std::size_t c) const { return rate_[c]; }
    const TimeFunction& physical(std::size_t c) const { return physical_[c]; }
    const Interval& cell(std::size_t c) const { return cells_[c]; }

    /// Events on the selected channels (all when mask is null), by thinning the
    /// superposed rate and then choosing the channel in proportion to its rate.
    std::vector<Event> sample(Philox& times, Philox& thinning, Philox& marks,
                              const std::vector<bool>* mask = nullptr) const {
        std::vector<std::size_t> active;
        double bound = 0.0;
        for (std::size_t c = 0; c < rate_.size(); ++c) {
            if (mask && !(*mask)[c]) continue;
            active.push_back(c);
            bound += sup_[c];
        }
        bound *= 1.0 + 1e-9;
        std::vector<Event> out;
        if (active.empty() || bound == 0.0) return out;
        std::vector<double> r(active.size());
        double t = 0.0;
        for (;;) {
            t += times.exponential() / bound;
            if (t > horizon_) break;
            double total = 0.0;
            for (std::size_t a = 0; a < active.size(); ++a) {
                r[a] = rate_[active[a]](t);
                total += r[a];
            }
            if (!(thinning.uniform() * bound <= total)) continue;
            std::size_t pick = active.back();
            if (active.size() > 1) {
                double u = marks.uniform() * total;
                for (std::size_t a = 0; a < active.size(); ++a) {
                    if (u < r[a]) {
                        pick = active[a];
                        break;
                    }
                    u -= r[a];
                }
            }
            Event e{t, pick};
            if (marked_) e.mark = draw_mark(pick, marks);
            out.push_back(e);
        }
        return out;
    }

    /// Mark from the density restricted to the channel's cell, by rejection.
    double draw_mark(std::size_t c, Philox& marks) const {
        const Interval& b = cells_[c];
        for (int tries = 0; tries < 1'000'000; ++tries) {
            const double y = b.lo + b.width() * marks.uniform();
            if (marks.uniform() * envelope_[c] <= (*density_)(y)) return y;
        }
        throw Error(ErrorCode::EmptyCell, "mark rejection sampler failed to accept");
    }

private:
    double horizon_;
    bool marked_ = false;
    std::optional<MarkDensity> density_;
    std::vector<TimeFunction> physical_;
    std::vector<TimeFunction> rate_;
    std::vector<Interval> cells_;
    std::vector<double> envelope_;
    std::vector<double> sup_;
};

inline std::vector<Event> sample_marked_point_process(const MarketSpec& spec, const Emm& measure, Philox& times,
                                                      Philox& thinning, Philox& marks) {
    return JumpSampler(spec, measure).sample(times, thinning, marks);
}

inline std::vector<double> observation_grid(double horizon, std::vector<double> times) {
    for (double t : times)
        if (!(t >= 0.0 && t <= horizon)) throw Error(ErrorCode::DomainError, "observation time outside [0, T]");
    times.push_back(0.0);
    times.push_back(horizon);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    return times;
}

/// Exact simulator for one market under one measure. Prices use the pathwise solution
/// of the stock equation: the measure only changes the law of the drivers.
class PathSimulator {
public:
    PathSimulator(const MarketSpec& spec, const Emm& measure, std::vector<double> times = {},
                  std::vector<Emm> densities = {})
        : spec_(spec), measure_(measure), densities_(std::move(densities)), jumps_(spec_, measure_) {
        times_ = observation_grid(spec_.horizon, std::move(times));
        if (measure_.theta.size() != spec_.brownians)
            throw Error(ErrorCode::ShapeMismatch, "measure theta does not match the Brownian motions");
        for (const Emm& e : densities_) {
            if (e.theta.size() != spec_.brownians) throw Error(ErrorCode::ShapeMismatch, "density theta shape");
            if (spec_.is_discrete() ? e.lambda_tilde.size() != jumps_.channels()
                                    : (!e.density || e.density->cells != measure_.density->cells))
                throw Error(ErrorCode::ShapeMismatch, "density must share the simulation's jump channels");
        }
        build_gaussian();
        build_drift();
        build_densities();
    }

    const MarketSpec& spec() const noexcept { return spec_; }
    const Emm& measure() const noexcept { return measure_; }
    const JumpSampler& jumps() const noexcept { return jumps_; }
    const std::vector<double>& times() const noexcept { return times_; }
    std::size_t intervals() const noexcept { return times_.size() - 1; }
    std::size_t integrands() const noexcept { return width_; }
    std::size_t densities() const noexcept { return densities_.size(); }

    std::size_t time_index(double t) const {
        auto it = std::lower_bound(times_.begin(), times_.end(), t);
        if (it == times_.end() || *it != t) throw Error(ErrorCode::DomainError, "time is not on the observation grid");
        return static_cast<std::size_t>(it - times_.begin());
    }

    std::size_t gauss_offset(std::size_t k, std::size_t j) const { return (k * spec_.brownians + j) * width_; }
    static constexpr std::size_t unit_slot() { return 0; }
    std::size_t sigma_slot(std::size_t i) const { return 1 + i; }
    std::size_t theta_slot(std::size_t e) const { return 1 + spec_.n() + e; }

    /// Fills the Wiener integrals of the selected Brownian motions (all when mask is null).
    void draw_brownian(Philox& rng, std::vector<double>& gauss, const std::vector<bool>* mask = nullptr) const {
        gauss.resize(intervals() * spec_.brownians * width_);
        std::vector<double> z(width_);
        for (std::size_t k = 0; k < intervals(); ++k) {
            for (std::size_t j = 0; j < spec_.brownians; ++j) {
                if (mask && !(*mask)[j]) continue;
                const Block& blk = blocks_[k * spec_.brownians + j];
                for (double& v : z) v = rng.normal();
                double* out = gauss.data() + gauss_offset(k, j);
                for (std::size_t a = 0; a < width_; ++a) {
                    double s = blk.mean[a];
                    for (std::size_t b = 0; b < width_; ++b) s += blk.factor[a * width_ + b] * z[b];
                    out[a] = s;
                }
            }
        }
    }

    PathBundle simulate(std::uint64_t seed, std::uint64_t stream) const {
        PathBundle p;
        p.seed = seed;
        p.stream = stream;
        Philox bw(seed, stream, StreamRole::brownian), tm(seed, stream, StreamRole::event_times),
            th(seed, stream, StreamRole::thinning), mk(seed, stream, StreamRole::marks);
        draw_brownian(bw, p.gauss);
        p.events = jumps_.sample(tm, th, mk);
        finalize(p);
        return p;
    }

    /// Keeps the selected Brownian blocks and channels of base and redraws the rest.
    PathBundle complete(const PathBundle& base, const std::vector<bool>& keep_brownian,
                        const std::vector<bool>& keep_channel, std::uint64_t seed, std::uint64_t stream) const {
        PathBundle p;
        p.seed = seed;
        p.stream = stream;
        p.gauss = base.gauss;
        std::vector<bool> redraw_b(keep_brownian.size());
        for (std::size_t j = 0; j < redraw_b.size(); ++j) redraw_b[j] = !keep_brownian[j];
        std::vector<bool> redraw_c(keep_channel.size());
        for (std::size_t c = 0; c < redraw_c.size(); ++c) redraw_c[c] = !keep_channel[c];
        Philox bw(seed, stream, StreamRole::brownian), tm(seed, stream, StreamRole::event_times),
            th(seed, stream, StreamRole::thinning), mk(seed, stream, StreamRole::marks);
        draw_brownian(bw, p.gauss, &redraw_b);
        for (const Event& e : base.events)
            if (keep_channel[e.channel]) p.events.push_back(e);
        std::vector<Event> fresh = jumps_.sample(tm, th, mk, &redraw_c);
        p.events.insert(p.events.end(), fresh.begin(), fresh.end());
        finalize(p);
        return p;
    }

    /// Sorts events and evaluates prices and densities on the observation grid.
    void finalize(PathBundle& p) const {
        std::stable_sort(p.events.begin(), p.events.end(),
                         [](const Event& x, const Event& y) { return x.time < y.time; });
        p.stocks = stock_values(p);
        p.log_z.clear();
        for (std::size_t e = 0; e < densities_.size(); ++e) {
            std::vector<double> z = log_density(p, e);
            p.log_z.insert(p.log_z.end(), z.begin(), z.end());
        }
    }

    double jump_log_factor(std::size_t i, const Event& e) const {
        const double y = spec_.is_discrete() ? spec_.discrete().loadings[i][e.channel](e.time)
                                             : spec_.continuous().respond(i, e.mark);
        return std::log1p(y);
    }

    /// Stock prices on the grid, [time][stock]; events must be sorted.
    std::vector<double> stock_values(const PathBundle& p) const {
        const std::size_t n = spec_.n(), K = times_.size();
        std::vector<double> out(K * n);
        std::vector<double> diff(n, 0.0), jump(n, 0.0);
        std::size_t next = 0;
        for (std::size_t k = 0; k < K; ++k) {
            if (k > 0) {
                for (std::size_t j = 0; j < spec_.brownians; ++j) {
                    const double* g = p.gauss.data() + gauss_offset(k - 1, j);
                    for (std::size_t i = 0; i < n; ++i) diff[i] += g[sigma_slot(i)];
                }
            }
            while (next < p.events.size() && p.events[next].time <= times_[k]) {
                for (std::size_t i = 0; i < n; ++i) jump[i] += jump_log_factor(i, p.events[next]);
                ++next;
            }
            for (std::size_t i = 0; i < n; ++i)
                out[k * n + i] = spec_.stocks[i].s0 * std::exp(diff[i] + drift_[k * n + i] + jump[i]);
        }
        return out;
    }

    double event_log_ratio(std::size_t e, const Event& ev) const {
        const double phys = jumps_.physical(ev.channel)(ev.time);
        const double q = spec_.is_discrete() ? densities_[e].lambda_tilde[ev.channel](ev.time)
                                             : densities_[e].density->intensity[ev.channel](ev.time);
        if (!(q > 0.0) || !(phys > 0.0))
            throw Error(ErrorCode::NullMark, "event where the measures are not equivalent");
        return std::log(q / phys);
    }

    /// log of the density of tracked measure e against the physical one, on the grid.
    std::vector<double> log_density(const PathBundle& p, std::size_t e) const {
        const std::size_t K = times_.size();
        std::vector<double> out(K);
        double stoch = 0.0, jump = 0.0;
        std::size_t next = 0;
        for (std::size_t k = 0; k < K; ++k) {
            if (k > 0)
                for (std::size_t j = 0; j < spec_.brownians; ++j)
                    stoch -= p.gauss[gauss_offset(k - 1, j) + theta_slot(e)];
            while (next < p.events.size() && p.events[next].time <= times_[k]) {
                jump += event_log_ratio(e, p.events[next]);
                ++next;
            }
            out[k] = stoch + density_drift_[e * K + k] + jump;
        }
        return out;
    }

    double brownian_value(const PathBundle& p, std::size_t j, std::size_t k) const {
        double w = 0.0;
        for (std::size_t q = 0; q < k; ++q) w += p.gauss[gauss_offset(q, j) + unit_slot()];
        return w;
    }

    std::vector<std::size_t> channel_counts(const PathBundle& p, std::size_t k) const {
        std::vector<std::size_t> c(jumps_.channels(), 0);
        for (const Event& e : p.events)
            if (e.time <= times_[k]) ++c[e.channel];
        return c;
    }

    double stock(const PathBundle& p, std::size_t k, std::size_t i) const { return p.stocks[k * spec_.n() + i]; }

    double discount(std::size_t k) const { return discount_[k]; }

private:
    struct Block {
        std::vector<double> mean;
        std::vector<double> factor;
    };

    std::vector<double> merged_breaks(std::initializer_list<const TimeFunction*> fs, double a, double b) const {
        std::vector<double> out;
        for (const TimeFunction* f : fs)
            for (double x : f->knots())
                if (x > a && x < b) out.push_back(x);
        return out;
    }

    void build_gaussian() {
        const std::size_t n = spec_.n(), D = spec_.brownians;
        width_ = 1 + n + densities_.size();
        blocks_.resize(intervals() * D);
        const TimeFunction one(1.0);
        for (std::size_t j = 0; j < D; ++j) {
            std::vector<const TimeFunction*> h{&one};
            for (std::size_t i = 0; i < n; ++i) h.push_back(&spec_.stocks[i].sigma[j]);
            for (const Emm& e : densities_) h.push_back(&e.theta[j]);
            const TimeFunction& shift = measure_.theta[j];
            for (std::size_t k = 0; k < intervals(); ++k) {
                const double a = times_[k], b = times_[k + 1];
                Eigen::MatrixXd cov(width_, width_);
                Block blk;
                blk.mean.resize(width_);
                for (std::size_t x = 0; x < width_; ++x) {
                    blk.mean[x] = -integrate([&](double s) { return (*h[x])(s) * shift(s); }, a, b,
                                             merged_breaks({h[x], &shift}, a, b));
                    for (std::size_t y = x; y < width_; ++y) {
                        const double c = integrate([&](double s) { return (*h[x])(s) * (*h[y])(s); }, a, b,
                                                   merged_breaks({h[x], h[y]}, a, b));
                        cov(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = c;
                        cov(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x)) = c;
                    }
                }
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
                // proportional coefficients make cov singular; roundoff-sized eigenvalues are zero
                Eigen::VectorXd ev = eig.eigenvalues();
                const double floor = 64.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(width_) *
                                     ev.cwiseAbs().maxCoeff();
                for (Eigen::Index q = 0; q < ev.size(); ++q) ev(q) = ev(q) > floor ? std::sqrt(ev(q)) : 0.0;
                const Eigen::MatrixXd f = eig.eigenvectors() * ev.asDiagonal();
                blk.factor.resize(width_ * width_);
                for (std::size_t x = 0; x < width_; ++x)
                    for (std::size_t y = 0; y < width_; ++y)
                        blk.factor[x * width_ + y] = f(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
                blocks_[k * D + j] = std::move(blk);
            }
        }
    }

    void build_drift() {
        const std::size_t n = spec_.n(), K = times_.size();
        drift_.assign(K * n, 0.0);
        discount_.assign(K, 1.0);
        std::vector<const TimeFunction*> all;
        std::vector<TimeFunction> coeffs = spec_.coefficients();
        for (const TimeFunction& f : coeffs) all.push_back(&f);
        std::vector<double> mean_response;
        if (!spec_.is_discrete()) {
            const ContinuousJumps& c = spec_.continuous();
            for (std::size_t i = 0; i < n; ++i)
                mean_response.push_back(c.conditional_mean(i, c.density.lo(), c.density.hi()));
        }
        double rate_acc = 0.0;
        for (std::size_t k = 1; k < K; ++k) {
            const double a = times_[k - 1], b = times_[k];
            const std::vector<double> br = breakpoints(all, a, b);
            for (std::size_t i = 0; i < n; ++i) {
                auto integrand = [&](double s) {
                    double v = spec_.stocks[i].alpha(s);
                    for (const TimeFunction& sg : spec_.stocks[i].sigma) v -= 0.5 * sg(s) * sg(s);
                    if (spec_.is_discrete()) {
                        const DiscreteJumps& d = spec_.discrete();
                        for (std::size_t m = 0; m < d.intensities.size(); ++m)
                            v -= d.loadings[i][m](s) * d.intensities[m](s);
                    } else {
                        v -= spec_.continuous().total_intensity(s) * mean_response[i];
                    }
                    return v;
                };
                drift_[k * n + i] = drift_[(k - 1) * n + i] + integrate(integrand, a, b, br);
            }
            rate_acc += spec_.rate.integral(a, b);
            discount_[k] = std::exp(-rate_acc);
        }
    }

    void build_densities() {
        const std::size_t K = times_.size();
        density_drift_.assign(densities_.size() * K, 0.0);
        for (std::size_t e = 0; e < densities_.size(); ++e) {
            const Emm& q = densities_[e];
            std::vector<const TimeFunction*> fs;
            for (const TimeFunction& f : q.theta) fs.push_back(&f);
            for (std::size_t c = 0; c < jumps_.channels(); ++c) fs.push_back(&jumps_.physical(c));
            const std::vector<TimeFunction>& qi = spec_.is_discrete() ? q.lambda_tilde : q.density->intensity;
            for (const TimeFunction& f : qi) fs.push_back(&f);
            for (std::size_t k = 1; k < K; ++k) {
                const double a = times_[k - 1], b = times_[k];
                double acc = 0.0;
                for (const TimeFunction& th : q.theta)
                    acc -= 0.5 * integrate([&](double s) { return th(s) * th(s); }, a, b, breakpoints(fs, a, b));
                for (std::size_t c = 0; c < jumps_.channels(); ++c)
                    acc += jumps_.physical(c).integral(a, b) - qi[c].integral(a, b);
                density_drift_[e * K + k] = density_drift_[e * K + k - 1] + acc;
            }
        }
    }

    MarketSpec spec_;
    Emm measure_;
    std::vector<Emm> densities_;
    JumpSampler jumps_;
    std::vector<double> times_;
    std::size_t width_ = 1;
    std::vector<Block> blocks_;
    std::vector<double> drift_;
    std::vector<double> discount_;
    std::vector<double> density_drift_;
};

/// Recomputes the stock prices of a bundle from its randomness alone.
inline std::vector<double> stock_path_exact(const PathSimulator& sim, const PathBundle& p) {
    return sim.stock_values(p);
}

inline std::vector<double> rn_density_path(const PathSimulator& sim, const PathBundle& p, std::size_t density = 0) {
    std::vector<double> z = sim.log_density(p, density);
    for (double& v : z) v = std::exp(v);
    return z;
}

/// Return process with a closed-form continuous part and finitely many jumps.
struct JumpProcessPath {
    double continuous = 0.0;
    double quadratic_variation = 0.0;
    std::vector<double> jumps;
};

inline double doleans_dade_eval(const JumpProcessPath& x) {
    double log_prod = 0.0;
    for (double dx : x.jumps) {
        if (dx == -1.0) throw Error(ErrorCode::FactorAtMinusOne, "jump of size -1");
        log_prod += std::log(std::abs(1.0 + dx));
    }
    double sign = 1.0;
    for (double dx : x.jumps)
        if (dx < -1.0) sign = -sign;
    return sign * std::exp(x.continuous - 0.5 * x.quadratic_variation + log_prod);
}

struct IntensityTestReport {
    std::vector<double> bin_z;
    double max_abs_z = 0.0;
    double count_z = 0.0;
    std::size_t paths = 0;
    std::size_t events = 0;
    bool pass = false;
};

/// Pooled event times from many paths against the cumulative intensity, bin by bin.
inline IntensityTestReport empirical_intensity_test(const std::vector<double>& event_times, std::size_t paths,
                                                    const TimeFunction& lambda, double horizon,
                                                    std::size_t bins = 20) {
    if (paths < 10'000) throw Error(ErrorCode::InvalidParameter, "intensity test needs at least 1e4 paths");
    IntensityTestReport rep;
    rep.paths = paths;
    rep.events = event_times.size();
    std::vector<double> counts(bins, 0.0);
    for (double t : event_times) {
        std::size_t b = static_cast<std::size_t>(t / horizon * static_cast<double>(bins));
        counts[std::min(b, bins - 1)] += 1.0;
    }
    const double np = static_cast<double>(paths);
    for (std::size_t b = 0; b < bins; ++b) {
        const double lo = horizon * static_cast<double>(b) / static_cast<double>(bins);
        const double hi = horizon * static_cast<double>(b + 1) / static_cast<double>(bins);
        const double expect = np * lambda.integral(lo, hi);
        const double z = (counts[b] - expect) / std::sqrt(expect);
        rep.bin_z.push_back(z);
        rep.max_abs_z = std::max(rep.max_abs_z, std::abs(z));
    }
    const double total = np * lambda.integral(0.0, horizon);
    rep.count_z = (static_cast<double>(event_times.size()) - total) / std::sqrt(total);
    rep.pass = rep.max_abs_z < 4.0 && std::abs(rep.count_z) < 4.0;
    return rep;
}

} // namespace emmkit
