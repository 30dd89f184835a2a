#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "emmkit/error.hpp"
#include "emmkit/quadrature.hpp"
#include "emmkit/time_function.hpp"

namespace emmkit {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const noexcept { return hi - lo; }
    bool contains(double y) const noexcept { return y >= lo && y < hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

enum class DensityFamily { uniform, truncated_normal, truncated_exponential, histogram };

/// Mark density on a bounded support, zero outside it.
class MarkDensity {
public:
    static MarkDensity uniform(double lo, double hi) { return MarkDensity(DensityFamily::uniform, lo, hi, {}); }

    static MarkDensity truncated_normal(double lo, double hi, double mu, double sd) {
        return MarkDensity(DensityFamily::truncated_normal, lo, hi, {mu, sd});
    }

    static MarkDensity truncated_exponential(double lo, double hi, double rate) {
        return MarkDensity(DensityFamily::truncated_exponential, lo, hi, {rate});
    }

    /// Bin densities are taken as given; validation checks they integrate to one.
    static MarkDensity histogram(std::vector<double> edges, std::vector<double> densities) {
        if (edges.size() < 2 || densities.size() + 1 != edges.size())
            throw Error(ErrorCode::ShapeMismatch, "histogram needs k+1 edges for k densities");
        for (std::size_t j = 1; j < edges.size(); ++j)
            if (!(edges[j] > edges[j - 1])) throw Error(ErrorCode::InvalidParameter, "histogram edges must increase");
        for (double d : densities)
            if (!(d >= 0.0) || !std::isfinite(d)) throw Error(ErrorCode::InvalidParameter, "histogram densities must be >= 0");
        MarkDensity m(DensityFamily::histogram, edges.front(), edges.back(), std::move(densities));
        m.edges_ = std::move(edges);
        return m;
    }

    DensityFamily family() const noexcept { return family_; }
    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    Interval support() const noexcept { return {lo_, hi_}; }
    const std::vector<double>& params() const noexcept { return params_; }
    const std::vector<double>& edges() const noexcept { return edges_; }

    double operator()(double y) const {
        if (y < lo_ || y > hi_) return 0.0;
        switch (family_) {
        case DensityFamily::uniform: return 1.0 / (hi_ - lo_);
        case DensityFamily::truncated_normal: {
            const double z = (y - params_[0]) / params_[1];
            return std::exp(-0.5 * z * z) / (params_[1] * std::sqrt(2.0 * std::numbers::pi) * norm_);
        }
        case DensityFamily::truncated_exponential: {
            const double rate = params_[0];
            if (rate == 0.0) return 1.0 / (hi_ - lo_);
            return rate * std::exp(-rate * (y - lo_)) / norm_;
        }
        case DensityFamily::histogram: {
            auto it = std::upper_bound(edges_.begin(), edges_.end(), y);
            std::size_t j = static_cast<std::size_t>(it - edges_.begin());
            j = j == 0 ? 0 : std::min(j - 1, params_.size() - 1);
            return params_[j];
        }
        }
        return 0.0;
    }

    /// Upper bound of the density on [a, b], used as a rejection envelope.
    double sup(double a, double b) const {
        a = std::max(a, lo_);
        b = std::min(b, hi_);
        switch (family_) {
        case DensityFamily::uniform: return 1.0 / (hi_ - lo_);
        case DensityFamily::truncated_normal: return (*this)(std::clamp(params_[0], a, b));
        case DensityFamily::truncated_exponential: return std::max((*this)(a), (*this)(b));
        case DensityFamily::histogram: {
            double m = 0.0;
            for (std::size_t j = 0; j < params_.size(); ++j)
                if (edges_[j + 1] > a && edges_[j] < b) m = std::max(m, params_[j]);
            return m;
        }
        }
        return 0.0;
    }

    std::vector<double> breaks() const { return edges_; }

    template <class G>
    double integral(G&& g, double a, double b, const QuadratureOptions& opt = {}) const {
        a = std::max(a, lo_);
        b = std::min(b, hi_);
        if (!(b > a)) return 0.0;
        return integrate([&](double y) { return g(y) * (*this)(y); }, a, b, edges_, opt);
    }

    double probability(double a, double b) const {
        return integral([](double) { return 1.0; }, a, b);
    }

private:
    MarkDensity(DensityFamily f, double lo, double hi, std::vector<double> params)
        : family_(f), lo_(lo), hi_(hi), params_(std::move(params)) {
        if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo))
            throw Error(ErrorCode::InvalidParameter, "density support must be a finite interval");
        if (f == DensityFamily::truncated_normal) {
            if (params_.size() != 2 || !(params_[1] > 0.0))
                throw Error(ErrorCode::InvalidParameter, "truncated normal needs (mu, sd > 0)");
            const double s = params_[1] * std::sqrt(2.0);
            norm_ = 0.5 * (std::erf((hi - params_[0]) / s) - std::erf((lo - params_[0]) / s));
            if (!(norm_ > 0.0)) throw Error(ErrorCode::DensityNotNormalized, "truncation leaves no mass");
        } else if (f == DensityFamily::truncated_exponential) {
            if (params_.size() != 1 || !std::isfinite(params_[0]))
                throw Error(ErrorCode::InvalidParameter, "truncated exponential needs a finite rate");
            norm_ = -std::expm1(-params_[0] * (hi - lo));
        }
    }

    DensityFamily family_;
    double lo_, hi_;
    std::vector<double> params_;
    std::vector<double> edges_;
    double norm_ = 1.0;
};

/// One intensity per driver, shared by all stocks; loadings[i][m] is stock i's relative
/// jump when driver m fires.
struct DiscreteJumps {
    std::vector<TimeFunction> intensities;
    std::vector<std::vector<TimeFunction>> loadings;
};

/// Marks drawn from a time-invariant density at total rate total_intensity(t). Stock i
/// jumps by response[i](y), a polynomial in the mark (coefficients low to high); the
/// default response is the mark itself.
struct ContinuousJumps {
    MarkDensity density;
    TimeFunction total_intensity;
    std::vector<std::vector<double>> response;

    double respond(std::size_t i, double y) const {
        const std::vector<double>& c = response[i];
        double acc = 0.0;
        for (std::size_t k = c.size(); k-- > 0;) acc = acc * y + c[k];
        return acc;
    }

    /// E_f[g_i(Y) | Y in [a, b)].
    double conditional_mean(std::size_t i, double a, double b) const {
        const double p = density.probability(a, b);
        return density.integral([&](double y) { return respond(i, y); }, a, b) / p;
    }
};

struct Stock {
    double s0 = 1.0;
    TimeFunction alpha;
    std::vector<TimeFunction> sigma;
};

struct MarketSpec {
    double horizon = 1.0;
    TimeFunction rate;
    std::size_t brownians = 0;
    std::vector<Stock> stocks;
    std::variant<DiscreteJumps, ContinuousJumps> jumps;

    std::size_t n() const noexcept { return stocks.size(); }
    bool is_discrete() const noexcept { return std::holds_alternative<DiscreteJumps>(jumps); }
    const DiscreteJumps& discrete() const { return std::get<DiscreteJumps>(jumps); }
    const ContinuousJumps& continuous() const { return std::get<ContinuousJumps>(jumps); }
    std::size_t drivers() const { return is_discrete() ? discrete().intensities.size() : 1; }

    /// Every coefficient function, for grid construction.
    std::vector<TimeFunction> coefficients() const {
        std::vector<TimeFunction> out{rate};
        for (const Stock& s : stocks) {
            out.push_back(s.alpha);
            out.insert(out.end(), s.sigma.begin(), s.sigma.end());
        }
        if (is_discrete()) {
            const DiscreteJumps& d = discrete();
            out.insert(out.end(), d.intensities.begin(), d.intensities.end());
            for (const auto& row : d.loadings) out.insert(out.end(), row.begin(), row.end());
        } else {
            out.push_back(continuous().total_intensity);
        }
        return out;
    }
};

struct Violation {
    ErrorCode code;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const noexcept { return violations.empty(); }
};

namespace detail {

inline void check_domain(const TimeFunction& f, double horizon, const std::string& name,
                         std::vector<Violation>& out) {
    if (f.is_constant()) return;
    if (f.knots().front() > 0.0)
        out.push_back({ErrorCode::InvalidTimeFunction, name + " starts after t=0"});
    if (f.kind() == TimeFunction::Kind::samples && f.knots().back() < horizon)
        out.push_back({ErrorCode::InvalidTimeFunction, name + " samples end before the horizon"});
}

} // namespace detail

inline ValidationReport validate_market(const MarketSpec& spec) {
    ValidationReport rep;
    auto& v = rep.violations;
    const double T = spec.horizon;
    if (!(T > 0.0) || !std::isfinite(T)) {
        v.push_back({ErrorCode::InvalidParameter, "horizon must be positive"});
        return rep;
    }
    if (spec.stocks.empty()) v.push_back({ErrorCode::ShapeMismatch, "at least one stock required"});
    detail::check_domain(spec.rate, T, "rate", v);
    for (std::size_t i = 0; i < spec.n(); ++i) {
        const Stock& s = spec.stocks[i];
        const std::string tag = "stock " + std::to_string(i);
        if (!(s.s0 > 0.0) || !std::isfinite(s.s0)) v.push_back({ErrorCode::InvalidParameter, tag + ": s0 must be positive"});
        if (s.sigma.size() != spec.brownians)
            v.push_back({ErrorCode::ShapeMismatch, tag + ": sigma has " + std::to_string(s.sigma.size()) +
                                                       " columns, expected " + std::to_string(spec.brownians)});
        detail::check_domain(s.alpha, T, tag + " alpha", v);
        for (const TimeFunction& f : s.sigma) detail::check_domain(f, T, tag + " sigma", v);
    }
    if (spec.is_discrete()) {
        const DiscreteJumps& d = spec.discrete();
        const std::size_t M = d.intensities.size();
        for (std::size_t m = 0; m < M; ++m) {
            detail::check_domain(d.intensities[m], T, "intensity " + std::to_string(m), v);
            if (!(d.intensities[m].inf(0.0, T) > 0.0))
                v.push_back({ErrorCode::NonpositiveIntensity, "driver " + std::to_string(m) + " intensity not positive on [0,T]"});
        }
        if (d.loadings.size() != spec.n()) {
            v.push_back({ErrorCode::ShapeMismatch, "loadings must have one row per stock"});
        } else {
            for (std::size_t i = 0; i < spec.n(); ++i) {
                if (d.loadings[i].size() != M) {
                    v.push_back({ErrorCode::ShapeMismatch, "loadings row " + std::to_string(i) + " must have one entry per driver"});
                    continue;
                }
                for (std::size_t m = 0; m < M; ++m) {
                    detail::check_domain(d.loadings[i][m], T, "loading", v);
                    if (!(d.loadings[i][m].inf(0.0, T) > -1.0))
                        v.push_back({ErrorCode::JumpBelowFloor, "loading y[" + std::to_string(i) + "][" +
                                                                    std::to_string(m) + "] <= -1"});
                }
            }
        }
    } else {
        const ContinuousJumps& c = spec.continuous();
        const Interval B = c.density.support();
        detail::check_domain(c.total_intensity, T, "total intensity", v);
        if (!(B.lo > -1.0)) v.push_back({ErrorCode::JumpBelowFloor, "mark support must lie above -1"});
        if (!(c.total_intensity.inf(0.0, T) > 0.0))
            v.push_back({ErrorCode::NonpositiveIntensity, "total intensity not positive on [0,T]"});
        try {
            const double mass = c.density.probability(B.lo, B.hi);
            if (std::abs(mass - 1.0) > 1e-8)
                v.push_back({ErrorCode::DensityNotNormalized, "density integrates to " + std::to_string(mass)});
        } catch (const Error& e) {
            v.push_back({e.code(), e.what()});
        }
        if (c.response.size() != spec.n()) {
            v.push_back({ErrorCode::ShapeMismatch, "jump response must have one entry per stock"});
        } else {
            // polynomial responses are checked on a fine grid of the support
            constexpr int probes = 2048;
            for (std::size_t i = 0; i < spec.n(); ++i) {
                if (c.response[i].empty()) {
                    v.push_back({ErrorCode::ShapeMismatch, "empty jump response"});
                    continue;
                }
                for (int k = 0; k <= probes; ++k) {
                    const double y = B.lo + (B.hi - B.lo) * k / probes;
                    if (!(c.respond(i, y) > -1.0)) {
                        v.push_back({ErrorCode::JumpBelowFloor, "stock " + std::to_string(i) + " jump response <= -1"});
                        break;
                    }
                }
            }
        }
    }
    return rep;
}

/// Sum over drivers of loading times intensity for stock i at time t.
inline double compensator_drift(const MarketSpec& spec, std::size_t i, double t) {
    if (spec.is_discrete()) {
        const DiscreteJumps& d = spec.discrete();
        double acc = 0.0;
        for (std::size_t m = 0; m < d.intensities.size(); ++m) acc += d.loadings[i][m](t) * d.intensities[m](t);
        return acc;
    }
    const ContinuousJumps& c = spec.continuous();
    const double mean = c.density.integral([&](double y) { return c.respond(i, y); }, c.density.lo(), c.density.hi());
    return c.total_intensity(t) * mean;
}

inline double cumulative_intensity(const TimeFunction& f, double s, double t) {
    if (!(s <= t) || !(s >= 0.0)) throw Error(ErrorCode::DomainError, "need 0 <= s <= t");
    return f.integral(s, t);
}

} // namespace emmkit
