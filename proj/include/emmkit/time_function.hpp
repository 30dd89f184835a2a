#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "emmkit/error.hpp"

namespace emmkit {

/// Deterministic coefficient of time: a constant, a right-continuous step function,
/// or linear interpolation through samples (flat beyond the end samples).
class TimeFunction {
public:
    enum class Kind { constant, piecewise, samples };

    TimeFunction(double c = 0.0) : kind_(Kind::constant), v_{c} {
        if (!std::isfinite(c)) throw Error(ErrorCode::InvalidTimeFunction, "non-finite constant");
    }

    static TimeFunction constant(double c) { return TimeFunction(c); }

    /// v[j] holds on [t[j], t[j+1]); the last value extends to the horizon.
    static TimeFunction piecewise(std::vector<double> t, std::vector<double> v) {
        return TimeFunction(Kind::piecewise, std::move(t), std::move(v));
    }

    static TimeFunction samples(std::vector<double> t, std::vector<double> v) {
        return TimeFunction(Kind::samples, std::move(t), std::move(v));
    }

    Kind kind() const noexcept { return kind_; }
    bool is_constant() const noexcept { return kind_ == Kind::constant; }
    const std::vector<double>& knots() const noexcept { return t_; }
    const std::vector<double>& values() const noexcept { return v_; }

    double operator()(double t) const {
        switch (kind_) {
        case Kind::constant: return v_[0];
        case Kind::piecewise: return v_[segment(t)];
        case Kind::samples: {
            if (t <= t_.front()) return v_.front();
            if (t >= t_.back()) return v_.back();
            const std::size_t j = segment(t);
            const double w = (t - t_[j]) / (t_[j + 1] - t_[j]);
            return v_[j] + w * (v_[j + 1] - v_[j]);
        }
        }
        return 0.0;
    }

    /// Exact integral over [a, b] for all three kinds.
    double integral(double a, double b) const {
        if (a == b) return 0.0;
        if (a > b) return -integral(b, a);
        if (kind_ == Kind::constant) return v_[0] * (b - a);
        std::vector<double> pts{a};
        for (double x : t_)
            if (x > a && x < b) pts.push_back(x);
        pts.push_back(b);
        double total = 0.0;
        for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
            const double lo = pts[k], hi = pts[k + 1];
            if (kind_ == Kind::piecewise) {
                total += v_[segment(lo)] * (hi - lo);
            } else {
                total += 0.5 * ((*this)(lo) + (*this)(hi)) * (hi - lo);
            }
        }
        return total;
    }

    double sup(double a, double b) const { return extreme(a, b, true); }
    double inf(double a, double b) const { return extreme(a, b, false); }

    TimeFunction scaled(double c) const {
        TimeFunction out = *this;
        for (double& x : out.v_) x *= c;
        return out;
    }

    friend bool operator==(const TimeFunction& x, const TimeFunction& y) {
        return x.kind_ == y.kind_ && x.t_ == y.t_ && x.v_ == y.v_;
    }

private:
    TimeFunction(Kind k, std::vector<double> t, std::vector<double> v)
        : kind_(k), t_(std::move(t)), v_(std::move(v)) {
        if (t_.empty() || t_.size() != v_.size())
            throw Error(ErrorCode::InvalidTimeFunction, "knots and values must be nonempty and equal length");
        for (std::size_t j = 0; j < t_.size(); ++j) {
            if (!std::isfinite(t_[j]) || !std::isfinite(v_[j]))
                throw Error(ErrorCode::InvalidTimeFunction, "non-finite knot or value");
            if (j > 0 && !(t_[j] > t_[j - 1]))
                throw Error(ErrorCode::InvalidTimeFunction, "knots must be strictly increasing");
        }
    }

    std::size_t segment(double t) const {
        auto it = std::upper_bound(t_.begin(), t_.end(), t);
        if (it == t_.begin()) return 0;
        return static_cast<std::size_t>(it - t_.begin()) - 1;
    }

    double extreme(double a, double b, bool upper) const {
        if (kind_ == Kind::constant) return v_[0];
        auto pick = [upper](double x, double y) { return upper ? std::max(x, y) : std::min(x, y); };
        double e = (*this)(a);
        e = pick(e, (*this)(b));
        for (std::size_t j = 0; j < t_.size(); ++j)
            if (t_[j] > a && t_[j] < b) e = pick(e, v_[j]);
        return e;
    }

    Kind kind_;
    std::vector<double> t_;
    std::vector<double> v_;
};

/// Collects the node structure of a set of time functions over [0, T] and builds
/// results of the same kind: constant if every input is, step functions on merged
/// breakpoints if none is interpolated, and interpolated samples otherwise.
class TimeGrid {
public:
    explicit TimeGrid(double horizon, std::size_t points = 256) : horizon_(horizon), points_(points) {
        if (!(horizon > 0.0)) throw Error(ErrorCode::InvalidParameter, "horizon must be positive");
        if (points < 2) throw Error(ErrorCode::InvalidParameter, "grid needs at least two points");
    }

    void include(const TimeFunction& f) {
        if (f.kind() == TimeFunction::Kind::constant) return;
        if (f.kind() == TimeFunction::Kind::samples) kind_ = TimeFunction::Kind::samples;
        else if (kind_ == TimeFunction::Kind::constant) kind_ = TimeFunction::Kind::piecewise;
        for (double x : f.knots())
            if (x > 0.0 && x < horizon_) knots_.push_back(x);
    }

    template <class Range>
    void include_all(const Range& fs) {
        for (const auto& f : fs) include(f);
    }

    double horizon() const noexcept { return horizon_; }
    std::size_t points() const noexcept { return points_; }
    TimeFunction::Kind kind() const noexcept { return kind_; }

    /// Evaluation nodes. Step-function results are exact when evaluated at these points.
    std::vector<double> nodes() const {
        std::vector<double> out{0.0};
        if (kind_ == TimeFunction::Kind::constant) {
            out.push_back(horizon_);
            return out;
        }
        out.insert(out.end(), knots_.begin(), knots_.end());
        if (kind_ == TimeFunction::Kind::samples) {
            for (std::size_t k = 1; k < points_; ++k)
                out.push_back(horizon_ * static_cast<double>(k) / static_cast<double>(points_ - 1));
        }
        out.push_back(horizon_);
        std::sort(out.begin(), out.end());
        const double tol = 1e-12 * horizon_;
        std::vector<double> merged;
        for (double x : out)
            if (merged.empty() || x - merged.back() > tol) merged.push_back(x);
        if (kind_ == TimeFunction::Kind::piecewise && merged.back() >= horizon_ - tol && merged.size() > 1)
            merged.back() = horizon_;
        return merged;
    }

    /// Builds a function from values at nodes() (same order).
    TimeFunction from_values(const std::vector<double>& nodes, const std::vector<double>& values) const {
        switch (kind_) {
        case TimeFunction::Kind::constant: return TimeFunction(values.front());
        case TimeFunction::Kind::piecewise: {
            // the node at the horizon repeats the last step and is dropped
            std::vector<double> t(nodes.begin(), nodes.end() - 1);
            std::vector<double> v(values.begin(), values.end() - 1);
            return TimeFunction::piecewise(std::move(t), std::move(v));
        }
        case TimeFunction::Kind::samples: return TimeFunction::samples(nodes, values);
        }
        return TimeFunction(values.front());
    }

    template <class F>
    TimeFunction tabulate(F&& f) const {
        const std::vector<double> ns = nodes();
        std::vector<double> vs;
        vs.reserve(ns.size());
        for (double t : ns) vs.push_back(f(t));
        return from_values(ns, vs);
    }

private:
    double horizon_;
    std::size_t points_;
    TimeFunction::Kind kind_ = TimeFunction::Kind::constant;
    std::vector<double> knots_;
};

/// Merged breakpoints of several functions inside (a, b).
inline std::vector<double> breakpoints(const std::vector<const TimeFunction*>& fs, double a, double b) {
    std::vector<double> out;
    for (const TimeFunction* f : fs)
        for (double x : f->knots())
            if (x > a && x < b) out.push_back(x);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace emmkit
