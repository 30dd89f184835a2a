#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "emmkit/error.hpp"

namespace emmkit {

struct QuadratureOptions {
    double abs_tol = 1e-10;
    int max_depth = 40;
    int initial_panels = 16;
};

namespace detail {

template <class F>
double simpson_step(F& f, double a, double fa, double m, double fm, double b, double fb,
                    double whole, double tol, int depth, bool& failed) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    if (depth <= 0) {
        failed = true;
        return left + right + delta / 15.0;
    }
    return simpson_step(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1, failed) +
           simpson_step(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1, failed);
}

} // namespace detail

/// Adaptive Simpson on [a, b]. The tolerance is split evenly over the initial panels.
template <class F>
double adaptive_simpson(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
    if (a == b) return 0.0;
    if (a > b) return -adaptive_simpson(f, b, a, opt);
    const int panels = std::max(1, opt.initial_panels);
    const double h = (b - a) / panels;
    const double tol = opt.abs_tol / panels;
    bool failed = false;
    double total = 0.0;
    double x0 = a;
    double f0 = f(x0);
    for (int k = 0; k < panels; ++k) {
        const double x1 = (k + 1 == panels) ? b : a + (k + 1) * h;
        const double xm = 0.5 * (x0 + x1);
        const double fm = f(xm);
        const double f1 = f(x1);
        const double whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        total += detail::simpson_step(f, x0, f0, xm, fm, x1, f1, whole, tol, opt.max_depth, failed);
        x0 = x1;
        f0 = f1;
    }
    if (failed || !std::isfinite(total))
        throw Error(ErrorCode::QuadratureFailure, "integrand not resolved to tolerance");
    return total;
}

/// Integrates over [a, b], splitting at breakpoints so kinks and jumps sit on panel edges.
template <class F>
double integrate(F&& f, double a, double b, const std::vector<double>& breaks,
                 const QuadratureOptions& opt = {}) {
    if (a == b) return 0.0;
    if (a > b) return -integrate(f, b, a, breaks, opt);
    std::vector<double> pts{a};
    for (double x : breaks)
        if (x > a && x < b) pts.push_back(x);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    QuadratureOptions sub = opt;
    sub.abs_tol = opt.abs_tol / static_cast<double>(pts.size() - 1);
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double lo = pts[k];
        const double hi = pts[k + 1];
        // right end is read as a left limit so right-continuous jumps stay out of this panel
        const double hi_in = std::nextafter(hi, lo);
        auto g = [&](double x) { return f(x >= hi ? hi_in : x); };
        total += adaptive_simpson(g, lo, hi, sub);
    }
    return total;
}

} // namespace emmkit
