#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "emmkit/emm.hpp"
#include "emmkit/model.hpp"

namespace emmkit {

/// Row i: sum_j sigma_ij theta_j - sum_m y_im lambda_tilde_m = alpha_i - r - sum_m lambda_m y_im.
struct MprSystem {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    std::vector<std::string> unknowns;
    std::size_t brownians = 0;
    double t = 0.0;
};

enum class MarketTag { Complete, IncompleteArbitrageFree, Arbitrage };

inline const char* to_string(MarketTag t) {
    switch (t) {
    case MarketTag::Complete: return "Complete";
    case MarketTag::IncompleteArbitrageFree: return "IncompleteArbitrageFree";
    case MarketTag::Arbitrage: return "Arbitrage";
    }
    return "?";
}

/// solution is the unique solution when Complete, otherwise the minimum-norm
/// least-squares solution (flagged by minimum_norm).
struct MarketClassification {
    MarketTag tag = MarketTag::Arbitrage;
    double t = 0.0;
    Eigen::VectorXd solution;
    bool minimum_norm = false;
    std::size_t rank = 0;
    std::size_t nullspace_dim = 0;
    double residual = 0.0;
    bool intensities_valid = true;
    std::size_t brownians = 0;

    Eigen::VectorXd theta() const { return solution.head(static_cast<Eigen::Index>(brownians)); }
    Eigen::VectorXd lambda_tilde() const {
        return solution.tail(solution.size() - static_cast<Eigen::Index>(brownians));
    }
};

inline MprSystem assemble_mpr_system(const MarketSpec& spec, double t) {
    const std::size_t n = spec.n(), D = spec.brownians, M = spec.drivers();
    MprSystem sys;
    sys.t = t;
    sys.brownians = D;
    sys.a.setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(D + M));
    sys.b.setZero(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < D; ++j) sys.unknowns.push_back("theta[" + std::to_string(j) + "]");
    for (std::size_t m = 0; m < M; ++m) sys.unknowns.push_back("lambda_tilde[" + std::to_string(m) + "]");
    const double r = spec.rate(t);
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        for (std::size_t j = 0; j < D; ++j) sys.a(ii, static_cast<Eigen::Index>(j)) = spec.stocks[i].sigma[j](t);
        double rhs = spec.stocks[i].alpha(t) - r;
        if (spec.is_discrete()) {
            const DiscreteJumps& d = spec.discrete();
            for (std::size_t m = 0; m < M; ++m) {
                const double y = d.loadings[i][m](t);
                sys.a(ii, static_cast<Eigen::Index>(D + m)) = -y;
                rhs -= d.intensities[m](t) * y;
            }
        } else {
            // one unknown: the total intensity with the mark density held fixed
            const ContinuousJumps& c = spec.continuous();
            const double y = c.conditional_mean(i, c.density.lo(), c.density.hi());
            sys.a(ii, static_cast<Eigen::Index>(D)) = -y;
            rhs -= c.total_intensity(t) * y;
        }
        sys.b(ii) = rhs;
    }
    return sys;
}

namespace detail {

inline double inf_norm(const Eigen::MatrixXd& a) {
    return a.rows() == 0 ? 0.0 : a.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Row echelon rank with partial pivoting and an absolute pivot threshold.
inline std::size_t echelon_rank(Eigen::MatrixXd a, double threshold) {
    const Eigen::Index rows = a.rows(), cols = a.cols();
    Eigen::Index r = 0;
    for (Eigen::Index c = 0; c < cols && r < rows; ++c) {
        Eigen::Index p = r;
        for (Eigen::Index k = r + 1; k < rows; ++k)
            if (std::abs(a(k, c)) > std::abs(a(p, c))) p = k;
        if (std::abs(a(p, c)) <= threshold) continue;
        a.row(p).swap(a.row(r));
        for (Eigen::Index k = r + 1; k < rows; ++k) {
            const double f = a(k, c) / a(r, c);
            a.row(k) -= f * a.row(r);
        }
        ++r;
    }
    return static_cast<std::size_t>(r);
}

/// Gaussian elimination with partial pivoting for a nonsingular square system.
inline Eigen::VectorXd lu_solve(Eigen::MatrixXd a, Eigen::VectorXd b) {
    const Eigen::Index n = a.rows();
    for (Eigen::Index c = 0; c < n; ++c) {
        Eigen::Index p = c;
        for (Eigen::Index k = c + 1; k < n; ++k)
            if (std::abs(a(k, c)) > std::abs(a(p, c))) p = k;
        a.row(p).swap(a.row(c));
        std::swap(b(p), b(c));
        for (Eigen::Index k = c + 1; k < n; ++k) {
            const double f = a(k, c) / a(c, c);
            a.row(k).tail(n - c) -= f * a.row(c).tail(n - c);
            b(k) -= f * b(c);
        }
    }
    Eigen::VectorXd x(n);
    for (Eigen::Index k = n; k-- > 0;) {
        double s = b(k);
        for (Eigen::Index j = k + 1; j < n; ++j) s -= a(k, j) * x(j);
        x(k) = s / a(k, k);
    }
    return x;
}

} // namespace detail

inline MarketClassification solve_mpr(const MprSystem& sys) {
    MarketClassification out;
    out.t = sys.t;
    out.brownians = sys.brownians;
    const std::size_t rows = static_cast<std::size_t>(sys.a.rows());
    const std::size_t cols = static_cast<std::size_t>(sys.a.cols());
    const double threshold = 1e-12 * detail::inf_norm(sys.a);
    out.rank = detail::echelon_rank(sys.a, threshold);
    out.nullspace_dim = cols - out.rank;
    if (rows == cols && out.rank == cols) {
        out.solution = detail::lu_solve(sys.a, sys.b);
    } else if (cols == 0) {
        out.solution = Eigen::VectorXd::Zero(0);
    } else {
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(sys.a);
        cod.setThreshold(1e-12);
        out.solution = cod.solve(sys.b);
        out.minimum_norm = true;
    }
    out.residual = cols == 0 ? (rows == 0 ? 0.0 : sys.b.cwiseAbs().maxCoeff())
                             : (sys.a * out.solution - sys.b).cwiseAbs().maxCoeff();
    if (rows == 0) out.residual = 0.0;
    const double bnorm = rows == 0 ? 0.0 : sys.b.cwiseAbs().maxCoeff();
    const bool consistent = out.residual < 1e-9 * (1.0 + bnorm);
    if (!consistent) out.tag = MarketTag::Arbitrage;
    else if (out.nullspace_dim == 0) out.tag = MarketTag::Complete;
    else out.tag = MarketTag::IncompleteArbitrageFree;
    if (out.tag == MarketTag::Complete) {
        out.minimum_norm = false;
        const Eigen::VectorXd lt = out.lambda_tilde();
        for (Eigen::Index m = 0; m < lt.size(); ++m)
            if (!(lt(m) > 0.0)) out.intensities_valid = false;
    }
    return out;
}

inline std::vector<MarketClassification> classify_over_grid(const MarketSpec& spec, const std::vector<double>& grid) {
    std::vector<MarketClassification> out;
    out.reserve(grid.size());
    for (double t : grid) out.push_back(solve_mpr(assemble_mpr_system(spec, t)));
    return out;
}

inline TimeGrid market_grid(const MarketSpec& spec, std::size_t points = 256) {
    TimeGrid g(spec.horizon, points);
    g.include_all(spec.coefficients());
    return g;
}

/// The unique EMM of a complete market, solved at every node of the grid.
inline Emm solve_unique_emm(const MarketSpec& spec, const TimeGrid& grid) {
    const std::vector<double> nodes = grid.nodes();
    const std::vector<MarketClassification> cls = classify_over_grid(spec, nodes);
    for (const MarketClassification& c : cls) {
        if (c.tag != MarketTag::Complete) {
            std::ostringstream os;
            os << "market is " << to_string(c.tag) << " at t=" << c.t << " (rank " << c.rank << ", nullspace "
               << c.nullspace_dim << ")";
            throw Error(ErrorCode::NotComplete, os.str());
        }
        if (!c.intensities_valid) {
            std::ostringstream os;
            os << "unique solution has a nonpositive intensity at t=" << c.t;
            throw Error(ErrorCode::InvalidIntensities, os.str());
        }
    }
    const std::size_t D = spec.brownians, M = spec.drivers();
    auto column = [&](std::size_t k) {
        std::vector<double> v;
        for (const MarketClassification& c : cls) v.push_back(c.solution(static_cast<Eigen::Index>(k)));
        return grid.from_values(nodes, v);
    };
    Emm e;
    for (std::size_t j = 0; j < D; ++j) e.theta.push_back(column(j));
    if (spec.is_discrete()) {
        for (std::size_t m = 0; m < M; ++m) e.lambda_tilde.push_back(column(D + m));
    } else {
        CellIntensities ci;
        ci.cells = {spec.continuous().density.support()};
        ci.intensity = {column(D)};
        e.density = std::move(ci);
    }
    e.provenance = "unique EMM of a complete market";
    return e;
}

inline Emm solve_unique_emm(const MarketSpec& spec, std::size_t points = 256) {
    return solve_unique_emm(spec, market_grid(spec, points));
}

} // namespace emmkit
