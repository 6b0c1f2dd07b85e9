#pragma once

// Independent reference computations shared by the unit and acceptance tests.
// None of these call into the library's solvers.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// 1/2 b'Kb + eps |b|_1 - z'b.
inline double svr_dual_objective(const Eigen::MatrixXd& K, const Eigen::VectorXd& z, double eps,
                                 const Eigen::VectorXd& b) {
    return 0.5 * b.dot(K * b) + eps * b.cwiseAbs().sum() - z.dot(b);
}

/// Minimum of the SVR dual by enumerating, for every sample, the five KKT states
/// {-C, free negative, 0, free positive, +C}. Free states satisfy
/// (K b)_t + bias = z_t -/+ eps, closed by sum(b) = 0. Exponential: N <= 7.
inline double svr_dual_minimum(const Eigen::MatrixXd& K, const Eigen::VectorXd& z, const Eigen::VectorXd& C,
                               double eps) {
    const Eigen::Index n = z.size();
    long states = 1;
    for (Eigen::Index i = 0; i < n; ++i) states *= 5;
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> s(static_cast<std::size_t>(n));
    for (long code = 0; code < states; ++code) {
        long c = code;
        std::vector<Eigen::Index> free;
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int st = static_cast<int>(c % 5) - 2;
            s[static_cast<std::size_t>(i)] = st;
            c /= 5;
            if (st == -2) b(i) = -C(i);
            if (st == 2) b(i) = C(i);
            if (st == -1 || st == 1) free.push_back(i);
        }
        if (!free.empty()) {
            const auto f = static_cast<Eigen::Index>(free.size());
            Eigen::MatrixXd A = Eigen::MatrixXd::Zero(f + 1, f + 1);
            Eigen::VectorXd r(f + 1);
            for (Eigen::Index p = 0; p < f; ++p) {
                const Eigen::Index t = free[static_cast<std::size_t>(p)];
                for (Eigen::Index q = 0; q < f; ++q) A(p, q) = K(t, free[static_cast<std::size_t>(q)]);
                A(p, f) = 1.0;
                A(f, p) = 1.0;
                r(p) = z(t) - eps * s[static_cast<std::size_t>(t)] - K.row(t).dot(b);
            }
            r(f) = -b.sum();
            Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
            if (!lu.isInvertible()) continue;
            const Eigen::VectorXd x = lu.solve(r);
            bool ok = true;
            for (Eigen::Index p = 0; p < f && ok; ++p) {
                const Eigen::Index t = free[static_cast<std::size_t>(p)];
                const double v = x(p);
                ok = s[static_cast<std::size_t>(t)] > 0 ? (v >= -1e-12 && v <= C(t) + 1e-12)
                                                        : (v <= 1e-12 && v >= -C(t) - 1e-12);
                b(t) = v;
            }
            if (!ok) continue;
        } else if (std::abs(b.sum()) > 1e-12) {
            continue;
        }
        best = std::min(best, svr_dual_objective(K, z, eps, b));
    }
    return best;
}

/// Weighted ridge with an unpenalized intercept, solved as the least-squares
/// problem [sqrt(w) [1 Phi]; sqrt(lambda) [0 I]] (c, b) = [sqrt(w) y; 0] by
/// column-pivoting QR. Returns (c, b) stacked.
inline Eigen::VectorXd weighted_ridge(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                                      double lambda) {
    const Eigen::Index n = Phi.rows(), d = Phi.cols();
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n + d, d + 1);
    Eigen::VectorXd t = Eigen::VectorXd::Zero(n + d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sw = std::sqrt(w(i));
        Z(i, 0) = sw;
        Z.row(i).tail(d) = sw * Phi.row(i);
        t(i) = sw * y(i);
    }
    Z.bottomRightCorner(d, d).diagonal().setConstant(std::sqrt(lambda));
    return Z.colPivHouseholderQr().solve(t);
}

/// Mean silhouette straight from its definition, O(n^2).
inline double silhouette(const Eigen::MatrixXd& P, const std::vector<int>& labels) {
    const auto n = static_cast<std::size_t>(P.rows());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::map<int, std::pair<double, int>> by_label;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            auto& [sum, count] = by_label[labels[j]];
            sum += (P.row(static_cast<Eigen::Index>(i)) - P.row(static_cast<Eigen::Index>(j))).norm();
            ++count;
        }
        const auto& own = by_label[labels[i]];
        const double a = own.first / own.second;
        double b = std::numeric_limits<double>::infinity();
        for (const auto& [label, sc] : by_label)
            if (label != labels[i]) b = std::min(b, sc.first / sc.second);
        total += (b - a) / std::max(a, b);
    }
    return total / static_cast<double>(n);
}

/// sum_m a_m y_m / (|y_m| / N), written as a plain loop.
inline Eigen::VectorXd normalized_sum(const std::vector<Eigen::VectorXd>& outputs, const Eigen::VectorXd& a) {
    const Eigen::Index n = outputs.front().size();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (std::size_t m = 0; m < outputs.size(); ++m) {
        double ss = 0.0;
        for (Eigen::Index t = 0; t < n; ++t) ss += outputs[m](t) * outputs[m](t);
        const double d = std::sqrt(ss) / static_cast<double>(n);
        for (Eigen::Index t = 0; t < n; ++t) out(t) += a(static_cast<Eigen::Index>(m)) * outputs[m](t) / d;
    }
    return out;
}

}  // namespace oracle
