#include "hydroens/learners/svr.hpp"

#include <cmath>
#include <limits>
#include <list>
#include <utility>
#include <vector>

#include "hydroens/errors.hpp"

namespace hydroens {
namespace {

constexpr double kTau = 1e-12;

// LRU cache of kernel columns.
class ColumnCache {
public:
    explicit ColumnCache(const SvrDualProblem& problem)
        : problem_(problem),
          capacity_(std::max<std::size_t>(
              2, problem.cache_bytes / (sizeof(double) * static_cast<std::size_t>(std::max<Eigen::Index>(problem.size, 1))))),
          where_(static_cast<std::size_t>(problem.size), entries_.end()) {}

    const Eigen::VectorXd& get(Eigen::Index i) {
        auto& slot = where_[static_cast<std::size_t>(i)];
        if (slot != entries_.end()) {
            entries_.splice(entries_.begin(), entries_, slot);
            return entries_.front().second;
        }
        Eigen::VectorXd column;
        if (entries_.size() >= capacity_) {
            auto& victim = entries_.back();
            where_[static_cast<std::size_t>(victim.first)] = entries_.end();
            column = std::move(victim.second);
            entries_.pop_back();
        }
        column.resize(problem_.size);
        problem_.kernel_column(i, column);
        entries_.emplace_front(i, std::move(column));
        slot = entries_.begin();
        return entries_.front().second;
    }

private:
    using Entry = std::pair<Eigen::Index, Eigen::VectorXd>;
    const SvrDualProblem& problem_;
    std::size_t capacity_;
    std::list<Entry> entries_;
    std::vector<std::list<Entry>::iterator> where_;
};

}  // namespace

void validate(const SvrSpec& spec) {
    if (!(spec.box_constraint > 0.0)) throw ConfigError("SVR box constraint must be > 0");
    if (!(spec.epsilon >= 0.0)) throw ConfigError("SVR epsilon must be >= 0");
    if (spec.kernel == SvrKernel::polynomial && !(spec.poly_order >= 2.0 && spec.poly_order <= 2.97))
        throw ConfigError("SVR polynomial order must lie in [2.00, 2.97]");
    if (!(spec.tolerance > 0.0) || spec.max_iterations < 1) throw ConfigError("SVR solver settings invalid");
}

double svr_kernel(const SvrSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& u,
                  const Eigen::Ref<const Eigen::VectorXd>& v) {
    const double dot = u.dot(v);
    if (spec.kernel == SvrKernel::linear) return dot;
    return std::pow(std::max(1.0 + dot, 0.0), spec.poly_order);
}

double svr_dual_objective(const Eigen::Ref<const Eigen::MatrixXd>& K, const Eigen::Ref<const Eigen::VectorXd>& target,
                          double epsilon, const Eigen::Ref<const Eigen::VectorXd>& alpha_plus,
                          const Eigen::Ref<const Eigen::VectorXd>& alpha_minus) {
    const Eigen::VectorXd beta = alpha_plus - alpha_minus;
    return 0.5 * beta.dot(K * beta) + epsilon * (alpha_plus.sum() + alpha_minus.sum()) - target.dot(beta);
}

SvrDualSolution solve_svr_dual(const SvrDualProblem& problem) {
    const Eigen::Index l = problem.size;
    const Eigen::Index n = 2 * l;
    if (problem.target.size() != l || problem.upper.size() != l || problem.kernel_diagonal.size() != l)
        throw ShapeError("SVR dual problem has inconsistent sizes");

    // Index t < l is a+_t (sign +1); t >= l is a-_{t-l} (sign -1).
    auto sign = [l](Eigen::Index t) { return t < l ? 1.0 : -1.0; };
    auto base = [l](Eigen::Index t) { return t < l ? t : t - l; };

    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd p(n), C(n), QD(n);
    for (Eigen::Index t = 0; t < l; ++t) {
        p(t) = problem.epsilon - problem.target(t);
        p(t + l) = problem.epsilon + problem.target(t);
        C(t) = C(t + l) = problem.upper(t);
        QD(t) = QD(t + l) = problem.kernel_diagonal(t);
    }
    Eigen::VectorXd G = p;
    ColumnCache cache(problem);

    auto upper_bound = [&](Eigen::Index t) { return alpha(t) >= C(t); };
    auto lower_bound = [&](Eigen::Index t) { return alpha(t) <= 0.0; };

    SvrDualSolution sol;
    long iter = 0;
    double gap = std::numeric_limits<double>::infinity();
    for (;; ++iter) {
        // Working-set selection (second order).
        double gmax = -std::numeric_limits<double>::infinity();
        Eigen::Index i = -1;
        for (Eigen::Index t = 0; t < n; ++t) {
            if (sign(t) > 0) {
                if (!upper_bound(t) && -G(t) >= gmax) { gmax = -G(t); i = t; }
            } else {
                if (!lower_bound(t) && G(t) >= gmax) { gmax = G(t); i = t; }
            }
        }
        double gmax2 = -std::numeric_limits<double>::infinity();
        Eigen::Index j = -1;
        double best = std::numeric_limits<double>::infinity();
        const Eigen::VectorXd* Ki = i >= 0 ? &cache.get(base(i)) : nullptr;
        const double si = i >= 0 ? sign(i) : 0.0;
        for (Eigen::Index t = 0; t < n; ++t) {
            const double st = sign(t);
            if (st > 0) {
                if (lower_bound(t)) continue;
                if (G(t) >= gmax2) gmax2 = G(t);
                const double grad_diff = gmax + G(t);
                if (Ki && grad_diff > 0) {
                    const double qit = si * st * (*Ki)(base(t));
                    double quad = QD(i) + QD(t) - 2.0 * si * qit;
                    if (quad <= 0) quad = kTau;
                    const double obj = -(grad_diff * grad_diff) / quad;
                    if (obj <= best) { best = obj; j = t; }
                }
            } else {
                if (upper_bound(t)) continue;
                if (-G(t) >= gmax2) gmax2 = -G(t);
                const double grad_diff = gmax - G(t);
                if (Ki && grad_diff > 0) {
                    const double qit = si * st * (*Ki)(base(t));
                    double quad = QD(i) + QD(t) + 2.0 * si * qit;
                    if (quad <= 0) quad = kTau;
                    const double obj = -(grad_diff * grad_diff) / quad;
                    if (obj <= best) { best = obj; j = t; }
                }
            }
        }
        gap = gmax + gmax2;
        if (i < 0 || j < 0 || gap < problem.tolerance) break;
        if (iter >= problem.max_iterations)
            throw ConvergenceError("SVR solver did not converge in " + std::to_string(problem.max_iterations) +
                                       " iterations (KKT gap " + std::to_string(gap) + ")",
                                   gap);

        // Ki may have been evicted by the lookup below; copy it first.
        const Eigen::VectorXd Kcol_i = cache.get(base(i));
        const Eigen::VectorXd& Kcol_j = cache.get(base(j));
        const double sj = sign(j);
        const double qij = si * sj * Kcol_i(base(j));
        const double Ci = C(i), Cj = C(j);
        const double old_ai = alpha(i), old_aj = alpha(j);

        if (si != sj) {
            double quad = QD(i) + QD(j) + 2.0 * qij;
            if (quad <= 0) quad = kTau;
            const double delta = (-G(i) - G(j)) / quad;
            const double diff = alpha(i) - alpha(j);
            alpha(i) += delta;
            alpha(j) += delta;
            if (diff > 0) {
                if (alpha(j) < 0) { alpha(j) = 0; alpha(i) = diff; }
            } else {
                if (alpha(i) < 0) { alpha(i) = 0; alpha(j) = -diff; }
            }
            if (diff > Ci - Cj) {
                if (alpha(i) > Ci) { alpha(i) = Ci; alpha(j) = Ci - diff; }
            } else {
                if (alpha(j) > Cj) { alpha(j) = Cj; alpha(i) = Cj + diff; }
            }
        } else {
            double quad = QD(i) + QD(j) - 2.0 * qij;
            if (quad <= 0) quad = kTau;
            const double delta = (G(i) - G(j)) / quad;
            const double sum = alpha(i) + alpha(j);
            alpha(i) -= delta;
            alpha(j) += delta;
            if (sum > Ci) {
                if (alpha(i) > Ci) { alpha(i) = Ci; alpha(j) = sum - Ci; }
            } else {
                if (alpha(j) < 0) { alpha(j) = 0; alpha(i) = sum; }
            }
            if (sum > Cj) {
                if (alpha(j) > Cj) { alpha(j) = Cj; alpha(i) = sum - Cj; }
            } else {
                if (alpha(i) < 0) { alpha(i) = 0; alpha(j) = sum; }
            }
        }

        const double dai = alpha(i) - old_ai;
        const double daj = alpha(j) - old_aj;
        for (Eigen::Index t = 0; t < n; ++t) {
            const double st = sign(t);
            const Eigen::Index bt = base(t);
            G(t) += si * st * Kcol_i(bt) * dai + sj * st * Kcol_j(bt) * daj;
        }
    }

    // Bias from free variables, else the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    int n_free = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        const double yG = sign(t) * G(t);
        if (upper_bound(t)) {
            if (sign(t) < 0) ub = std::min(ub, yG); else lb = std::max(lb, yG);
        } else if (lower_bound(t)) {
            if (sign(t) > 0) ub = std::min(ub, yG); else lb = std::max(lb, yG);
        } else {
            ++n_free;
            sum_free += yG;
        }
    }
    const double rho = n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);

    sol.alpha_plus = alpha.head(l);
    sol.alpha_minus = alpha.tail(l);
    sol.bias = -rho;
    sol.objective = 0.5 * alpha.dot(G + p);
    sol.kkt_gap = gap;
    sol.iterations = iter;
    return sol;
}

SvrModel fit_svr(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                 const Eigen::Ref<const Eigen::VectorXd>& w, const SvrSpec& spec) {
    validate(spec);
    validate_training_data(X, y, w);
    const auto rows = positive_rows(w);
    const Eigen::MatrixXd Xp = select_rows(X, rows);
    const Eigen::VectorXd yp = select_values(y, rows);
    const Eigen::VectorXd wp = select_values(w, rows);

    SvrModel model;
    model.spec = spec;
    model.training_rows = static_cast<Eigen::Index>(rows.size());
    model.scaler = MinMaxScaler::fit(Xp);
    const Eigen::MatrixXd Xs = model.scaler.apply(Xp);

    double center = 0.0, scale = 1.0;
    if (spec.standardize_target) {
        center = yp.mean();
        const double sd = std::sqrt((yp.array() - center).square().mean());
        if (sd > 0.0) scale = sd;
    }

    SvrDualProblem problem;
    problem.size = Xs.rows();
    problem.target = (yp.array() - center) / scale;
    problem.upper = spec.box_constraint * wp / scale;
    problem.epsilon = spec.epsilon / scale;
    problem.tolerance = spec.tolerance;
    problem.max_iterations = spec.max_iterations;
    problem.kernel_diagonal.resize(problem.size);
    for (Eigen::Index t = 0; t < problem.size; ++t)
        problem.kernel_diagonal(t) = svr_kernel(spec, Xs.row(t).transpose(), Xs.row(t).transpose());
    problem.kernel_column = [&Xs, &spec](Eigen::Index i, Eigen::Ref<Eigen::VectorXd> out) {
        out.noalias() = Xs * Xs.row(i).transpose();
        if (spec.kernel == SvrKernel::polynomial)
            out = (out.array() + 1.0).max(0.0).pow(spec.poly_order).matrix();
    };

    const SvrDualSolution sol = solve_svr_dual(problem);
    const Eigen::VectorXd beta = sol.coefficients();
    std::vector<Eigen::Index> sv;
    for (Eigen::Index t = 0; t < beta.size(); ++t)
        if (beta(t) != 0.0) sv.push_back(t);
    model.support = select_rows(Xs, sv);
    model.coef = scale * select_values(beta, sv);
    model.bias = scale * sol.bias + center;
    model.objective = scale * scale * sol.objective;
    model.kkt_gap = sol.kkt_gap;
    model.iterations = sol.iterations;
    return model;
}

Eigen::VectorXd predict_svr(const SvrModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X) {
    Eigen::VectorXd out = Eigen::VectorXd::Constant(X.rows(), model.bias);
    if (X.rows() == 0 || model.support.rows() == 0) return out;
    const Eigen::MatrixXd Xs = model.scaler.apply(X);
    Eigen::MatrixXd K = Xs * model.support.transpose();
    if (model.spec.kernel == SvrKernel::polynomial)
        K = (K.array() + 1.0).max(0.0).pow(model.spec.poly_order).matrix();
    out += K * model.coef;
    return out;
}

}  // namespace hydroens
