#pragma once

#include <functional>

#include <Eigen/Core>

#include "hydroens/learners/common.hpp"

namespace hydroens {

enum class SvrKernel { linear, polynomial };

struct SvrSpec {
    double box_constraint = 1.0;
    double epsilon = 0.1;
    SvrKernel kernel = SvrKernel::polynomial;
    double poly_order = 2.0;  // real-valued, useful range [2.00, 2.97]
    double tolerance = 1e-6;
    long max_iterations = 100000;
    /// Solve on (y - mean) / std with epsilon and C rescaled to match; the fitted
    /// model is expressed in original units either way.
    bool standardize_target = true;
};

/// Throws ConfigError for out-of-range fields.
void validate(const SvrSpec& spec);

/// k(u, v) = u.v (linear) or max(1 + u.v, 0)^d (polynomial).
double svr_kernel(const SvrSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& u,
                  const Eigen::Ref<const Eigen::VectorXd>& v);

/// epsilon-insensitive SVR dual with per-sample box constraints:
///   min 1/2 b'Kb + eps * sum(a+ + a-) - z'b,  b = a+ - a-,
///   sum(b) = 0,  0 <= a+_t, a-_t <= C_t.
struct SvrDualProblem {
    Eigen::Index size = 0;
    /// Writes column i of K into `out` (length `size`).
    std::function<void(Eigen::Index, Eigen::Ref<Eigen::VectorXd>)> kernel_column;
    Eigen::VectorXd kernel_diagonal;
    Eigen::VectorXd target;
    Eigen::VectorXd upper;  // C_t
    double epsilon = 0.1;
    double tolerance = 1e-6;
    long max_iterations = 100000;
    std::size_t cache_bytes = std::size_t{256} << 20;
};

struct SvrDualSolution {
    Eigen::VectorXd alpha_plus;
    Eigen::VectorXd alpha_minus;
    double bias = 0.0;
    double objective = 0.0;
    double kkt_gap = 0.0;  // max violating-pair gap at termination
    long iterations = 0;

    Eigen::VectorXd coefficients() const { return alpha_plus - alpha_minus; }
};

/// SMO with second-order working-set selection. Throws ConvergenceError when
/// the KKT gap is still above tolerance after max_iterations.
SvrDualSolution solve_svr_dual(const SvrDualProblem& problem);

/// Dual objective of a given coefficient split (for oracles and reports).
double svr_dual_objective(const Eigen::Ref<const Eigen::MatrixXd>& K, const Eigen::Ref<const Eigen::VectorXd>& target,
                          double epsilon, const Eigen::Ref<const Eigen::VectorXd>& alpha_plus,
                          const Eigen::Ref<const Eigen::VectorXd>& alpha_minus);

struct SvrModel {
    SvrSpec spec;
    MinMaxScaler scaler;
    Eigen::MatrixXd support;   // scaled support vectors (rows)
    Eigen::VectorXd coef;      // original target units
    double bias = 0.0;         // original target units
    double objective = 0.0;    // dual objective, original target units
    double kkt_gap = 0.0;      // solver units
    long iterations = 0;
    Eigen::Index training_rows = 0;

    Eigen::Index support_count() const noexcept { return support.rows(); }
};

/// Weighted SVR: C_t = box_constraint * w_t. Inputs are min-max scaled to [0, 1]
/// (frozen from training). Rows with w = 0 are dropped before solving.
SvrModel fit_svr(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                 const Eigen::Ref<const Eigen::VectorXd>& w, const SvrSpec& spec);

Eigen::VectorXd predict_svr(const SvrModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X);

}  // namespace hydroens
