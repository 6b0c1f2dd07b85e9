#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hydroens {

double mse(const Eigen::Ref<const Eigen::VectorXd>& yhat, const Eigen::Ref<const Eigen::VectorXd>& y);
double rmse(const Eigen::Ref<const Eigen::VectorXd>& yhat, const Eigen::Ref<const Eigen::VectorXd>& y);
double mae(const Eigen::Ref<const Eigen::VectorXd>& yhat, const Eigen::Ref<const Eigen::VectorXd>& y);

/// Cosine similarity <yhat, y> / (|yhat| |y|), clamped to [-1, 1]. ZeroNormError on a zero vector.
double sim(const Eigen::Ref<const Eigen::VectorXd>& yhat, const Eigen::Ref<const Eigen::VectorXd>& y);

/// Both sides of MSE / (|yhat| |y|) = |yhat| / (N |y|) - (2 / N) sim + |y| / (N |yhat|).
struct IdentityCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double absolute = 0.0;
    double relative = 0.0;  // absolute / max(|lhs|, |rhs|, tiny)
};

IdentityCheck mse_skill_identity(const Eigen::Ref<const Eigen::VectorXd>& yhat, const Eigen::Ref<const Eigen::VectorXd>& y);
double mse_skill_identity_residual(const Eigen::Ref<const Eigen::VectorXd>& yhat, const Eigen::Ref<const Eigen::VectorXd>& y);

/// 1 - SSE / sum (y - ref)^2. DegenerateInput when the denominator is zero;
/// negative values are returned as-is with a warning.
double determination(const Eigen::Ref<const Eigen::VectorXd>& yhat, const Eigen::Ref<const Eigen::VectorXd>& y,
                     double reference);

struct FcdReport {
    std::vector<double> per_term;        // term mean as reference
    std::vector<double> per_term_global; // pooled mean as reference
    double pooled = 0.0;                 // concatenation, pooled mean
};

FcdReport fcd(const std::vector<Eigen::VectorXd>& yhat, const std::vector<Eigen::VectorXd>& y);

struct Proposition1Report {
    double lhs = 0.0;  // sum_m a_m sim(yhat_m, y)
    double rhs = 0.0;  // sim(ybar_a, y)
    double ybar_norm = 0.0;
    bool degenerate = false;  // ybar_a is the zero vector
    bool in_domain = true;    // lhs >= 0, where the inequality is claimed
    bool holds = true;        // lhs <= rhs + 1e-12
    bool strict = false;      // lhs < rhs
};

/// ybar_a = sum_m a_m yhat_m / |yhat_m|_2.
Proposition1Report check_proposition1(const std::vector<Eigen::VectorXd>& outputs, const Eigen::Ref<const Eigen::VectorXd>& y,
                                      const Eigen::Ref<const Eigen::VectorXd>& a);

struct PropositionSweep {
    long instances = 0;
    long violations = 0;        // lhs > rhs + 1e-12
    long strict_candidates = 0; // lhs > 1e-6
    long strict_failures = 0;   // candidates with lhs >= rhs
    long degenerate = 0;
    double worst_excess = -1.0; // max (lhs - rhs)
    double seconds = 0.0;
};

/// Random nonnegative instances (M models, N uniform in [n_min, n_max], simplex
/// weights from a flat Dirichlet), mixing independent, correlated and skewed draws.
PropositionSweep proposition1_sweep(long instances, std::uint64_t seed, int models = 3, int n_min = 4,
                                    int n_max = 64);

struct SkillRow {
    std::string method;
    std::string weighting;
    int term = -1;  // -1 = pooled over all terms
    double fcd = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
    double sim = 0.0;
    double norm_yhat = 0.0;
    double norm_y = 0.0;
};

/// One row per term plus a pooled row (term = -1).
std::vector<SkillRow> skill_rows(const std::string& method, const std::string& weighting,
                                 const std::vector<Eigen::VectorXd>& yhat, const std::vector<Eigen::VectorXd>& y,
                                 const std::vector<int>& term_ids);

}  // namespace hydroens
