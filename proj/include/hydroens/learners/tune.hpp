#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "hydroens/learners/model.hpp"

namespace hydroens {

struct ParamRange {
    std::string name;
    double low = 0.0;
    double high = 1.0;
    bool log_scale = false;
    bool integer = false;
};

using SearchSpace = std::vector<ParamRange>;
using ParamSet = std::map<std::string, double>;

/// Ranges per learner. SVR/kernel epsilon ranges scale with the spread of y.
SearchSpace default_search_space(ModelKind kind, const Eigen::Ref<const Eigen::VectorXd>& y);

/// Tunable fields by name: kernel_scale, lambda, expansion_dims, epsilon,
/// min_leaf_size, n_trees, box_constraint, poly_order. ConfigError for others.
LearnerSpec apply_params(LearnerSpec spec, const ParamSet& params);
ParamSet read_params(const LearnerSpec& spec, const SearchSpace& space);

/// Whole flood terms per fold: the i-th distinct term id (in row order) goes to
/// fold i % folds.
std::vector<int> term_folds(const std::vector<int>& term_of_row, int folds);

/// Out-of-sample predictions for every training row: OOB means for forests,
/// term-blocked K-fold for the other learners. NaN where none exists.
Eigen::VectorXd out_of_fold_predictions(const LearnerSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                                        const Eigen::Ref<const Eigen::VectorXd>& y,
                                        const Eigen::Ref<const Eigen::VectorXd>& w,
                                        const std::vector<int>& term_of_row, int folds, std::uint64_t seed);

/// OOB MSE for forests, blocked K-fold weighted MSE otherwise.
double tuning_objective(const LearnerSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                        const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& w,
                        const std::vector<int>& term_of_row, int folds, std::uint64_t seed);

enum class TuneMethod { random, gp_ei };

struct TuneOptions {
    int budget = 8;
    TuneMethod method = TuneMethod::random;
    int folds = 3;
    std::uint64_t seed = 0;
    int initial_points = 3;  // gp_ei: random evaluations before the surrogate takes over
};

struct TuneEntry {
    ParamSet params;
    double objective = 0.0;  // NaN when the candidate failed
    std::string error;
};

struct TuneResult {
    LearnerSpec best;
    ParamSet best_params;
    double best_objective = 0.0;
    std::string objective_name;
    std::vector<TuneEntry> log;
};

/// Evaluates `budget` candidates, the first being `base` itself, and returns the
/// one with the smallest objective. TuneError lists every failure when none succeeds.
TuneResult tune(const LearnerSpec& base, const SearchSpace& space, const Eigen::Ref<const Eigen::MatrixXd>& X,
                const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& w,
                const std::vector<int>& term_of_row, const TuneOptions& options);

nlohmann::json tune_log_json(const TuneResult& result);

}  // namespace hydroens
