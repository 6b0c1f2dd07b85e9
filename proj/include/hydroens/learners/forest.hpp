#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace hydroens {

struct ForestSpec {
    int min_leaf_size = 5;
    int n_trees = 100;
    std::uint64_t seed = 0;
    int mtry = 0;  // 0 = max(1, P / 3)
};

void validate(const ForestSpec& spec);

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    int sample_begin = 0;  // leaf sample range in RegressionTree::samples
    int sample_end = 0;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;
    std::vector<int> samples;   // in-bag training rows grouped by leaf (with bootstrap repeats)
    std::vector<int> in_bag;    // bootstrap draw, in draw order
    std::vector<int> oob_rows;  // ascending

    int leaf_of(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
    double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const { return nodes[static_cast<std::size_t>(leaf_of(x))].value; }
};

struct ForestModel {
    ForestSpec spec;
    std::vector<RegressionTree> trees;
    Eigen::Index n_features = 0;
    Eigen::VectorXd train_y;
    Eigen::VectorXd train_w;
    Eigen::VectorXd oob_prediction;  // NaN where a row is in-bag for every tree
    Eigen::Index oob_rows = 0;       // rows with at least one OOB tree
    double oob_mse = 0.0;            // weighted by training w
};

/// CART trees on bootstrap resamples drawn with probability proportional to w.
/// Tree i uses seed derive(spec.seed, i).
ForestModel fit_forest(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                       const Eigen::Ref<const Eigen::VectorXd>& w, const ForestSpec& spec);

/// Mean over trees.
Eigen::VectorXd predict_forest(const ForestModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X);

/// Quantile-forest estimate (leaf co-membership weights over training targets).
Eigen::VectorXd predict_forest_quantile(const ForestModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X,
                                        double q);

/// OOB predictions for the training matrix X (same rows as at fit time).
Eigen::VectorXd oob_predict(const ForestModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X);

struct ImportanceOptions {
    int repeats = 3;
    std::uint64_t seed = 0;
};

struct ImportanceResult {
    Eigen::VectorXd raw;       // mean increase in weighted OOB MSE
    Eigen::VectorXd reported;  // raw floored at 0
    double baseline_mse = 0.0;
};

/// Permutation importance: column j of the training matrix is shuffled and the
/// weighted OOB MSE recomputed.
ImportanceResult oob_importance(const ForestModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const ImportanceOptions& options = {});

}  // namespace hydroens
