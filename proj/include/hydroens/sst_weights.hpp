#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "hydroens/pca.hpp"
#include "hydroens/time.hpp"
#include "hydroens/timeseries.hpp"
#include "hydroens/tsne.hpp"

namespace hydroens {

/// Ocean feature vector z_m for one calendar month.
struct MonthlyFeature {
    MonthKey month;
    Eigen::VectorXd z;
};

/// Stacks features into an M x K matrix; throws ValidationError on ragged or non-finite input.
Eigen::MatrixXd stack_features(const std::vector<MonthlyFeature>& features);

/// Per-month regression weights STW_m.
struct WeightSeries {
    std::vector<MonthKey> months;
    Eigen::VectorXd monthly;
    double epsilon = 1e-8;

    std::optional<double> at(MonthKey month) const;
};

/// (W - min W) / (max W - min W). Throws DegenerateInput for constant input.
Eigen::VectorXd minmax_standardize(const Eigen::Ref<const Eigen::VectorXd>& W);

/// STW = W_std + epsilon.
Eigen::VectorXd finalize_weights(const Eigen::Ref<const Eigen::VectorXd>& W_std, double epsilon = 1e-8);

/// Piecewise-constant hourly weights over every hour of `terms`, in term order.
/// Throws ConfigError when a term hour falls in a month without a weight.
Eigen::VectorXd expand_hourly(const WeightSeries& weights, const FloodBatchSet& terms);

/// Weight for each timestamp (same lookup rule as expand_hourly).
Eigen::VectorXd weights_at(const WeightSeries& weights, const std::vector<HourStamp>& times);

struct SstWeightOptions {
    TsneOptions tsne{};
    double pca_threshold = 0.90;
    double epsilon = 1e-8;
};

struct SstWeightResult {
    WeightSeries weights;
    TsneResult embedding;
    FirstComponent component;   // W_m = component.scores
    Eigen::VectorXd standardized;
};

/// Embedding -> first principal component -> min-max -> epsilon floor.
SstWeightResult compute_sst_weights(const std::vector<MonthlyFeature>& features, const SstWeightOptions& options = {});

/// Mean silhouette coefficient of `points` under integer `labels`.
/// Throws DegenerateInput unless there are >= 2 groups, each with >= 2 members,
/// and the points are not all identical.
double silhouette(const Eigen::Ref<const Eigen::MatrixXd>& points, const std::vector<int>& labels);

/// Silhouette of flood (June to October) vs other months on an embedding.
double flood_month_silhouette(const Eigen::Ref<const Eigen::MatrixXd>& embedding, const std::vector<MonthKey>& months,
                              int first_flood_month = 6, int last_flood_month = 10);

}  // namespace hydroens
