#include "hydroens/sst_weights.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "hydroens/errors.hpp"

namespace hydroens {

Eigen::MatrixXd stack_features(const std::vector<MonthlyFeature>& features) {
    if (features.empty()) throw ValidationError("no monthly features");
    const Eigen::Index k = features.front().z.size();
    Eigen::MatrixXd Z(static_cast<Eigen::Index>(features.size()), k);
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].z.size() != k)
            throw ValidationError("monthly feature " + features[i].month.to_string() + " has " +
                                  std::to_string(features[i].z.size()) + " elements, expected " + std::to_string(k));
        if (!features[i].z.allFinite())
            throw ValidationError("monthly feature " + features[i].month.to_string() + " has non-finite entries");
        Z.row(static_cast<Eigen::Index>(i)) = features[i].z.transpose();
    }
    return Z;
}

std::optional<double> WeightSeries::at(MonthKey month) const {
    auto it = std::find(months.begin(), months.end(), month);
    if (it == months.end()) return std::nullopt;
    return monthly(it - months.begin());
}

Eigen::VectorXd minmax_standardize(const Eigen::Ref<const Eigen::VectorXd>& W) {
    if (W.size() == 0) throw DegenerateInput("min-max standardization of an empty vector");
    const double lo = W.minCoeff();
    const double hi = W.maxCoeff();
    if (!(hi > lo)) throw DegenerateInput("min-max standardization of a constant vector");
    return (W.array() - lo) / (hi - lo);
}

Eigen::VectorXd finalize_weights(const Eigen::Ref<const Eigen::VectorXd>& W_std, double epsilon) {
    return W_std.array() + epsilon;
}

Eigen::VectorXd weights_at(const WeightSeries& weights, const std::vector<HourStamp>& times) {
    std::map<MonthKey, double> lookup;
    for (std::size_t i = 0; i < weights.months.size(); ++i)
        lookup[weights.months[i]] = weights.monthly(static_cast<Eigen::Index>(i));
    Eigen::VectorXd out(static_cast<Eigen::Index>(times.size()));
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto key = times[i].month_key();
        auto it = lookup.find(key);
        if (it == lookup.end()) throw ConfigError("no SST weight for month " + key.to_string());
        out(static_cast<Eigen::Index>(i)) = it->second;
    }
    return out;
}

Eigen::VectorXd expand_hourly(const WeightSeries& weights, const FloodBatchSet& terms) {
    std::vector<HourStamp> times;
    times.reserve(terms.total_samples());
    for (const auto& term : terms)
        for (HourStamp t = term.start; t <= term.end; t = t + 1) times.push_back(t);
    return weights_at(weights, times);
}

SstWeightResult compute_sst_weights(const std::vector<MonthlyFeature>& features, const SstWeightOptions& options) {
    const Eigen::MatrixXd Z = stack_features(features);
    if (options.tsne.dims != 3) throw ConfigError("SST embedding must be 3-dimensional");
    SstWeightResult result;
    result.embedding = tsne_embed(Z, options.tsne);
    result.component = pca_first(result.embedding.embedding, options.pca_threshold);
    result.standardized = minmax_standardize(result.component.scores);
    result.weights.epsilon = options.epsilon;
    result.weights.monthly = finalize_weights(result.standardized, options.epsilon);
    result.weights.months.reserve(features.size());
    for (const auto& f : features) result.weights.months.push_back(f.month);
    return result;
}

double silhouette(const Eigen::Ref<const Eigen::MatrixXd>& points, const std::vector<int>& labels) {
    const Eigen::Index n = points.rows();
    if (static_cast<Eigen::Index>(labels.size()) != n) throw ShapeError("silhouette: label count differs from points");
    std::map<int, int> sizes;
    for (int l : labels) ++sizes[l];
    if (sizes.size() < 2) throw DegenerateInput("silhouette needs at least two groups");
    for (auto [label, count] : sizes)
        if (count < 2) throw DegenerateInput("silhouette group " + std::to_string(label) + " has fewer than 2 members");

    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    double max_d = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            D(i, j) = D(j, i) = (points.row(i) - points.row(j)).norm();
            max_d = std::max(max_d, D(i, j));
        }
    if (!(max_d > 0.0)) throw DegenerateInput("silhouette of identical points");

    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        std::map<int, double> sum;
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) sum[labels[static_cast<std::size_t>(j)]] += D(i, j);
        const int own = labels[static_cast<std::size_t>(i)];
        const double a = sum[own] / (sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (auto [label, s] : sum)
            if (label != own) b = std::min(b, s / sizes[label]);
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

double flood_month_silhouette(const Eigen::Ref<const Eigen::MatrixXd>& embedding, const std::vector<MonthKey>& months,
                              int first_flood_month, int last_flood_month) {
    std::vector<int> labels;
    labels.reserve(months.size());
    for (const auto& m : months) labels.push_back(m.month >= first_flood_month && m.month <= last_flood_month ? 1 : 0);
    return silhouette(embedding, labels);
}

}  // namespace hydroens
