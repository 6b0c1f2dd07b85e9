#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "hydroens/errors.hpp"
#include "hydroens/sst_weights.hpp"
#include "hydroens/synth.hpp"
#include "oracles.hpp"

using namespace hydroens;

namespace {

std::vector<MonthKey> months_from(MonthKey first, int count) {
    std::vector<MonthKey> out;
    for (int i = 0; i < count; ++i) out.push_back(MonthKey::from_index(first.index() + i));
    return out;
}

}  // namespace

TEST_CASE("min-max standardization hits 0 and 1 exactly") {
    const Eigen::Vector4d W(-3.2, 7.9, 0.0, 1.5);
    const Eigen::VectorXd s = minmax_standardize(W);
    CHECK(s.minCoeff() == 0.0);
    CHECK(s.maxCoeff() == 1.0);
    CHECK(s(0) == 0.0);
    CHECK(s(1) == 1.0);
    CHECK_THROWS_AS(minmax_standardize(Eigen::Vector3d::Constant(2.0)), DegenerateInput);
    const Eigen::VectorXd f = finalize_weights(s, 1e-8);
    CHECK(f.minCoeff() == 1e-8);
    CHECK(f.maxCoeff() == 1.0 + 1e-8);
}

TEST_CASE("SST weights keep the order of the first-component scores") {
    const auto months = months_from({2007, 1}, 48);
    const auto feats = gen_sst_features(months, 16, 4.0, 7);
    SstWeightOptions opt;
    opt.tsne.seed = 13;
    const SstWeightResult r = compute_sst_weights(feats, opt);
    REQUIRE(r.weights.monthly.size() == 48);
    CHECK(r.weights.months == months);
    CHECK(r.weights.monthly.minCoeff() == opt.epsilon);
    CHECK(r.weights.monthly.maxCoeff() == 1.0 + opt.epsilon);
    const Eigen::VectorXd& W = r.component.scores;
    for (Eigen::Index i = 0; i < W.size(); ++i)
        for (Eigen::Index j = 0; j < W.size(); ++j)
            if (W(i) < W(j)) CHECK(r.weights.monthly(i) <= r.weights.monthly(j));
    CHECK(flood_month_silhouette(r.embedding.embedding, months) > 0.3);

    const SstWeightResult again = compute_sst_weights(feats, opt);
    CHECK((again.weights.monthly.array() == r.weights.monthly.array()).all());
}

TEST_CASE("silhouette matches a brute-force oracle") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd P(30, 3);
    std::vector<int> labels(30);
    for (Eigen::Index i = 0; i < 30; ++i) {
        labels[static_cast<std::size_t>(i)] = static_cast<int>(i % 3);
        for (Eigen::Index j = 0; j < 3; ++j) P(i, j) = g(rng) + (j == 0 ? 1.5 * static_cast<double>(i % 3) : 0.0);
    }
    CHECK(silhouette(P, labels) == doctest::Approx(oracle::silhouette(P, labels)).epsilon(1e-12));

    CHECK_THROWS_AS(silhouette(P, std::vector<int>(30, 0)), DegenerateInput);
    std::vector<int> lonely(30, 0);
    lonely[4] = 1;
    CHECK_THROWS_AS(silhouette(P, lonely), DegenerateInput);
    CHECK_THROWS_AS(silhouette(Eigen::MatrixXd::Zero(4, 3), {0, 0, 1, 1}), DegenerateInput);
    CHECK_THROWS_AS(silhouette(P, {0, 1}), ShapeError);
}

TEST_CASE("hourly weights are piecewise constant by month") {
    WeightSeries w;
    w.months = {{2019, 6}, {2019, 7}};
    w.monthly = Eigen::Vector2d(0.25, 0.75);
    const HourStamp end_june = HourStamp::from_civil(2019, 6, 30, 22);
    const FloodBatchSet terms({{1, end_june, end_june + 3}});
    const Eigen::VectorXd h = expand_hourly(w, terms);
    CHECK(h.size() == 4);
    CHECK(h(0) == 0.25);
    CHECK(h(1) == 0.25);
    CHECK(h(2) == 0.75);
    CHECK(w.at({2019, 7}) == 0.75);
    CHECK_FALSE(w.at({2019, 8}).has_value());
    CHECK_THROWS_AS(weights_at(w, {HourStamp::from_civil(2019, 8, 1)}), ConfigError);
    CHECK_THROWS_AS(stack_features({{{2019, 6}, Eigen::Vector2d(1, 2)}, {{2019, 7}, Eigen::Vector3d(1, 2, 3)}}),
                    ValidationError);
}
