#include <doctest.h>

#include <cmath>
#include <random>

#include "hydroens/errors.hpp"
#include "hydroens/features.hpp"
#include "hydroens/log.hpp"
#include "hydroens/synth.hpp"

using namespace hydroens;

namespace {

const HourStamp kT0 = HourStamp::from_civil(2019, 7, 1);

HydroSeries ramp(std::size_t n, double slope = 1.0) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = slope * static_cast<double>(i);
    return HydroSeries(kT0, v);
}

}  // namespace

TEST_CASE("AR block holds strictly past values") {
    const HydroSeries s = ramp(12);
    const auto cols = ar_block(s, LagSpec{3});
    REQUIRE(cols.size() == 3);
    CHECK(cols[0].name == "ar1");
    CHECK_FALSE(cols[0].valid[2]);
    CHECK(cols[0].valid[3]);
    for (std::size_t t = 3; t < 12; ++t)
        for (int j = 1; j <= 3; ++j) CHECK(cols[static_cast<std::size_t>(j - 1)].values[t] == static_cast<double>(t) - j);
    CHECK_THROWS_AS(ar_block(ramp(3), LagSpec{3}), InsufficientHistory);

    const HydroSeries masked(kT0, {1, 2, 3, 4, 5, 6}, {1, 1, 0, 1, 1, 1});
    const auto m = ar_block(masked, LagSpec{2});
    CHECK_FALSE(m[0].valid[3]);  // lag 1 of t=3 is masked
    CHECK(m[1].valid[3]);
    CHECK_FALSE(m[1].valid[4]);
}

TEST_CASE("MA block averages the p previous hours") {
    const HydroSeries s(kT0, {2, 4, 6, 8, 10, 100});
    const FeatureColumn c = ma_block(s, LagSpec{3});
    CHECK_FALSE(c.valid[2]);
    CHECK(c.values[3] == doctest::Approx(4.0));
    CHECK(c.values[5] == doctest::Approx(8.0));  // the value at t itself is excluded
}

TEST_CASE("gradient of a line recovers its slope in both modes") {
    const HydroSeries s = ramp(30, 2.5);
    const FeatureColumn ls = trapezoid_gradient(s, 12);
    const FeatureColumn diff = trapezoid_gradient(s, 12, GradientMode::difference);
    CHECK_FALSE(ls.valid[11]);
    for (std::size_t t = 12; t < 30; ++t) {
        CHECK(ls.values[t] == doctest::Approx(2.5).epsilon(1e-12));
        CHECK(diff.values[t] == doctest::Approx(2.5).epsilon(1e-12));
    }
    std::vector<double> q(20);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = static_cast<double>(i * i);
    // LS slope of t^2 over k = t-w..t is 2 t - w exactly.
    const FeatureColumn qg = trapezoid_gradient(HydroSeries(kT0, q), 4);
    CHECK(qg.values[10] == doctest::Approx(2.0 * 10 - 4).epsilon(1e-12));
    CHECK_THROWS_AS(trapezoid_gradient(s, 0), ConfigError);
}

TEST_CASE("grid moments match a hand computation") {
    std::vector<double> cells(kGridCells, 0.0);
    for (std::size_t i = 0; i < 100; ++i) cells[i] = 4.0;
    // 4 * Bernoulli(1/4): mean 1, var 3, skew (q - p) / sqrt(pq), kurtosis (1 - 3pq) / pq.
    const GridMoments m = grid_moments(GridField(kT0, cells));
    const double p = 0.25, q = 0.75;
    CHECK(m.mean == doctest::Approx(1.0));
    CHECK(m.stddev == doctest::Approx(std::sqrt(3.0)));
    CHECK(m.skewness == doctest::Approx((q - p) / std::sqrt(p * q)));
    CHECK(m.kurtosis == doctest::Approx((1.0 - 3.0 * p * q) / (p * q)));

    log::WarningCounter warnings;
    const GridMoments flat = grid_moments(std::vector<double>(kGridCells, 2.0));
    CHECK(flat.degenerate);
    CHECK(std::isnan(flat.skewness));
    CHECK(warnings.count() == 1);

    CHECK_THROWS_AS(GridField(kT0, std::vector<double>(399, 0.0)), ValidationError);
    CHECK_THROWS_AS(GridField(kT0, std::vector<double>(kGridCells, -1.0)), ValidationError);
}

TEST_CASE("rain accumulation sums the trailing fields") {
    std::vector<GridField> fields;
    for (int h = 0; h < 5; ++h) fields.emplace_back(kT0 + h, std::vector<double>(kGridCells, static_cast<double>(h)));
    std::vector<std::uint8_t> valid;
    const Eigen::MatrixXd acc = accumulate_rain(fields, {kT0 + 1, kT0 + 4, kT0 + 9}, 3, valid);
    CHECK(valid == std::vector<std::uint8_t>{0, 1, 0});
    CHECK(acc(1, 0) == 2.0 + 3.0 + 4.0);
    CHECK(acc(0, 7) == 0.0);
}

TEST_CASE("guidance PCA: independent leads need every component, identical leads one") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd G(4000, 6), same(4000, 6);
    for (Eigen::Index r = 0; r < G.rows(); ++r) {
        const double common = g(rng);
        for (Eigen::Index c = 0; c < 6; ++c) {
            G(r, c) = g(rng);
            same(r, c) = common;
        }
    }
    CHECK(guidance_pca(G, 0.90).model.kept() == 6);
    const PcaFeatures one = guidance_pca(same, 0.90);
    CHECK(one.model.kept() == 1);
    CHECK(one.model.explained_ratio(0) == doctest::Approx(1.0));
}

TEST_CASE("seasonal dummies are one-hot June to October") {
    const std::vector<HourStamp> t{HourStamp::from_civil(2019, 6, 3), HourStamp::from_civil(2019, 10, 31, 23),
                                   HourStamp::from_civil(2019, 12, 1)};
    const auto cols = seasonal_dummies(t);
    REQUIRE(cols.size() == 5);
    CHECK(cols[0].name == "month_06");
    CHECK(cols[0].dummy);
    CHECK(cols[0].values[0] == 1.0);
    CHECK(cols[4].values[1] == 1.0);
    double december = 0.0;
    for (const auto& c : cols) december += c.values[2];
    CHECK(december == 0.0);
    CHECK_THROWS_AS(seasonal_dummies(t, {1, 1, 1}), ValidationError);
}

TEST_CASE("feature pipeline rejects unknown steps and use before fit") {
    CHECK_THROWS_AS(FeaturePipeline({FeatureStep{"wavelet", {"inflow"}}}), ConfigError);
    CHECK_THROWS_AS(FeaturePipeline({FeatureStep{"ar", {"a", "b"}}}), ConfigError);
    const FeaturePipeline p({FeatureStep{"ar", {"inflow"}}});
    CHECK_THROWS_AS(p.transform({}, {kT0}), ConfigError);
}

TEST_CASE("feature pipeline is causal: perturbing later data leaves a row unchanged") {
    ScenarioSpec spec;
    spec.train_years = 2;
    spec.test_terms = 2;
    const Scenario sc = generate_scenario(spec);
    FeaturePipeline pipeline(default_feature_recipe(spec.gauges));

    std::vector<HourStamp> train;
    for (const auto& term : sc.train_terms)
        for (HourStamp t = term.start; t <= term.end; t = t + 1) train.push_back(t);
    pipeline.fit(sc.sources(), train);

    const FloodTerm& probe_term = sc.test_terms[0];
    const std::vector<HourStamp> probe{probe_term.start + 30};
    const FeatureTable before = pipeline.transform(sc.sources(), probe);
    REQUIRE(before.valid[0]);

    FeatureSources future = sc.sources();
    for (auto& [name, s] : future.series) {
        std::vector<double> v(s.values().begin(), s.values().end());
        std::vector<std::uint8_t> m(s.mask().begin(), s.mask().end());
        for (std::size_t i = 0; i < v.size(); ++i)
            if (s.time(i) > probe[0] && m[i]) v[i] = v[i] * 3.0 + 17.0;
        s = HydroSeries(s.start(), v, m);
    }
    for (auto& f : future.grid)
        if (f.time() > probe[0]) f = GridField(f.time(), std::vector<double>(kGridCells, 55.0));

    const FeatureTable after = pipeline.transform(future, probe);
    CHECK(after.valid[0]);
    CHECK(after.names == before.names);
    CHECK((after.X.row(0).array() == before.X.row(0).array()).all());
}
