#include <doctest.h>

#include <cmath>

#include "hydroens/errors.hpp"
#include "hydroens/sst_weights.hpp"
#include "hydroens/synth.hpp"

using namespace hydroens;

namespace {

ScenarioSpec small_spec() {
    ScenarioSpec s;
    s.train_years = 2;
    s.test_terms = 2;
    return s;
}

}  // namespace

TEST_CASE("gamma pulse peaks at one") {
    CHECK(gamma_pulse(2.0, 3.0) == doctest::Approx(1.0));
    CHECK(gamma_pulse(0.0) == 0.0);
    CHECK(gamma_pulse(-1.0) == 0.0);
    CHECK(gamma_pulse(1.0) < 1.0);
    CHECK(gamma_pulse(3.5) < 1.0);
}

TEST_CASE("single noiseless pulse reaches its configured level") {
    ScenarioSpec s = small_spec();
    s.peak_min = s.peak_max = 1750.0;
    s.peaks_min = s.peaks_max = 1;
    s.noise = 0.0;
    s.base_flow = 0.0;
    const Hydrograph h = gen_hydrograph(s);
    REQUIRE(h.peaks.size() == h.terms.size());
    for (const auto& term : h.terms) {
        double peak = 0.0;
        for (HourStamp t = term.start; t <= term.end; t = t + 1) peak = std::max(peak, h.inflow.value(*h.inflow.index_of(t)));
        CHECK(peak == doctest::Approx(1750.0).epsilon(0.05));
        CHECK(peak <= 1750.0 * (1.0 + 1e-12));
    }
}

TEST_CASE("rainfall leads inflow by the configured lag") {
    ScenarioSpec s = small_spec();
    s.noise = 0.0;
    s.lag_hours = 4;
    const Hydrograph h = gen_hydrograph(s);
    const Rainfall r = gen_rainfall(h, s);
    REQUIRE(r.basin.start() == h.inflow.start());
    const auto n = h.inflow.size();
    double mq = 0.0, mr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mq += h.inflow.value(i);
        mr += r.basin.value(i);
    }
    mq /= static_cast<double>(n);
    mr /= static_cast<double>(n);
    int best_lag = -1;
    double best = -1e300;
    for (int lag = 0; lag <= 12; ++lag) {
        double c = 0.0;
        for (std::size_t i = static_cast<std::size_t>(lag); i < n; ++i)
            c += (r.basin.value(i - static_cast<std::size_t>(lag)) - mr) * (h.inflow.value(i) - mq);
        if (c > best) {
            best = c;
            best_lag = lag;
        }
    }
    CHECK(std::abs(best_lag - s.lag_hours) <= 1);
    CHECK(r.gauges.size() == static_cast<std::size_t>(s.gauges));
    CHECK(r.guidance.size() == 6);
    CHECK_FALSE(r.grid.empty());
}

TEST_CASE("SST features form flood and non-flood clusters") {
    std::vector<MonthKey> months;
    for (int i = 0; i < 36; ++i) months.push_back(MonthKey::from_index(MonthKey{2010, 1}.index() + i));
    const auto feats = gen_sst_features(months, 32, 6.0, 3);
    REQUIRE(feats.size() == 36);
    Eigen::MatrixXd Z = stack_features(feats);
    CHECK(Z.cols() == 32);
    std::vector<int> labels;
    for (const auto& m : months) labels.push_back(m.month >= 6 && m.month <= 10 ? 1 : 0);
    CHECK(silhouette(Z, labels) > 0.2);
    const auto none = gen_sst_features(months, 32, 0.0, 3);
    CHECK(std::abs(silhouette(stack_features(none), labels)) < 0.1);
}

TEST_CASE("scenario generation is deterministic and keeps test terms after training") {
    const Scenario a = generate_scenario(small_spec());
    const Scenario b = generate_scenario(small_spec());
    CHECK(a.train_terms.size() == 6);
    CHECK(a.test_terms.size() == 2);
    CHECK(a.train_terms.terms().back().end < a.test_terms[0].start);
    CHECK_FALSE(a.train_terms.overlaps(a.test_terms));
    const auto& qa = a.series.at("inflow");
    const auto& qb = b.series.at("inflow");
    CHECK(std::equal(qa.values().begin(), qa.values().end(), qb.values().begin()));
    CHECK(a.series.count("water_height") == 1);
    CHECK(a.series.count("guidance_h6") == 1);
    for (const auto& term : a.test_terms) CHECK(term.start.month() >= 6);

    ScenarioSpec bad = small_spec();
    bad.peak_min = -1.0;
    CHECK_THROWS_AS(generate_scenario(bad), ConfigError);
    bad = small_spec();
    bad.train_terms_per_year = 40;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}
