#include <doctest.h>

#include <cmath>
#include <limits>

#include "hydroens/errors.hpp"
#include "hydroens/time.hpp"
#include "hydroens/timeseries.hpp"
#include "hydroens/util.hpp"

using namespace hydroens;

TEST_CASE("hour stamps round-trip through civil fields and text") {
    const HourStamp t = HourStamp::from_civil(2019, 7, 14, 23);
    CHECK(t.year() == 2019);
    CHECK(t.month() == 7);
    CHECK(t.day() == 14);
    CHECK(t.hour_of_day() == 23);
    CHECK(t.to_string() == "2019-07-14T23:00");
    CHECK((t + 1).to_string() == "2019-07-15T00:00");
    CHECK(HourStamp::parse("2019-07-14T23:00") == t);
    CHECK(HourStamp::parse("2019-07-14 23:00") == t);
    CHECK_FALSE(HourStamp::parse("2019-07-14T23:30").has_value());
    CHECK_FALSE(HourStamp::parse("2019-02-30T00:00").has_value());
    CHECK(HourStamp::from_civil(1970, 1, 1).hours() == 0);
    CHECK(HourStamp::from_civil(2020, 3, 1) - HourStamp::from_civil(2020, 2, 1) == 29 * 24);
}

TEST_CASE("month keys") {
    const MonthKey m{2018, 12};
    CHECK(m.next() == MonthKey{2019, 1});
    CHECK(MonthKey::from_index(m.index()) == m);
    CHECK(m.to_string() == "2018-12");
    CHECK(MonthKey::parse("2018-12") == m);
    CHECK_FALSE(MonthKey::parse("2018-13").has_value());
    CHECK(hours_in_month({2019, 2}) == 28 * 24);
    CHECK(hours_in_month({2020, 2}) == 29 * 24);
}

TEST_CASE("hydro series masks and validation") {
    const HourStamp t0 = HourStamp::from_civil(2019, 6, 1);
    const HydroSeries s(t0, {1.0, 2.0, 99.0, 4.0}, {1, 1, 0, 1});
    CHECK(s.masked_count() == 1);
    CHECK(std::isnan(s.value(2)));
    CHECK(s.last() == t0 + 3);
    CHECK(s.index_of(t0 + 3) == 3u);
    CHECK_FALSE(s.index_of(t0 + 4).has_value());
    CHECK(s.slice(t0 + 1, t0 + 2).size() == 2);
    CHECK_THROWS_AS(s.slice(t0 + 2, t0 + 9), RangeError);
    CHECK(s.shifted(5).start() == t0 + 5);

    CHECK_THROWS_AS(HydroSeries(t0, {1.0, std::numeric_limits<double>::infinity()}), ValidationError);
    CHECK_THROWS_AS(HydroSeries(t0, {1.0, 2.0}, {1}), ValidationError);
    const std::vector<HourStamp> gap{t0, t0 + 1, t0 + 3};
    CHECK_THROWS_AS(HydroSeries::from_timestamps(gap, {1, 2, 3}), ValidationError);
}

TEST_CASE("flood batch sets reject overlap and locate hours") {
    const HourStamp t0 = HourStamp::from_civil(2019, 6, 1);
    const FloodBatchSet terms({{1, t0, t0 + 9}, {2, t0 + 20, t0 + 29}});
    CHECK(terms.total_samples() == 20);
    CHECK(terms.locate(t0 + 25) == 1u);
    CHECK_FALSE(terms.locate(t0 + 15).has_value());
    CHECK_THROWS_AS(FloodBatchSet({{1, t0, t0 + 9}, {2, t0 + 9, t0 + 12}}), ValidationError);
    CHECK_THROWS_AS(FloodBatchSet({{1, t0, t0 + 9}, {1, t0 + 20, t0 + 22}}), ValidationError);
    CHECK_THROWS_AS(FloodBatchSet({{1, t0 + 5, t0}}), ValidationError);

    const FloodBatchSet other({{7, t0 + 28, t0 + 40}});
    CHECK(terms.overlaps(other));
    CHECK_FALSE(terms.overlaps(FloodBatchSet({{7, t0 + 30, t0 + 40}})));
}

TEST_CASE("alignment intersects ranges and flags masked rows") {
    const HourStamp t0 = HourStamp::from_civil(2019, 6, 1);
    const std::vector<HydroSeries> s{HydroSeries(t0, {1, 2, 3, 4, 5}), HydroSeries(t0 + 2, {7, 8, 9, 10}, {1, 0, 1, 1})};
    const AlignedTable a = align(s);
    CHECK(a.start == t0 + 2);
    CHECK(a.rows == 3);
    CHECK(a.columns[0] == std::vector<double>{3, 4, 5});
    CHECK(a.flagged_count() == 1);
    CHECK(a.flagged[1] == 1);

    const std::vector<HydroSeries> disjoint{HydroSeries(t0, {1, 2}), HydroSeries(t0 + 5, {1, 2})};
    CHECK_THROWS_AS(align(disjoint), AlignmentError);

    const auto parts = slice_terms(s[0], FloodBatchSet({{3, t0 + 1, t0 + 2}}));
    CHECK(parts[0] == std::vector<double>{2, 3});
    CHECK_THROWS_AS(slice_terms(s[0], FloodBatchSet({{3, t0 + 4, t0 + 6}})), RangeError);
}

TEST_CASE("design matrix validation and fingerprint") {
    Eigen::MatrixXd X(3, 2);
    X << 1, 1, 2, 1, 3, 1;
    const Eigen::Vector3d y(1, 2, 3), w(1, 0, 2);
    CHECK_THROWS_AS(DesignMatrix({"a", "b"}, {0, 0}, X, y, w, {1, 1, 1}), ValidationError);
    const DesignMatrix d({"a", "b"}, {0, 1}, X, y, w, {1, 1, 1});
    CHECK(d.rows() == 3);
    CHECK_THROWS_AS(DesignMatrix({"a", "a"}, {0, 1}, X, y, w, {1, 1, 1}), ValidationError);
    CHECK_THROWS_AS(d.with_weights(Eigen::Vector3d(1, -1, 1)), ValidationError);
    CHECK_THROWS_AS(d.with_weights(Eigen::Vector3d::Zero()), ValidationError);
    CHECK_THROWS_AS(DesignMatrix({"a", "b"}, {0, 1}, X, Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 1), {1, 1}),
                    Error);
    CHECK(d.fingerprint() == DesignMatrix({"a", "b"}, {0, 1}, X, y, w, {1, 1, 1}).fingerprint());
    CHECK(d.fingerprint() != d.with_weights(Eigen::Vector3d(1, 1, 2)).fingerprint());
}

TEST_CASE("utility hashing, seeds and number formatting") {
    CHECK(fnv1a(std::string_view{""}) == 0xcbf29ce484222325ULL);
    CHECK(fnv1a(std::string_view{"a"}) == 0xaf63dc4c8601ec8cULL);
    CHECK(hex64(0xabcULL) == "0000000000000abc");
    CHECK(derive_seed(1, "tsne") == derive_seed(1, "tsne"));
    CHECK(derive_seed(1, "tsne") != derive_seed(2, "tsne"));
    CHECK(derive_seed(1, "tsne") != derive_seed(1, "fit/RFoob"));
    const double v = 0.1 + 0.2;
    CHECK(std::stod(format_double(v)) == v);
}
