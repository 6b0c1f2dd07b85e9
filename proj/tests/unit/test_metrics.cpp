#include <doctest.h>

#include <cmath>
#include <random>

#include "hydroens/errors.hpp"
#include "hydroens/log.hpp"
#include "hydroens/metrics.hpp"

using namespace hydroens;

TEST_CASE("basic error measures") {
    const Eigen::Vector3d y(1, 2, 3), h(2, 2, 5);
    CHECK(mse(h, y) == doctest::Approx(5.0 / 3.0));
    CHECK(rmse(h, y) == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(mae(h, y) == doctest::Approx(1.0));
    CHECK_THROWS_AS(mse(Eigen::Vector2d(1, 2), y), ShapeError);
}

TEST_CASE("cosine skill") {
    CHECK(sim(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)) == 0.0);
    CHECK(sim(Eigen::Vector2d(2, 2), Eigen::Vector2d(1, 1)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(sim(Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1)) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK_THROWS_AS(sim(Eigen::Vector2d::Zero(), Eigen::Vector2d(1, 1)), ZeroNormError);
    CHECK_THROWS_AS(sim(Eigen::Vector2d(1, 1), Eigen::Vector2d::Zero()), ZeroNormError);
}

TEST_CASE("MSE and skill identity on random pairs") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 2000; ++k) {
        const int n = 2 + k % 80;
        Eigen::VectorXd y(n), h(n);
        for (int i = 0; i < n; ++i) {
            y(i) = g(rng);
            h(i) = g(rng) * (1 + k % 5);
        }
        worst = std::max(worst, mse_skill_identity(h, y).relative);
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("FCD is R-squared against the term mean") {
    const Eigen::Vector4d y(1, 2, 3, 4);
    const Eigen::Vector4d h(1, 2, 3, 5);
    // SSE = 1, SST = 5.
    CHECK(determination(h, y, y.mean()) == doctest::Approx(0.8));
    CHECK(determination(y, y, y.mean()) == 1.0);
    log::WarningCounter warnings;
    const Eigen::Vector4d bad(4, 3, 2, 1);
    CHECK(determination(bad, y, y.mean()) < 0.0);
    CHECK(warnings.count() == 1);
    CHECK_THROWS_AS(determination(y, Eigen::Vector4d::Constant(2.0), 2.0), DegenerateInput);

    const FcdReport r = fcd({h, y}, {y, y});
    CHECK(r.per_term[0] == doctest::Approx(0.8));
    CHECK(r.per_term[1] == 1.0);
    CHECK(r.pooled == doctest::Approx(1.0 - 1.0 / 10.0));
}

TEST_CASE("proposition check: strict on nonnegative data, equality for colinear outputs") {
    const Eigen::Vector4d y(1, 3, 2, 5);
    std::vector<Eigen::VectorXd> outs{Eigen::Vector4d(1, 2, 2, 4), Eigen::Vector4d(2, 3, 1, 5),
                                      Eigen::Vector4d(0.5, 3, 3, 4)};
    const Eigen::Vector3d a(0.2, 0.5, 0.3);
    const Proposition1Report r = check_proposition1(outs, y, a);
    CHECK(r.in_domain);
    CHECK(r.holds);
    CHECK(r.strict);
    // rhs = lhs / |ybar| by construction.
    CHECK(r.rhs == doctest::Approx(r.lhs / r.ybar_norm).epsilon(1e-12));

    std::vector<Eigen::VectorXd> colinear{y * 2.0, y * 0.5, y};
    const Proposition1Report c = check_proposition1(colinear, y, a);
    CHECK(c.holds);
    CHECK(c.rhs == doctest::Approx(c.lhs).epsilon(1e-14));
}

TEST_CASE("proposition check: the inequality reverses when the weighted skill is negative") {
    const Eigen::Vector2d y(1, 0);
    std::vector<Eigen::VectorXd> outs{Eigen::Vector2d(-1, 1), Eigen::Vector2d(-1, -1)};
    const Proposition1Report r = check_proposition1(outs, y, Eigen::Vector2d(0.5, 0.5));
    CHECK(r.lhs < 0.0);
    CHECK_FALSE(r.in_domain);
    CHECK_FALSE(r.holds);

    std::vector<Eigen::VectorXd> opposite{Eigen::Vector2d(1, 1), Eigen::Vector2d(-1, -1)};
    CHECK(check_proposition1(opposite, y, Eigen::Vector2d(0.5, 0.5)).degenerate);
}

TEST_CASE("proposition sweep finds no violations") {
    const PropositionSweep s = proposition1_sweep(5000, 42);
    CHECK(s.instances == 5000);
    CHECK(s.violations == 0);
    CHECK(s.strict_failures == 0);
    CHECK(s.strict_candidates > 0);
}

TEST_CASE("skill rows: one per term plus pooled") {
    const Eigen::Vector3d y1(1, 2, 3), y2(4, 6, 5);
    const auto rows = skill_rows("l2", "never", {y1 * 1.1, y2}, {y1, y2}, {7, 9});
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].term == 7);
    CHECK(rows[1].term == 9);
    CHECK(rows[2].term == -1);
    CHECK(rows[1].fcd == 1.0);
    CHECK(rows[0].sim == doctest::Approx(1.0));
    CHECK(rows[2].norm_y == doctest::Approx(std::sqrt(y1.squaredNorm() + y2.squaredNorm())));
}
