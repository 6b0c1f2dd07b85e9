#include <doctest.h>

#include <cmath>
#include <random>

#include "hydroens/ensemble.hpp"
#include "hydroens/errors.hpp"
#include "hydroens/log.hpp"

using namespace hydroens;

namespace {

Eigen::VectorXd random_positive(std::mt19937_64& rng, Eigen::Index n) {
    std::uniform_real_distribution<double> u(0.1, 5.0);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
    return v;
}

Eigen::VectorXd random_simplex(std::mt19937_64& rng, int m) {
    std::exponential_distribution<double> e(1.0);
    Eigen::VectorXd a(m);
    for (int i = 0; i < m; ++i) a(i) = e(rng);
    a /= a.sum();
    a(m - 1) = 1.0 - a.head(m - 1).sum();
    return a;
}

// Element-by-element loop, written independently of the library.
std::vector<std::vector<double>> hand_batch(const std::vector<std::vector<std::vector<double>>>& y,  // [m][b][t]
                                            const std::vector<std::vector<double>>& alpha) {         // [b][m]
    const std::size_t M = y.size(), B = y[0].size();
    std::vector<std::vector<double>> out(B);
    for (std::size_t b = 0; b < B; ++b) {
        const std::size_t N = y[0][b].size();
        out[b].assign(N, 0.0);
        for (std::size_t m = 0; m < M; ++m) {
            double ss = 0.0;
            for (double v : y[m][b]) ss += v * v;
            const double denom = std::sqrt(ss) / static_cast<double>(N);
            for (std::size_t t = 0; t < N; ++t) out[b][t] += alpha[b][m] * y[m][b][t] / denom;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("l2_norm basics") {
    CHECK(l2_norm(Eigen::Vector2d(3.0, 4.0)) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(l2_norm(Eigen::VectorXd::Zero(7)) == 0.0);
    std::mt19937_64 rng(3);
    const Eigen::VectorXd v = random_positive(rng, 101);
    double ss = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) ss += v(i) * v(i);
    CHECK(std::abs(l2_norm(v) - std::sqrt(ss)) <= 1e-12 * std::sqrt(ss));
    Eigen::VectorXd bad = v;
    bad(3) = std::nan("");
    CHECK_THROWS_AS(l2_norm(bad), ValidationError);
}

TEST_CASE("global ensemble: identity and symmetry") {
    const Eigen::Vector4d y(1.0, 2.0, 2.0, 1.0);
    const double n = 4.0;
    // Scale so that |y| / N = 1.
    const Eigen::VectorXd yu = y * (n / y.norm());
    Eigen::VectorXd a1(1);
    a1 << 1.0;
    const Eigen::VectorXd out = global_ensemble(std::vector<Eigen::VectorXd>{yu}, a1);
    CHECK((out - yu).cwiseAbs().maxCoeff() <= 1e-14);

    const Eigen::Vector3d third = Eigen::Vector3d::Constant(1.0 / 3.0);
    const Eigen::VectorXd same = global_ensemble(std::vector<Eigen::VectorXd>{y, y, y}, third);
    CHECK((same - y / (y.norm() / n)).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("global ensemble with the published denominators") {
    const Eigen::Vector3d denom(0.3120, 0.7522, 0.7900);
    const Eigen::Vector3d a = Eigen::Vector3d::Constant(1.0 / 3.0);
    std::vector<Eigen::VectorXd> outs{Eigen::Vector3d(1.0, 2.0, 3.0), Eigen::Vector3d(0.5, 0.25, 4.0),
                                      Eigen::Vector3d(2.0, 2.0, 0.1)};
    const Eigen::VectorXd got = ensemble_with_denominators(outs, denom, a);
    for (int t = 0; t < 3; ++t) {
        const double hand = outs[0](t) / (3 * 0.3120) + outs[1](t) / (3 * 0.7522) + outs[2](t) / (3 * 0.7900);
        CHECK(got(t) == doctest::Approx(hand).epsilon(1e-14));
    }
}

TEST_CASE("zero norm names the model and term") {
    std::vector<ModelOutput> outs{ModelOutput("Kernel", {Eigen::Vector2d(1, 2), Eigen::Vector2d(0, 0)}),
                                  ModelOutput("SVM", {Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 3)})};
    try {
        batch_ensemble(outs, CoefficientSet::uniform(2, {"Kernel", "SVM"}));
        FAIL("expected ZeroNormError");
    } catch (const ZeroNormError& e) {
        CHECK(e.model() == "Kernel");
        CHECK(e.term() == 1);
    }
    CHECK_THROWS_AS(global_ensemble(std::vector<Eigen::VectorXd>{Eigen::Vector2d::Zero()}, Eigen::VectorXd::Ones(1)),
                    ZeroNormError);
}

TEST_CASE("batch ensemble matches the hand loop") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const int M = 2 + rep % 2, B = 2 + rep % 3;
        std::vector<std::vector<std::vector<double>>> raw(M, std::vector<std::vector<double>>(B));
        std::vector<int> lens(B);
        for (int b = 0; b < B; ++b) lens[b] = 3 + (rep + b) % 9;
        std::vector<ModelOutput> outs;
        std::vector<std::string> tags;
        for (int m = 0; m < M; ++m) {
            std::vector<Eigen::VectorXd> terms;
            for (int b = 0; b < B; ++b) {
                const Eigen::VectorXd v = random_positive(rng, lens[b]);
                raw[m][b].assign(v.data(), v.data() + v.size());
                terms.push_back(v);
            }
            tags.push_back("m" + std::to_string(m));
            outs.emplace_back(tags.back(), terms);
        }
        CoefficientSet c;
        c.models = tags;
        c.alpha.resize(B, M);
        std::vector<std::vector<double>> alpha(B);
        for (int b = 0; b < B; ++b) {
            const Eigen::VectorXd a = random_simplex(rng, M);
            c.alpha.row(b) = a.transpose();
            alpha[b].assign(a.data(), a.data() + M);
        }
        const auto got = batch_ensemble(outs, c);
        const auto want = hand_batch(raw, alpha);
        for (int b = 0; b < B; ++b)
            for (int t = 0; t < lens[b]; ++t) CHECK(std::abs(got[b](t) - want[b][t]) <= 1e-12 * std::abs(want[b][t]));
    }
}

TEST_CASE("batch ensemble with one term equals the global ensemble bit for bit") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 100; ++rep) {
        const Eigen::Index n = 4 + rep % 61;
        std::vector<Eigen::VectorXd> vs{random_positive(rng, n), random_positive(rng, n), random_positive(rng, n)};
        const Eigen::VectorXd a = random_simplex(rng, 3);
        const Eigen::VectorXd g = global_ensemble(vs, a);
        std::vector<ModelOutput> outs{ModelOutput("Kernel", {vs[0]}), ModelOutput("RFoob", {vs[1]}),
                                      ModelOutput("SVM", {vs[2]})};
        const auto b = batch_ensemble(outs, CoefficientSet::repeated(1, {"Kernel", "RFoob", "SVM"}, a));
        REQUIRE(b.size() == 1);
        CHECK((b[0].array() == g.array()).all());
    }
}

TEST_CASE("normalized contributions carry norm N and scaling invariance holds") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> c(1e-3, 1e3);
    for (int rep = 0; rep < 50; ++rep) {
        const Eigen::Index n = 5 + rep;
        const Eigen::VectorXd v = random_positive(rng, n);
        const Eigen::VectorXd z = l2_normalized(v);
        CHECK(std::abs(z.norm() - static_cast<double>(n)) <= 1e-9 * static_cast<double>(n));
        const Eigen::VectorXd zc = l2_normalized(c(rng) * v);
        CHECK((z - zc).norm() <= 1e-12 * z.norm());
    }
}

TEST_CASE("two equal terms give equal outputs; equal norms warn") {
    const Eigen::Vector3d t(1, 2, 3);
    std::vector<ModelOutput> outs{ModelOutput("Kernel", {t, t}), ModelOutput("SVM", {2 * t, 2 * t})};
    log::WarningCounter warnings;
    const auto r = batch_ensemble(outs, CoefficientSet::uniform(2, {"Kernel", "SVM"}));
    CHECK((r[0] - r[1]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(warnings.count() == 0);
    std::vector<ModelOutput> same{ModelOutput("Kernel", {t}), ModelOutput("SVM", {t.reverse()})};
    batch_ensemble(same, CoefficientSet::uniform(1, {"Kernel", "SVM"}));
    CHECK(warnings.count() >= 1);
}

TEST_CASE("coefficient simplex validation") {
    CHECK_NOTHROW(validate_simplex(Eigen::Vector3d(0.2, 0.3, 0.5)));
    CHECK_THROWS_AS(validate_simplex(Eigen::Vector3d(0.2, 0.3, 0.6)), ConfigError);
    CHECK_THROWS_AS(validate_simplex(Eigen::Vector3d(-0.1, 0.6, 0.5)), ConfigError);
}

TEST_CASE("median+sigma coefficients on the five-term norm table") {
    NormTable t;
    t.models = {"Kernel", "RFoob", "SVM"};
    t.norms.resize(5, 3);
    t.norms.col(0) << 1.01, 0.86, 1.22, 3.23, 9.72;
    t.norms.col(1) << 1.93, 1.24, 3.17, 8.15, 25.18;
    t.norms.col(2) << 1.09, 0.79, 1.72, 3.82, 28.25;
    const MedianSigma ms = median_sigma_coeffs(t);

    // Independent recomputation.
    Eigen::Vector3d raw;
    for (int m = 0; m < 3; ++m) {
        std::vector<double> v(t.norms.col(m).data(), t.norms.col(m).data() + 5);
        std::sort(v.begin(), v.end());
        double mean = 0.0;
        for (double x : v) mean += x / 5.0;
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        raw(m) = v[2] + std::sqrt(ss / 4.0);
    }
    for (int m = 0; m < 3; ++m) {
        CHECK(ms.raw(m) == doctest::Approx(raw(m)).epsilon(1e-13));
        CHECK(ms.coefficients(m) == doctest::Approx(raw(m) / raw.sum()).epsilon(1e-13));
    }
    // Reference fixture values.
    CHECK(ms.median(0) == doctest::Approx(1.22).epsilon(1e-15));
    CHECK(ms.stdev(0) == doctest::Approx(3.7650723764623706).epsilon(1e-13));
    CHECK(ms.coefficients(0) == doctest::Approx(0.1570041471285353).epsilon(1e-12));
    CHECK(ms.coefficients(1) == doctest::Approx(0.4151903621755246).epsilon(1e-12));
    CHECK(ms.coefficients(2) == doctest::Approx(0.4278054906959402).epsilon(1e-12));
    CHECK(std::abs(ms.coefficients.sum() - 1.0) <= 1e-12);

    NormTable doubled = t;
    doubled.norms.col(1) *= 2.0;
    const MedianSigma d = median_sigma_coeffs(doubled);
    CHECK(d.raw(1) == doctest::Approx(2 * ms.raw(1)).epsilon(1e-13));
    CHECK(d.raw(0) == doctest::Approx(ms.raw(0)).epsilon(1e-15));

    NormTable equal = t;
    equal.norms.col(1) = equal.norms.col(0);
    equal.norms.col(2) = equal.norms.col(0);
    const MedianSigma e = median_sigma_coeffs(equal);
    for (int m = 0; m < 3; ++m) CHECK(e.coefficients(m) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

    NormTable one = t;
    one.norms = t.norms.topRows(1);
    CHECK_THROWS_AS(median_sigma_coeffs(one), DegenerateInput);
}

TEST_CASE("level restoration keeps direction and matches plain averaging for equal norms") {
    const Eigen::Vector3d a(1, 2, 3), b(3, 2, 1);
    std::vector<ModelOutput> outs{ModelOutput("Kernel", {a}), ModelOutput("SVM", {b})};
    const auto c = CoefficientSet::uniform(1, {"Kernel", "SVM"});
    const auto raw = batch_ensemble(outs, c);
    const auto lvl = restore_level(raw, outs, c);
    CHECK((lvl[0] - 0.5 * (a + b)).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK(std::abs(raw[0].normalized().dot(lvl[0].normalized()) - 1.0) <= 1e-15);
}

TEST_CASE("simplex grid and coefficient search") {
    const auto g = simplex_grid(3, 4);
    CHECK(g.size() == 15);
    for (const auto& a : g) CHECK(std::abs(a.sum() - 1.0) <= 1e-15);

    // Model 0 reproduces the target, so the search must put all mass on it.
    std::mt19937_64 rng(2);
    std::vector<Eigen::VectorXd> y{random_positive(rng, 20), random_positive(rng, 30)};
    std::vector<ModelOutput> outs{ModelOutput("Kernel", {y[0], y[1]}),
                                  ModelOutput("SVM", {random_positive(rng, 20), random_positive(rng, 30)})};
    const GridSearchResult r = search_coefficients(outs, y, 10);
    CHECK(r.best(0) == doctest::Approx(1.0));
    CHECK(r.best_mse <= 1e-20);
    CHECK(r.evaluated.size() == 11);
}
