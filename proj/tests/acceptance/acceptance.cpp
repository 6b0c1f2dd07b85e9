// One PASS/FAIL line per acceptance criterion; exit status 1 when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hydroens/ensemble.hpp"
#include "hydroens/errors.hpp"
#include "hydroens/io/config.hpp"
#include "hydroens/io/pipeline.hpp"
#include "hydroens/learners/model.hpp"
#include "hydroens/log.hpp"
#include "hydroens/metrics.hpp"
#include "hydroens/sst_weights.hpp"
#include "hydroens/synth.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace hydroens;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Eigen::VectorXd positive_vector(std::mt19937_64& rng, Eigen::Index n) {
    std::uniform_real_distribution<double> u(0.05, 10.0);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
    return v;
}

Eigen::VectorXd dirichlet(std::mt19937_64& rng, int m) {
    std::exponential_distribution<double> e(1.0);
    Eigen::VectorXd a(m);
    for (int i = 0; i < m; ++i) a(i) = e(rng);
    return a / a.sum();
}

Eigen::MatrixXd uniform(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd X(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) X(i, j) = u(rng);
    return X;
}

double relative(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

Outcome proposition_sweep() {
    const PropositionSweep s = proposition1_sweep(100000, 20190601, 3, 4, 64);
    Outcome o;
    o.pass = s.instances == 100000 && s.violations == 0 && s.strict_failures == 0 && s.seconds < 30.0;
    o.detail = std::to_string(s.instances) + " instances, " + std::to_string(s.violations) + " violations (tol 1e-12), " +
               std::to_string(s.strict_failures) + "/" + std::to_string(s.strict_candidates) +
               " non-strict where lhs > 1e-6, " + fmt("%.2f s", s.seconds) + " (limit 30 s)";
    return o;
}

Outcome mse_identity() {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> len(2, 200);
    double worst = 0.0;
    int failures = 0;
    for (int k = 0; k < 10000; ++k) {
        const int n = len(rng);
        const double scale = std::pow(10.0, 6.0 * (k % 7) / 6.0 - 3.0);
        Eigen::VectorXd y(n), h(n);
        for (int i = 0; i < n; ++i) {
            y(i) = scale * g(rng);
            h(i) = y(i) + scale * (k % 3) * g(rng);
        }
        const double r = mse_skill_identity(h, y).relative;
        worst = std::max(worst, r);
        failures += r <= 1e-10 ? 0 : 1;
    }
    return {failures == 0, "10000 pairs, worst relative residual " + fmt("%.2e", worst) + " (tol 1e-10), " +
                               std::to_string(failures) + " failures"};
}

Outcome batch_reduction() {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> len(4, 128);
    const std::vector<std::string> models{"Kernel", "RFoob", "SVM"};
    int mismatched = 0;
    double worst_norm = 0.0;
    for (int k = 0; k < 100; ++k) {
        const int n = len(rng);
        std::vector<Eigen::VectorXd> whole;
        std::vector<ModelOutput> outputs;
        for (const auto& m : models) {
            whole.push_back(positive_vector(rng, n));
            outputs.emplace_back(m, std::vector<Eigen::VectorXd>{whole.back()});
        }
        const Eigen::VectorXd a = dirichlet(rng, 3);
        const Eigen::VectorXd batch = batch_ensemble(outputs, CoefficientSet::repeated(1, models, a)).front();
        const Eigen::VectorXd global = global_ensemble(whole, a, models);
        if (!(batch.array() == global.array()).all()) ++mismatched;

        // Multi-term instance: every normalized term carries l2-norm N_b.
        for (int b = 0; b < 4; ++b) {
            const Eigen::VectorXd v = positive_vector(rng, len(rng));
            const double N = static_cast<double>(v.size());
            worst_norm = std::max(worst_norm, std::abs(l2_norm(l2_normalized(v)) - N) / N);
        }
    }
    return {mismatched == 0 && worst_norm <= 1e-9,
            "B=1 batch vs global: " + std::to_string(mismatched) + "/100 not bit-identical; worst |norm - N_b| / N_b " +
                fmt("%.2e", worst_norm) + " (tol 1e-9)"};
}

Outcome homogeneity() {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> len(4, 96);
    std::uniform_real_distribution<double> c_dist(0.0, 1000.0);
    const std::vector<std::string> models{"Kernel", "RFoob", "SVM"};
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        std::vector<ModelOutput> outputs;
        std::vector<Eigen::VectorXd> whole;
        const std::vector<int> lengths{len(rng), len(rng), len(rng)};
        for (const auto& m : models) {
            std::vector<Eigen::VectorXd> terms;
            for (int n : lengths) terms.push_back(positive_vector(rng, n));
            outputs.emplace_back(m, terms);
            whole.push_back(outputs.back().concatenated());
        }
        CoefficientSet coeffs;
        coeffs.models = models;
        coeffs.alpha.resize(3, 3);
        for (int b = 0; b < 3; ++b) coeffs.alpha.row(b) = dirichlet(rng, 3).transpose();
        const Eigen::VectorXd a = dirichlet(rng, 3);

        const auto base_batch = batch_ensemble(outputs, coeffs);
        const Eigen::VectorXd base_global = global_ensemble(whole, a, models);
        const int m = static_cast<int>(k % 3);
        double c = c_dist(rng);
        while (c == 0.0) c = c_dist(rng);
        outputs[static_cast<std::size_t>(m)] = outputs[static_cast<std::size_t>(m)].scaled(c);
        whole[static_cast<std::size_t>(m)] *= c;
        const auto scaled_batch = batch_ensemble(outputs, coeffs);
        worst = std::max(worst, relative(global_ensemble(whole, a, models), base_global));
        for (std::size_t b = 0; b < base_batch.size(); ++b) worst = std::max(worst, relative(scaled_batch[b], base_batch[b]));
    }
    return {worst < 1e-9, "100 instances, c in (0, 1000], worst relative change " + fmt("%.2e", worst) + " (tol 1e-9)"};
}

std::vector<MonthKey> months36() {
    std::vector<MonthKey> out;
    for (int i = 0; i < 36; ++i) out.push_back(MonthKey::from_index(MonthKey{2016, 1}.index() + i));
    return out;
}

Outcome sst_weight_pipeline() {
    const auto months = months36();
    SstWeightOptions opt;
    opt.tsne.seed = 2019;
    const auto separated = gen_sst_features(months, 64, 8.0, 11);
    const SstWeightResult r1 = compute_sst_weights(separated, opt);
    const SstWeightResult r2 = compute_sst_weights(separated, opt);

    const bool exact = r1.weights.monthly.minCoeff() == 1e-8 && r1.weights.monthly.maxCoeff() == 1.0 + 1e-8;
    bool monotone = true;
    const Eigen::VectorXd& W = r1.component.scores;
    for (Eigen::Index i = 0; i < W.size(); ++i)
        for (Eigen::Index j = 0; j < W.size(); ++j)
            if (W(i) < W(j) && !(r1.standardized(i) <= r1.standardized(j) && r1.weights.monthly(i) <= r1.weights.monthly(j)))
                monotone = false;
    const bool reproducible = (r1.embedding.embedding.array() == r2.embedding.embedding.array()).all() &&
                              (r1.weights.monthly.array() == r2.weights.monthly.array()).all();
    const double sil_high = flood_month_silhouette(r1.embedding.embedding, months);
    const SstWeightResult r0 = compute_sst_weights(gen_sst_features(months, 64, 0.0, 11), opt);
    const double sil_zero = flood_month_silhouette(r0.embedding.embedding, months);

    Outcome o;
    o.pass = exact && monotone && reproducible && sil_high > 0.5 && sil_zero < 0.2;
    o.detail = std::string("min/max exact: ") + (exact ? "yes" : "no") + ", order preserved: " + (monotone ? "yes" : "no") +
               ", bit-reproducible: " + (reproducible ? "yes" : "no") + ", silhouette separated " +
               fmt("%.3f", sil_high) + " (> 0.5), unseparated " + fmt("%.3f", sil_zero) + " (< 0.2)";
    return o;
}

Outcome learner_oracles() {
    std::mt19937_64 rng(12);

    double kernel_worst = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
        const Eigen::MatrixXd X = uniform(rng, 200, 4);
        Eigen::VectorXd y(200);
        for (Eigen::Index i = 0; i < 200; ++i) y(i) = 50.0 * std::sin(4.0 * X(i, 0)) + 20.0 * X(i, 1) * X(i, 2);
        Eigen::VectorXd w = uniform(rng, 200, 1).col(0);
        KernelRegSpec spec;
        spec.expansion_dims = 48;
        spec.lambda = 1e-3;
        const KernelModel m = fit_kernel(X, y, w, spec, 40 + static_cast<std::uint64_t>(rep));
        const Eigen::MatrixXd Phi = m.features.map(m.scaler.apply(X));
        const Eigen::VectorXd sol = oracle::weighted_ridge(Phi, y, w, spec.lambda);
        Eigen::VectorXd got(sol.size());
        got << m.intercept, m.beta;
        kernel_worst = std::max(kernel_worst, (got - sol).cwiseAbs().maxCoeff() / std::max(1.0, sol.cwiseAbs().maxCoeff()));
    }

    double svr_worst = 0.0;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        const Eigen::Index n = 2 + rep % 5;
        const Eigen::MatrixXd X = uniform(rng, n, 3);
        SvrSpec spec;
        spec.poly_order = 2.0 + 0.97 * u(rng);
        Eigen::MatrixXd K(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) K(i, j) = svr_kernel(spec, X.row(i).transpose(), X.row(j).transpose());
        Eigen::VectorXd z(n), C(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            z(i) = 4.0 * u(rng) - 2.0;
            C(i) = 0.05 + 2.0 * u(rng);
        }
        SvrDualProblem p;
        p.size = n;
        p.kernel_column = [&K](Eigen::Index i, Eigen::Ref<Eigen::VectorXd> out) { out = K.col(i); };
        p.kernel_diagonal = K.diagonal();
        p.target = z;
        p.upper = C;
        p.epsilon = 0.3 * u(rng);
        p.tolerance = 1e-10;
        const SvrDualSolution sol = solve_svr_dual(p);
        const double want = oracle::svr_dual_minimum(K, z, C, p.epsilon);
        const double got = oracle::svr_dual_objective(K, z, p.epsilon, sol.coefficients());
        svr_worst = std::max(svr_worst, std::abs(got - want) / std::max(1.0, std::abs(want)));
    }

    int forest_bad = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::mt19937_64 r(seed);
        const Eigen::MatrixXd X = uniform(r, 80, 3);
        Eigen::VectorXd y = X.col(0) * 3.0 + X.col(1);
        Eigen::VectorXd w = uniform(r, 80, 1).col(0);
        for (Eigen::Index i = 0; i < 80; i += 3) w(i) = 0.0;
        ForestSpec spec;
        spec.n_trees = 20;
        spec.seed = seed;
        const ForestModel a = fit_forest(X, y, w, spec);
        bool ok = true;
        for (const auto& tree : a.trees)
            for (int row : tree.in_bag) ok = ok && w(row) > 0.0;
        for (Eigen::Index i = 0; i < 80; i += 3) y(i) = -1e6;
        const ForestModel b = fit_forest(X, y, w, spec);
        ok = ok && (predict_forest(a, X).array() == predict_forest(b, X).array()).all();
        forest_bad += ok ? 0 : 1;
    }

    Eigen::MatrixXd X = uniform(rng, 500, 2);
    const Eigen::VectorXd target = 100.0 * X.col(1);
    X.col(0) = target;  // exact copy of the target; column 1 becomes pure noise below
    X.col(1) = uniform(rng, 500, 1).col(0);
    ForestSpec fspec;
    fspec.n_trees = 100;
    fspec.mtry = 2;
    fspec.seed = 5;
    const ForestModel forest = fit_forest(X, target, Eigen::VectorXd::Ones(500), fspec);
    const ImportanceResult imp = oob_importance(forest, X, {3, 6});
    const double ratio = imp.reported(1) / imp.reported(0);

    Outcome o;
    o.pass = kernel_worst <= 1e-9 && svr_worst <= 1e-6 && forest_bad == 0 && imp.reported(0) > 0.0 && ratio <= 0.05;
    o.detail = "kernel vs ridge oracle (N=200) " + fmt("%.2e", kernel_worst) + " (tol 1e-9); SVR vs enumerated QP (N<=6) " +
               fmt("%.2e", svr_worst) + " (tol 1e-6); forest zero-weight leaks " + std::to_string(forest_bad) +
               "/50 seeds; noise/copy importance " + fmt("%.4f", ratio) + " (<= 0.05)";
    return o;
}

Outcome importance_stability(const io::ExperimentConfig& base, const fs::path& work) {
    int better = 0, evaluated = 0;
    std::string per_seed;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        io::ExperimentConfig c = base;
        c.seed = seed;
        c.data.scenario.seed = seed;
        c.output_dir = work / "importance" / ("seed_" + std::to_string(seed));
        c.weights.enabled = true;
        c.learners.clear();
        for (const auto& l : base.learners)
            if (kind_of(l.spec) == ModelKind::forest) {
                io::LearnerConfig f = l;
                f.tune = false;
                c.learners.push_back(f);
            }
        const io::Dataset data = io::load_dataset(c);
        io::stage_weights(c, data);
        io::stage_train(c, data);
        const io::ImportanceReport r = io::stage_importance(c, data);
        const double cv_on = r.coefficient_of_variation.at("ws_on");
        const double cv_never = r.coefficient_of_variation.at("never");
        ++evaluated;
        if (cv_on <= cv_never) ++better;
        per_seed += (per_seed.empty() ? "" : " ") + fmt("%.2f", cv_on) + "/" + fmt("%.2f", cv_never);
    }
    const double share = static_cast<double>(better) / evaluated;
    return {share >= 0.70, std::to_string(better) + "/" + std::to_string(evaluated) +
                               " seeds with CV(ws_on) <= CV(never) (>= 70%); ws_on/never: " + per_seed};
}

Outcome end_to_end(const io::ExperimentConfig& base, const fs::path& work, io::RunSummary& summary) {
    io::ExperimentConfig c = base;
    c.output_dir = work / "run";
    c.ensemble.variant = io::EnsembleVariant::batch;
    const auto t0 = Clock::now();
    summary = io::run_pipeline(c);
    const double secs = seconds_since(t0);
    int held = 0;
    double worst = -1e300;
    for (const auto& p : summary.evaluation.proposition) {
        held += p.rhs >= p.lhs - 1e-12 ? 1 : 0;
        worst = std::max(worst, p.lhs - p.rhs);
    }
    const auto total = summary.evaluation.proposition.size();
    const bool shape = c.data.scenario.train_years == 12 && c.data.scenario.test_terms == 5;
    return {shape && secs < 300.0 && total == 5 * c.weightings().size() && held == static_cast<int>(total),
            fmt("%.1f s", secs) + " (limit 300 s) for 12 training years + 5 test terms; skill inequality held on " +
                std::to_string(held) + "/" + std::to_string(total) + " term x weighting cells, worst lhs - rhs " +
                fmt("%.3e", worst)};
}

Outcome table2_report(const io::ExperimentConfig& base, const fs::path& work, io::RunSummary& summary) {
    if (summary.evaluation.table2.empty()) end_to_end(base, work, summary);
    const auto& rows = summary.evaluation.table2;
    const std::vector<std::string> methods{"Kernel", "RFoob", "SVM", "l2", "median_sigma", "batch", "all"};
    bool complete = rows.size() == methods.size() * 2;
    bool finite = true;
    for (const std::string w : {"never", "ws_on"})
        for (const auto& m : methods) {
            bool found = false;
            for (const auto& r : rows)
                if (r.method == m && r.weighting == w) {
                    found = true;
                    finite = finite && std::isfinite(r.fcd) && std::isfinite(r.rmse) && std::isfinite(r.mae);
                }
            complete = complete && found;
        }
    const bool written = fs::exists(work / "run" / "report" / "table2.csv");
    return {complete && finite && written, std::to_string(rows.size()) + " rows (7 methods x never/ws_on), all cells " +
                                               (finite ? "finite" : "NOT finite") + ", table2.csv " +
                                               (written ? "written" : "missing")};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hydroens acceptance suite"};
    std::string config_path, work_dir = "acceptance_run", only;
    app.add_option("--config", config_path, "Experiment config for the end-to-end criteria")->required()->check(CLI::ExistingFile);
    app.add_option("--work", work_dir, "Scratch directory for pipeline artifacts");
    app.add_option("--only", only, "Run a single criterion by id");
    CLI11_PARSE(app, argc, argv);

    log::set_sink([](log::Level, const std::string&) {});
    const fs::path work = fs::absolute(work_dir);
    fs::remove_all(work);
    fs::create_directories(work);

    io::ExperimentConfig base = io::load_config(config_path);
    io::RunSummary summary;

    struct Criterion {
        const char* id;
        std::function<Outcome()> check;
    };
    const std::vector<Criterion> criteria{
        {"skill-inequality-sweep", proposition_sweep},
        {"mse-skill-identity", mse_identity},
        {"batch-reduces-to-global", batch_reduction},
        {"l2-homogeneity", homogeneity},
        {"sst-weight-pipeline", sst_weight_pipeline},
        {"learner-oracles", learner_oracles},
        {"importance-stability", [&] { return importance_stability(base, work); }},
        {"end-to-end-run", [&] { return end_to_end(base, work, summary); }},
        {"comparison-table", [&] { return table2_report(base, work, summary); }},
    };

    int failed = 0, ran = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && only != c.id) continue;
        ++ran;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s %-24s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    if (ran == 0) {
        std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
        return 2;
    }
    std::printf("%d of %d criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
