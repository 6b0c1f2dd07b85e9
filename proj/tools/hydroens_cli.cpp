#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hydroens/errors.hpp"
#include "hydroens/io/config.hpp"
#include "hydroens/io/csv.hpp"
#include "hydroens/io/pipeline.hpp"
#include "hydroens/log.hpp"
#include "hydroens/metrics.hpp"
#include "hydroens/sst_weights.hpp"
#include "hydroens/util.hpp"

namespace {

using namespace hydroens;
using nlohmann::json;

io::ExperimentConfig config_from(const std::string& path) { return io::load_config(path); }

void print_table2(const std::vector<io::Table2Row>& rows) {
    std::printf("%-14s %-7s %12s %12s %12s\n", "method", "weight", "FCD", "RMSE", "MAE");
    for (const auto& r : rows)
        std::printf("%-14s %-7s %12.4f %12.3f %12.3f\n", r.method.c_str(), r.weighting.c_str(), r.fcd, r.rmse, r.mae);
}

int weights_standalone(const std::string& features, const std::string& out, const std::string& embedding_out,
                       std::uint64_t seed, double perplexity, double epsilon) {
    const auto feats = io::read_features(features);
    SstWeightOptions opt;
    opt.tsne.seed = seed;
    opt.tsne.perplexity = perplexity;
    opt.epsilon = epsilon;
    const SstWeightResult r = compute_sst_weights(feats, opt);
    if (!out.empty()) io::write_weights(out, r.weights);
    if (!embedding_out.empty()) io::write_embedding(embedding_out, r.weights.months, r.embedding.embedding);
    json rep{{"months", feats.size()}, {"perplexity", r.embedding.perplexity}, {"kl_final", r.embedding.kl_final}};
    try {
        rep["flood_month_silhouette"] = flood_month_silhouette(r.embedding.embedding, r.weights.months);
    } catch (const DegenerateInput& e) {
        rep["flood_month_silhouette"] = nullptr;
        rep["silhouette_error"] = e.what();
    }
    std::cout << rep.dump(2) << '\n';
    return 0;
}

int silhouette_report(const std::string& embedding_in) {
    const auto [months, Y] = io::read_embedding(embedding_in);
    json rep{{"months", months.size()}, {"dims", Y.cols()}, {"flood_month_silhouette", flood_month_silhouette(Y, months)}};
    std::cout << rep.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hydroens: l2-normalized ensemble forecasting of dam inflow"};
    app.require_subcommand(1);
    app.fallthrough();
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Only print warnings");

    std::string config;
    auto with_config = [&](CLI::App* sub) { sub->add_option("-c,--config", config, "Experiment config (JSON)")->required(); };

    auto* synth = app.add_subcommand("synth", "Write the synthetic scenario as CSV files");
    with_config(synth);

    auto* weights = app.add_subcommand("weights", "SST weights: t-SNE embedding, first component, min-max");
    weights->add_option("-c,--config", config, "Experiment config; runs the pipeline stage");
    std::string features, weights_out, embedding_out, embedding_in;
    std::uint64_t seed = 0;
    double perplexity = 0.0, epsilon = 1e-8;
    weights->add_option("--features", features, "Feature CSV (month_id,z1..zK)")->check(CLI::ExistingFile);
    weights->add_option("--out", weights_out, "Weight CSV to write (month_id,STW)");
    weights->add_option("--embedding-out", embedding_out, "Embedding CSV to write (month_id,v1,v2,v3)");
    weights->add_option("--embedding-in", embedding_in, "Embedding CSV: report the flood-month silhouette only")
        ->check(CLI::ExistingFile);
    weights->add_option("--seed", seed, "t-SNE seed (standalone mode)");
    weights->add_option("--perplexity", perplexity, "t-SNE perplexity; 0 picks min(30, (M-1)/3)");
    weights->add_option("--epsilon", epsilon, "Weight floor");

    auto* train = app.add_subcommand("train", "Fit the feature pipeline and tune/fit every learner");
    with_config(train);
    auto* forecast = app.add_subcommand("forecast", "Base-model forecasts on the test terms");
    with_config(forecast);
    auto* ensemble = app.add_subcommand("ensemble", "Global, median+sigma and batch-term l2 ensembles");
    with_config(ensemble);
    auto* evaluate = app.add_subcommand("evaluate", "Skill report, comparison table and plot data");
    with_config(evaluate);
    auto* importance = app.add_subcommand("importance", "OOB permutation importance of the forest");
    with_config(importance);
    auto* run = app.add_subcommand("run", "Every stage in order");
    with_config(run);

    auto* prop = app.add_subcommand("prop-check", "Random sweep of the skill inequality for normalized ensembles");
    long instances = 100000;
    int models = 3, n_min = 4, n_max = 64;
    std::uint64_t prop_seed = 1;
    prop->add_option("--instances", instances, "Number of random instances")->check(CLI::PositiveNumber);
    prop->add_option("--models", models, "Models per instance")->check(CLI::PositiveNumber);
    prop->add_option("--n-min", n_min, "Smallest vector length")->check(CLI::PositiveNumber);
    prop->add_option("--n-max", n_max, "Largest vector length")->check(CLI::PositiveNumber);
    prop->add_option("--seed", prop_seed, "Sweep seed");

    CLI11_PARSE(app, argc, argv);

    if (quiet)
        log::set_sink([](log::Level l, const std::string& m) {
            if (l == log::Level::warning) std::cerr << "warning: " << m << '\n';
        });

    try {
        if (*synth) {
            const auto dir = io::stage_synth(config_from(config));
            std::cout << "wrote " << dir.string() << '\n';
        } else if (*weights) {
            if (!embedding_in.empty()) return silhouette_report(embedding_in);
            if (!features.empty()) return weights_standalone(features, weights_out, embedding_out, seed, perplexity, epsilon);
            if (config.empty()) throw ConfigError("weights needs --config, --features or --embedding-in");
            const auto cfg = config_from(config);
            const auto r = io::stage_weights(cfg, io::load_dataset(cfg));
            std::cout << "flood-month silhouette " << format_double(r.silhouette) << '\n';
        } else if (*train) {
            const auto cfg = config_from(config);
            io::stage_train(cfg, io::load_dataset(cfg));
        } else if (*forecast) {
            const auto cfg = config_from(config);
            io::stage_forecast(cfg, io::load_dataset(cfg));
        } else if (*ensemble) {
            io::stage_ensemble(config_from(config));
        } else if (*evaluate) {
            const auto cfg = config_from(config);
            print_table2(io::stage_evaluate(cfg, io::load_dataset(cfg)).table2);
        } else if (*importance) {
            const auto cfg = config_from(config);
            const auto r = io::stage_importance(cfg, io::load_dataset(cfg));
            for (const auto& [w, cv] : r.coefficient_of_variation)
                std::cout << "importance CV (" << w << ") " << format_double(cv) << '\n';
        } else if (*run) {
            const auto s = io::run_pipeline(config_from(config));
            print_table2(s.evaluation.table2);
            int failed = 0;
            for (const auto& p : s.evaluation.proposition) failed += p.holds ? 0 : 1;
            std::printf("skill inequality per term: %d of %zu hold\n", static_cast<int>(s.evaluation.proposition.size()) - failed,
                        s.evaluation.proposition.size());
            std::printf("elapsed %.1f s\n", s.seconds);
        } else if (*prop) {
            const auto s = proposition1_sweep(instances, prop_seed, models, n_min, n_max);
            std::printf("instances %ld  violations %ld  strict candidates %ld  strict failures %ld  degenerate %ld\n",
                        s.instances, s.violations, s.strict_candidates, s.strict_failures, s.degenerate);
            std::printf("worst lhs - rhs %.3e  elapsed %.2f s\n", s.worst_excess, s.seconds);
            return s.violations == 0 && s.strict_failures == 0 ? 0 : 1;
        }
    } catch (const hydroens::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
