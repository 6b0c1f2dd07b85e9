#include "hydroens/io/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "hydroens/ensemble.hpp"
#include "hydroens/errors.hpp"
#include "hydroens/learners/tune.hpp"
#include "hydroens/log.hpp"
#include "hydroens/synth.hpp"
#include "hydroens/util.hpp"

namespace hydroens::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void write_json(const fs::path& path, const json& j) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("missing artifact " + path.string() + " (run the earlier stage first)");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw SchemaError("malformed artifact " + path.string() + ": " + e.what());
    }
}

json vec_json(const Eigen::Ref<const Eigen::VectorXd>& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vec(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat_json(const Eigen::MatrixXd& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Eigen::MatrixXd json_mat(const json& j) {
    const auto d = j.at("data").get<std::vector<double>>();
    const auto r = j.at("rows").get<Eigen::Index>(), c = j.at("cols").get<Eigen::Index>();
    if (static_cast<Eigen::Index>(d.size()) != r * c) throw SchemaError("matrix payload size mismatch");
    return Eigen::Map<const Eigen::MatrixXd>(d.data(), r, c);
}

std::vector<HourStamp> origins(const std::vector<HourStamp>& targets, int lead) {
    std::vector<HourStamp> t;
    t.reserve(targets.size());
    for (auto x : targets) t.push_back(x - lead);
    return t;
}

std::vector<HourStamp> term_hours(const FloodBatchSet& terms) {
    std::vector<HourStamp> out;
    for (const auto& term : terms)
        for (HourStamp t = term.start; t <= term.end; t = t + 1) out.push_back(t);
    return out;
}

const HydroSeries& target_series(const Dataset& data) {
    auto it = data.sources.series.find(data.target);
    if (it == data.sources.series.end()) throw ConfigError("target series '" + data.target + "' not found");
    return it->second;
}

FeaturePipeline load_pipeline(const ArtifactPaths& paths) { return pipeline_from_json(read_json(paths.feature_pipeline())); }

WeightSeries load_weights(const ExperimentConfig& config, const ArtifactPaths& paths) {
    if (!fs::exists(paths.weights())) throw ConfigError("weights are enabled but " + paths.weights().string() + " is missing (run `weights`)");
    return read_weights(paths.weights(), config.weights.options.epsilon);
}

std::vector<Eigen::VectorXd> split_like(const Eigen::VectorXd& v, const std::vector<Eigen::VectorXd>& shape) {
    std::vector<Eigen::VectorXd> out;
    Eigen::Index at = 0;
    for (const auto& s : shape) {
        out.push_back(v.segment(at, s.size()));
        at += s.size();
    }
    return out;
}

// Whole-range ensemble (one normalization over all test hours), raw and level-restored.
std::pair<std::vector<Eigen::VectorXd>, std::vector<Eigen::VectorXd>> whole_range(
    const std::vector<ModelOutput>& outputs, const Eigen::VectorXd& a) {
    std::vector<ModelOutput> joined;
    std::vector<std::string> tags;
    for (const auto& o : outputs) {
        joined.emplace_back(o.model(), std::vector<Eigen::VectorXd>{o.concatenated()});
        tags.push_back(o.model());
    }
    const auto coeffs = CoefficientSet::repeated(1, tags, a);
    const auto raw = global_ensemble(joined, a);
    const auto level = restore_level({raw}, joined, coeffs);
    return {split_like(raw, outputs.front().terms()), split_like(level.front(), outputs.front().terms())};
}

std::vector<ModelOutput> outputs_from(const TermTable& table, const std::vector<std::string>& tags) {
    std::vector<ModelOutput> out;
    for (const auto& tag : tags) out.emplace_back(tag, table.column(tag));
    return out;
}

template <class F>
auto in_stage(const std::string& stage, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const ZeroNormError& e) {
        throw StageError(stage, e.what(), e.term());
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

std::string fingerprint_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return hex64(fnv1a(std::string_view(bytes)));
}

}  // namespace

Eigen::VectorXd SealedTargets::open(const EvaluateKey&, const std::vector<HourStamp>& times) const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(times.size()));
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto idx = target_.index_of(times[i]);
        if (!idx) throw RangeError("target has no value at " + times[i].to_string());
        y(static_cast<Eigen::Index>(i)) = target_.observed(*idx) ? target_.value(*idx) : kNaN;
    }
    return y;
}

fs::path ArtifactPaths::data_dir(const ExperimentConfig& c) const {
    return c.data.dir.empty() ? root / "data" : c.data.dir;
}

Dataset load_dataset(const ExperimentConfig& config) {
    Dataset d;
    d.target = config.data.target;
    FloodBatchSet test;
    if (config.data.source == "synthetic") {
        Scenario s = generate_scenario(config.data.scenario);
        d.sources = s.sources();
        d.train_terms = s.train_terms;
        test = s.test_terms;
        d.sst = std::move(s.sst);
    } else {
        const fs::path dir = config.data.dir;
        d.sources.series = read_series_table(dir / config.data.series);
        d.sources.grid = read_grid(dir / config.data.grid);
        d.sst = read_features(dir / config.data.sst_features);
        d.train_terms = read_terms(dir / config.data.train_terms);
        test = read_terms(dir / config.data.test_terms);
    }
    if (d.train_terms.overlaps(test)) throw ConfigError("training and test terms overlap");
    const HydroSeries& y = target_series(d);
    for (const auto* set : {&d.train_terms, &test})
        for (const auto& t : *set)
            if (!y.contains(t.start) || !y.contains(t.end))
                throw RangeError("term " + std::to_string(t.id) + " lies outside the target series");
    d.sealed = SealedTargets(y, test);
    return d;
}

RowSet build_rows(const FeaturePipeline& pipeline, const FeatureSources& sources, const FloodBatchSet& terms,
                  int lead_hours) {
    const auto hours = term_hours(terms);
    FeatureTable table = pipeline.transform(sources, origins(hours, lead_hours));
    RowSet rs;
    std::vector<Eigen::Index> keep;
    std::size_t at = 0, dropped = 0;
    for (const auto& term : terms) {
        rs.term_ids.push_back(term.id);
        rs.targets.emplace_back();
        for (std::size_t k = 0; k < term.size(); ++k, ++at) {
            if (!table.valid[at]) {
                ++dropped;
                continue;
            }
            keep.push_back(static_cast<Eigen::Index>(at));
            rs.targets.back().push_back(hours[at]);
            rs.term_of_row.push_back(term.id);
            rs.time_of_row.push_back(hours[at]);
        }
        if (rs.targets.back().empty()) throw DegenerateInput("term " + std::to_string(term.id) + " has no usable rows");
    }
    if (dropped > 0) log::warn(std::to_string(dropped) + " term hours dropped for incomplete predictors");
    rs.features.names = table.names;
    rs.features.dummy = table.dummy;
    rs.features.X.resize(static_cast<Eigen::Index>(keep.size()), table.X.cols());
    for (std::size_t i = 0; i < keep.size(); ++i) rs.features.X.row(static_cast<Eigen::Index>(i)) = table.X.row(keep[i]);
    rs.features.valid.assign(keep.size(), 1);
    return rs;
}

json pipeline_to_json(const FeaturePipeline& pipeline) {
    json j;
    j["format"] = "hydroens-features/1";
    j["steps"] = json::array();
    for (const auto& s : pipeline.steps()) j["steps"].push_back(feature_step_to_json(s));
    j["pca"] = json::array();
    for (const auto& [index, m] : pipeline.pca_models())
        j["pca"].push_back({{"step", index},
                            {"mean", vec_json(m.mean)},
                            {"components", mat_json(m.components)},
                            {"eigenvalues", vec_json(m.eigenvalues)},
                            {"explained_ratio", vec_json(m.explained_ratio)},
                            {"total_variance", m.total_variance}});
    return j;
}

FeaturePipeline pipeline_from_json(const json& j) {
    if (j.value("format", std::string()) != "hydroens-features/1") throw SchemaError("not a feature pipeline artifact");
    std::vector<FeatureStep> steps;
    for (const auto& s : j.at("steps")) steps.push_back(feature_step_from_json(s));
    std::map<std::size_t, PcaModel> models;
    for (const auto& p : j.at("pca")) {
        PcaModel m;
        m.mean = json_vec(p.at("mean"));
        m.components = json_mat(p.at("components"));
        m.eigenvalues = json_vec(p.at("eigenvalues"));
        m.explained_ratio = json_vec(p.at("explained_ratio"));
        m.total_variance = p.at("total_variance").get<double>();
        models[p.at("step").get<std::size_t>()] = std::move(m);
    }
    FeaturePipeline pipeline(std::move(steps));
    pipeline.set_fitted(std::move(models));
    return pipeline;
}

DesignMatrix training_design(const ExperimentConfig& config, const Dataset& data, const FeaturePipeline& pipeline,
                             const std::string& weighting, const WeightSeries* weights) {
    const RowSet rs = build_rows(pipeline, data.sources, data.train_terms, config.lead_hours);
    const HydroSeries& y = target_series(data);
    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < rs.time_of_row.size(); ++i) {
        const auto idx = y.index_of(rs.time_of_row[i]);
        if (idx && y.observed(*idx)) keep.push_back(static_cast<Eigen::Index>(i));
    }
    const auto n = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd X(n, rs.features.X.cols());
    Eigen::VectorXd yv(n);
    std::vector<int> term_of_row;
    std::vector<HourStamp> times;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = static_cast<std::size_t>(keep[static_cast<std::size_t>(i)]);
        X.row(i) = rs.features.X.row(keep[static_cast<std::size_t>(i)]);
        yv(i) = y.value(*y.index_of(rs.time_of_row[r]));
        term_of_row.push_back(rs.term_of_row[r]);
        times.push_back(rs.time_of_row[r]);
    }
    Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
    if (weighting == "ws_on") {
        if (!weights) throw ConfigError("ws_on weighting needs a weight series");
        w = weights_at(*weights, times);
    } else if (weighting != "never") {
        throw ConfigError("unknown weighting '" + weighting + "'");
    }
    return DesignMatrix(rs.features.names, rs.features.dummy, std::move(X), std::move(yv), std::move(w),
                        std::move(term_of_row), std::move(times));
}

fs::path stage_synth(const ExperimentConfig& config) {
    return in_stage("synth", [&] {
        if (config.data.source != "synthetic") throw ConfigError("synth needs data.source = synthetic");
        const Scenario s = generate_scenario(config.data.scenario);
        const fs::path dir = ArtifactPaths{config.output_dir}.data_dir(config);
        write_series_table(dir / config.data.series, s.series);
        write_grid(dir / config.data.grid, s.grid);
        write_features(dir / config.data.sst_features, s.sst);
        write_terms(dir / config.data.train_terms, s.train_terms);
        write_terms(dir / config.data.test_terms, s.test_terms);
        return dir;
    });
}

WeightStageResult stage_weights(const ExperimentConfig& config, const Dataset& data) {
    return in_stage("weights", [&] {
        ArtifactPaths paths{config.output_dir};
        SstWeightOptions options = config.weights.options;
        options.tsne.seed = derive_seed(config.seed, "tsne");
        WeightStageResult r;
        r.result = compute_sst_weights(data.sst, options);
        write_weights(paths.weights(), r.result.weights);
        write_embedding(paths.embedding(), r.result.weights.months, r.result.embedding.embedding);
        try {
            r.silhouette = flood_month_silhouette(r.result.embedding.embedding, r.result.weights.months);
        } catch (const DegenerateInput& e) {
            log::warn(std::string("silhouette unavailable: ") + e.what());
            r.silhouette = kNaN;
        }
        json rep{{"months", r.result.weights.months.size()},
                 {"perplexity", r.result.embedding.perplexity},
                 {"kl_initial", r.result.embedding.kl_initial},
                 {"kl_final", r.result.embedding.kl_final},
                 {"barnes_hut", r.result.embedding.barnes_hut},
                 {"explained_ratio", vec_json(r.result.component.explained_ratio)},
                 {"components_to_threshold", r.result.component.components_to_threshold},
                 {"flood_month_silhouette", std::isfinite(r.silhouette) ? json(r.silhouette) : json(nullptr)}};
        write_json(paths.weight_report(), rep);
        return r;
    });
}

void stage_train(const ExperimentConfig& config, const Dataset& data) {
    in_stage("train", [&] {
        ArtifactPaths paths{config.output_dir};
        FeaturePipeline pipeline(config.features.empty() ? default_feature_recipe(config.data.scenario.gauges)
                                                         : config.features);
        pipeline.fit(data.sources, origins(term_hours(data.train_terms), config.lead_hours));
        write_json(paths.feature_pipeline(), pipeline_to_json(pipeline));

        std::optional<WeightSeries> weights;
        if (config.weights.enabled) weights = load_weights(config, paths);

        for (const auto& weighting : config.weightings()) {
            const DesignMatrix dm = training_design(config, data, pipeline, weighting, weights ? &*weights : nullptr);
            write_json(paths.design(weighting), {{"fingerprint", dm.fingerprint()},
                                                 {"rows", dm.rows()},
                                                 {"columns", dm.column_names()},
                                                 {"weight_fingerprint", weight_fingerprint(dm.w())}});
            TermTable oof;
            oof.columns.push_back("actual");
            std::vector<Eigen::VectorXd> oof_cols{dm.y()};
            for (const auto& lc : config.learners) {
                const std::string tag = model_tag(kind_of(lc.spec));
                LearnerSpec spec = lc.spec;
                if (lc.tune) {
                    TuneOptions opts = lc.tuning;
                    opts.seed = derive_seed(config.seed, "tune/" + tag);
                    const TuneResult tr = tune(spec, default_search_space(kind_of(spec), dm.y()), dm.X(), dm.y(), dm.w(),
                                               dm.term_of_row(), opts);
                    write_json(paths.tune_log(weighting, tag), tune_log_json(tr));
                    spec = tr.best;
                }
                const FittedModel model = fit_model(spec, dm, derive_seed(config.seed, "fit/" + tag));
                fs::create_directories(paths.model(weighting, tag).parent_path());
                save_model(model, paths.model(weighting, tag));
                if (const auto* f = std::get_if<ForestModel>(&model.params)) {
                    oof_cols.push_back(f->oob_prediction);
                } else {
                    oof_cols.push_back(out_of_fold_predictions(spec, dm.X(), dm.y(), dm.w(), dm.term_of_row(),
                                                               lc.tuning.folds, derive_seed(config.seed, "oof/" + tag)));
                }
                oof.columns.push_back(tag);
            }
            // Rows lacking an out-of-sample prediction from any model are left out.
            for (Eigen::Index i = 0; i < dm.rows(); ++i) {
                bool ok = true;
                for (const auto& c : oof_cols) ok = ok && std::isfinite(c(i));
                if (!ok) continue;
                const int term = dm.term_of_row()[static_cast<std::size_t>(i)];
                if (oof.term_ids.empty() || oof.term_ids.back() != term) {
                    oof.term_ids.push_back(term);
                    oof.times.emplace_back();
                }
                oof.times.back().push_back(dm.time_of_row()[static_cast<std::size_t>(i)]);
            }
            oof.values.assign(oof_cols.size(), {});
            for (std::size_t c = 0; c < oof_cols.size(); ++c) {
                std::vector<double> cur;
                int current = std::numeric_limits<int>::min();
                for (Eigen::Index i = 0; i < dm.rows(); ++i) {
                    bool ok = true;
                    for (const auto& col : oof_cols) ok = ok && std::isfinite(col(i));
                    if (!ok) continue;
                    const int term = dm.term_of_row()[static_cast<std::size_t>(i)];
                    if (term != current && !cur.empty()) {
                        oof.values[c].push_back(Eigen::Map<Eigen::VectorXd>(cur.data(), static_cast<Eigen::Index>(cur.size())));
                        cur.clear();
                    }
                    current = term;
                    cur.push_back(oof_cols[c](i));
                }
                if (!cur.empty())
                    oof.values[c].push_back(Eigen::Map<Eigen::VectorXd>(cur.data(), static_cast<Eigen::Index>(cur.size())));
            }
            write_term_table(paths.oof(weighting), oof);
        }
        return 0;
    });
}

void stage_forecast(const ExperimentConfig& config, const Dataset& data) {
    in_stage("forecast", [&] {
        ArtifactPaths paths{config.output_dir};
        const FeaturePipeline pipeline = load_pipeline(paths);
        const RowSet rs = build_rows(pipeline, data.sources, data.sealed.terms(), config.lead_hours);
        for (const auto& weighting : config.weightings()) {
            TermTable table;
            table.term_ids = rs.term_ids;
            table.times = rs.targets;
            for (const auto& tag : config.model_tags()) {
                const FittedModel model = load_model(paths.model(weighting, tag));
                const Eigen::VectorXd yhat = predict(model, rs.features.names, rs.features.X);
                std::vector<Eigen::VectorXd> per_term;
                Eigen::Index at = 0;
                for (const auto& t : rs.targets) {
                    per_term.push_back(yhat.segment(at, static_cast<Eigen::Index>(t.size())));
                    at += static_cast<Eigen::Index>(t.size());
                }
                table.columns.push_back(tag);
                table.values.push_back(std::move(per_term));
            }
            write_term_table(paths.forecast(weighting), table);
        }
        return 0;
    });
}

void stage_ensemble(const ExperimentConfig& config) {
    in_stage("ensemble", [&] {
        ArtifactPaths paths{config.output_dir};
        const auto tags = config.model_tags();
        const auto M = static_cast<Eigen::Index>(tags.size());
        for (const auto& weighting : config.weightings()) {
            const TermTable fc = read_term_table(paths.forecast(weighting));
            const auto outputs = outputs_from(fc, tags);
            const std::size_t B = fc.term_ids.size();

            const Eigen::VectorXd a = config.ensemble.global_coefficients.size() > 0
                                          ? config.ensemble.global_coefficients
                                          : Eigen::VectorXd::Constant(M, 1.0 / static_cast<double>(M));
            auto [l2_raw, l2_level] = whole_range(outputs, a);

            const NormTable norms = NormTable::from(outputs, fc.term_ids);
            write_norm_table(paths.norms(weighting), norms);
            const MedianSigma ms = median_sigma_coeffs(norms);
            auto [ms_raw, ms_level] = whole_range(outputs, ms.coefficients);

            CoefficientSet batch;
            json batch_info;
            if (!config.ensemble.coefficients_file.empty()) {
                batch = read_coefficients(config.ensemble.coefficients_file, fc.term_ids);
                if (batch.models != tags) throw ConfigError("coefficient file models must be " + tags.front() + ", ... in learner order");
                batch_info = {{"source", config.ensemble.coefficients_file.string()}};
            } else {
                const TermTable oof = read_term_table(paths.oof(weighting));
                const GridSearchResult g =
                    search_coefficients(outputs_from(oof, tags), oof.column("actual"), config.ensemble.grid_divisions);
                batch = CoefficientSet::repeated(B, tags, g.best);
                batch_info = {{"source", "grid_search"},
                              {"divisions", config.ensemble.grid_divisions},
                              {"alpha", vec_json(g.best)},
                              {"training_mse", g.best_mse}};
            }
            const auto b_raw = batch_ensemble(outputs, batch);
            const auto b_level = restore_level(b_raw, outputs, batch);

            write_coefficients(paths.coefficients(weighting, "global"), CoefficientSet::repeated(B, tags, a), fc.term_ids);
            write_coefficients(paths.coefficients(weighting, "median_sigma"),
                               CoefficientSet::repeated(B, tags, ms.coefficients), fc.term_ids);
            write_coefficients(paths.coefficients(weighting, "batch"), batch, fc.term_ids);

            TermTable out;
            out.term_ids = fc.term_ids;
            out.times = fc.times;
            out.columns = {"l2", "median_sigma", "batch", "l2_level", "median_sigma_level", "batch_level"};
            out.values = {l2_raw, ms_raw, b_raw, l2_level, ms_level, b_level};
            write_term_table(paths.ensemble(weighting), out);

            write_json(paths.ensemble_report(weighting),
                       {{"selected", variant_name(config.ensemble.variant)},
                        {"models", tags},
                        {"global", {{"alpha", vec_json(a)}}},
                        {"median_sigma",
                         {{"median", vec_json(ms.median)},
                          {"stdev", vec_json(ms.stdev)},
                          {"raw", vec_json(ms.raw)},
                          {"alpha", vec_json(ms.coefficients)}}},
                        {"batch", batch_info}});
        }
        return 0;
    });
}

void write_table2(const fs::path& path, const std::vector<Table2Row>& rows) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << "method,weighting,FCD,RMSE,MAE\n";
    for (const auto& r : rows)
        out << r.method << ',' << r.weighting << ',' << format_double(r.fcd) << ',' << format_double(r.rmse) << ','
            << format_double(r.mae) << '\n';
}

EvaluationReport Evaluation::run(const ExperimentConfig& config, const Dataset& data) {
    return in_stage("evaluate", [&] {
        const EvaluateKey key;
        ArtifactPaths paths{config.output_dir};
        const auto tags = config.model_tags();
        EvaluationReport report;
        std::ofstream prop;
        fs::create_directories(paths.proposition().parent_path());
        prop.open(paths.proposition(), std::ios::binary);
        prop << "weighting,term,lhs,rhs,holds\n";

        for (const auto& weighting : config.weightings()) {
            const TermTable fc = read_term_table(paths.forecast(weighting));
            const TermTable en = read_term_table(paths.ensemble(weighting));
            if (en.term_ids != fc.term_ids) throw SchemaError("ensemble and forecast files cover different terms");
            const CoefficientSet batch = read_coefficients(paths.coefficients(weighting, "batch"), fc.term_ids);

            std::vector<Eigen::VectorXd> y;
            std::vector<std::vector<std::size_t>> observed(fc.term_ids.size());
            for (std::size_t b = 0; b < fc.term_ids.size(); ++b) {
                const Eigen::VectorXd full = data.sealed.open(key, fc.times[b]);
                for (Eigen::Index t = 0; t < full.size(); ++t)
                    if (std::isfinite(full(t))) observed[b].push_back(static_cast<std::size_t>(t));
                if (observed[b].empty()) throw DegenerateInput("no observed targets in term " + std::to_string(fc.term_ids[b]));
                Eigen::VectorXd v(static_cast<Eigen::Index>(observed[b].size()));
                for (std::size_t i = 0; i < observed[b].size(); ++i) v(static_cast<Eigen::Index>(i)) = full(static_cast<Eigen::Index>(observed[b][i]));
                y.push_back(std::move(v));
            }
            auto pick = [&](const std::vector<Eigen::VectorXd>& col) {
                std::vector<Eigen::VectorXd> out;
                for (std::size_t b = 0; b < col.size(); ++b) {
                    Eigen::VectorXd v(static_cast<Eigen::Index>(observed[b].size()));
                    for (std::size_t i = 0; i < observed[b].size(); ++i)
                        v(static_cast<Eigen::Index>(i)) = col[b](static_cast<Eigen::Index>(observed[b][i]));
                    out.push_back(std::move(v));
                }
                return out;
            };

            std::vector<std::pair<std::string, std::vector<Eigen::VectorXd>>> methods;
            for (const auto& tag : tags) methods.emplace_back(tag, pick(fc.column(tag)));
            methods.emplace_back("l2", pick(en.column("l2_level")));
            methods.emplace_back("median_sigma", pick(en.column("median_sigma_level")));
            methods.emplace_back("batch", pick(en.column("batch_level")));

            Table2Row all{"all", weighting};
            for (const auto& [name, yhat] : methods) {
                const auto rows = skill_rows(name, weighting, yhat, y, fc.term_ids);
                report.skill.insert(report.skill.end(), rows.begin(), rows.end());
                Table2Row t{name, weighting};
                const double B = static_cast<double>(y.size());
                for (const auto& r : rows) {
                    if (r.term < 0) continue;
                    t.fcd += r.fcd / B;
                    t.rmse += r.rmse / B;
                    t.mae += r.mae / B;
                }
                const double K = static_cast<double>(methods.size());
                all.fcd += t.fcd / K;
                all.rmse += t.rmse / K;
                all.mae += t.mae / K;
                report.table2.push_back(t);
            }
            report.table2.push_back(all);

            const auto base = [&] {
                std::vector<std::vector<Eigen::VectorXd>> b;
                for (std::size_t m = 0; m < tags.size(); ++m) b.push_back(methods[m].second);
                return b;
            }();
            const auto batch_raw = pick(en.column("batch"));
            for (std::size_t b = 0; b < y.size(); ++b) {
                PropositionRow r{weighting, fc.term_ids[b]};
                for (std::size_t m = 0; m < tags.size(); ++m)
                    r.lhs += batch.alpha(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(m)) * sim(base[m][b], y[b]);
                r.rhs = sim(batch_raw[b], y[b]);
                r.holds = r.rhs >= r.lhs - 1e-12;
                prop << weighting << ',' << r.term << ',' << format_double(r.lhs) << ',' << format_double(r.rhs) << ','
                     << (r.holds ? "true" : "false") << '\n';
                report.proposition.push_back(r);
            }

            std::vector<std::vector<Eigen::VectorXd>> per_model;
            for (const auto& tag : tags) per_model.push_back(fc.column(tag));
            const std::string selected = variant_name(config.ensemble.variant) == "global"
                                             ? "l2_level"
                                             : variant_name(config.ensemble.variant) + "_level";
            const auto actual_full = [&] {
                std::vector<Eigen::VectorXd> a;
                for (std::size_t b = 0; b < fc.term_ids.size(); ++b) a.push_back(data.sealed.open(key, fc.times[b]));
                return a;
            }();
            fs::create_directories(paths.plots(weighting));
            emit_plotdata(paths.plots(weighting), fc.term_ids, fc.times, actual_full, tags, per_model, en.column(selected));
        }
        write_skill_rows(paths.skill(), report.skill);
        write_table2(paths.table2(), report.table2);
        return report;
    });
}

double coefficient_of_variation(const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (v.size() == 0) throw ShapeError("empty importance vector");
    const double mean = v.mean();
    if (!(mean > 0.0)) return std::numeric_limits<double>::infinity();
    const double sd = std::sqrt((v.array() - mean).square().mean());
    return sd / mean;
}

ImportanceReport stage_importance(const ExperimentConfig& config, const Dataset& data) {
    return in_stage("importance", [&] {
        ArtifactPaths paths{config.output_dir};
        const auto tags = config.model_tags();
        if (std::find(tags.begin(), tags.end(), "RFoob") == tags.end())
            throw ConfigError("importance needs an RFoob learner");
        const FeaturePipeline pipeline = load_pipeline(paths);
        std::optional<WeightSeries> weights;
        if (config.weights.enabled) weights = load_weights(config, paths);
        ImportanceReport rep;
        for (const auto& weighting : config.weightings()) {
            const DesignMatrix dm = training_design(config, data, pipeline, weighting, weights ? &*weights : nullptr);
            const FittedModel model = load_model(paths.model(weighting, "RFoob"));
            if (model.columns != dm.column_names()) throw SchemaError("forest columns differ from the training design");
            ImportanceOptions opts;
            opts.repeats = config.importance_repeats;
            opts.seed = derive_seed(config.seed, "importance");
            const ImportanceResult r = oob_importance(std::get<ForestModel>(model.params), dm.X(), opts);
            rep.predictors = dm.column_names();
            rep.raw[weighting] = r.raw;
            rep.reported[weighting] = r.reported;
            rep.coefficient_of_variation[weighting] = coefficient_of_variation(r.reported);
        }
        {
            fs::create_directories(paths.importance().parent_path());
            std::ofstream out(paths.importance(), std::ios::binary);
            out << "predictor";
            for (const auto& w : config.weightings()) out << ',' << w;
            out << '\n';
            for (std::size_t j = 0; j < rep.predictors.size(); ++j) {
                out << rep.predictors[j];
                for (const auto& w : config.weightings())
                    out << ',' << format_double(rep.reported[w](static_cast<Eigen::Index>(j)));
                out << '\n';
            }
        }
        json summary;
        for (const auto& w : config.weightings())
            summary[w] = {{"coefficient_of_variation", rep.coefficient_of_variation[w]}, {"raw", vec_json(rep.raw[w])}};
        summary["predictors"] = rep.predictors;
        write_json(paths.importance_summary(), summary);
        return rep;
    });
}

RunSummary run_pipeline(const ExperimentConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    config.validate();
    ArtifactPaths paths{config.output_dir};
    fs::create_directories(paths.root);
    write_json(paths.root / "config.json", config_to_json(config));
    const Dataset data = in_stage("load", [&] { return load_dataset(config); });
    RunSummary s;
    if (config.weights.enabled) stage_weights(config, data);
    stage_train(config, data);
    stage_forecast(config, data);
    stage_ensemble(config);
    s.evaluation = stage_evaluate(config, data);
    s.importance = stage_importance(config, data);

    json manifest = json::object();
    for (const auto& entry : fs::recursive_directory_iterator(paths.root)) {
        if (!entry.is_regular_file() || entry.path() == paths.manifest()) continue;
        manifest[fs::relative(entry.path(), paths.root).generic_string()] = fingerprint_file(entry.path());
    }
    write_json(paths.manifest(), manifest);
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return s;
}

}  // namespace hydroens::io
