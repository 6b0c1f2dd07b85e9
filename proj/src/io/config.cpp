#include "hydroens/io/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>

#include <nlohmann/json.hpp>

#include "hydroens/errors.hpp"
#include "hydroens/io/csv.hpp"

namespace hydroens::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

fs::path resolve(const fs::path& p, const fs::path& base) {
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return base / p;
}

ScenarioSpec scenario_from_json(const json& j) {
    reject_unknown(j,
                   {"seed", "first_year", "train_years", "train_terms_per_year", "test_terms", "term_hours_min",
                    "term_hours_max", "peak_min", "peak_max", "peaks_min", "peaks_max", "base_flow", "noise",
                    "lag_hours", "guidance_noise", "gauges", "sst_dims", "sst_separation", "sst_intensity"},
                   "data.scenario");
    ScenarioSpec s;
    s.seed = j.value("seed", s.seed);
    s.first_year = j.value("first_year", s.first_year);
    s.train_years = j.value("train_years", s.train_years);
    s.train_terms_per_year = j.value("train_terms_per_year", s.train_terms_per_year);
    s.test_terms = j.value("test_terms", s.test_terms);
    s.term_hours_min = j.value("term_hours_min", s.term_hours_min);
    s.term_hours_max = j.value("term_hours_max", s.term_hours_max);
    s.peak_min = j.value("peak_min", s.peak_min);
    s.peak_max = j.value("peak_max", s.peak_max);
    s.peaks_min = j.value("peaks_min", s.peaks_min);
    s.peaks_max = j.value("peaks_max", s.peaks_max);
    s.base_flow = j.value("base_flow", s.base_flow);
    s.noise = j.value("noise", s.noise);
    s.lag_hours = j.value("lag_hours", s.lag_hours);
    s.guidance_noise = j.value("guidance_noise", s.guidance_noise);
    s.gauges = j.value("gauges", s.gauges);
    s.sst_dims = j.value("sst_dims", s.sst_dims);
    s.sst_separation = j.value("sst_separation", s.sst_separation);
    s.sst_intensity = j.value("sst_intensity", s.sst_intensity);
    s.validate();
    return s;
}

json scenario_to_json(const ScenarioSpec& s) {
    return {{"seed", s.seed},
            {"first_year", s.first_year},
            {"train_years", s.train_years},
            {"train_terms_per_year", s.train_terms_per_year},
            {"test_terms", s.test_terms},
            {"term_hours_min", s.term_hours_min},
            {"term_hours_max", s.term_hours_max},
            {"peak_min", s.peak_min},
            {"peak_max", s.peak_max},
            {"peaks_min", s.peaks_min},
            {"peaks_max", s.peaks_max},
            {"base_flow", s.base_flow},
            {"noise", s.noise},
            {"lag_hours", s.lag_hours},
            {"guidance_noise", s.guidance_noise},
            {"gauges", s.gauges},
            {"sst_dims", s.sst_dims},
            {"sst_separation", s.sst_separation},
            {"sst_intensity", s.sst_intensity}};
}

}  // namespace

FeatureStep feature_step_from_json(const json& j) {
    reject_unknown(j, {"transform", "sources", "p", "window", "mode", "horizon", "threshold", "max_components"},
                   "features[]");
    FeatureStep s;
    s.transform = j.at("transform").get<std::string>();
    s.sources = j.value("sources", std::vector<std::string>{});
    s.p = j.value("p", s.p);
    s.window = j.value("window", s.window);
    const std::string mode = j.value("mode", std::string("least_squares"));
    if (mode == "least_squares")
        s.mode = GradientMode::least_squares;
    else if (mode == "difference")
        s.mode = GradientMode::difference;
    else
        throw ConfigError("unknown gradient mode '" + mode + "'");
    s.horizon = j.value("horizon", s.horizon);
    s.threshold = j.value("threshold", s.threshold);
    s.max_components = j.value("max_components", s.max_components);
    return s;
}

json feature_step_to_json(const FeatureStep& s) {
    return {{"transform", s.transform},
            {"sources", s.sources},
            {"p", s.p},
            {"window", s.window},
            {"mode", s.mode == GradientMode::least_squares ? "least_squares" : "difference"},
            {"horizon", s.horizon},
            {"threshold", s.threshold},
            {"max_components", s.max_components}};
}

namespace {

TsneOptions tsne_from_json(const json& j) {
    reject_unknown(j,
                   {"dims", "perplexity", "iterations", "learning_rate", "early_exaggeration",
                    "exaggeration_iterations", "method", "init", "theta", "barnes_hut_threshold"},
                   "weights.tsne");
    TsneOptions t;
    t.dims = j.value("dims", t.dims);
    t.perplexity = j.value("perplexity", t.perplexity);
    t.iterations = j.value("iterations", t.iterations);
    t.learning_rate = j.value("learning_rate", t.learning_rate);
    t.early_exaggeration = j.value("early_exaggeration", t.early_exaggeration);
    t.exaggeration_iterations = j.value("exaggeration_iterations", t.exaggeration_iterations);
    const std::string method = j.value("method", std::string("automatic"));
    if (method == "automatic")
        t.method = TsneOptions::Method::automatic;
    else if (method == "exact")
        t.method = TsneOptions::Method::exact;
    else if (method == "barnes_hut")
        t.method = TsneOptions::Method::barnes_hut;
    else
        throw ConfigError("unknown t-SNE method '" + method + "'");
    const std::string init = j.value("init", std::string("pca"));
    if (init == "pca")
        t.init = TsneOptions::Init::pca;
    else if (init == "random")
        t.init = TsneOptions::Init::random;
    else
        throw ConfigError("unknown t-SNE init '" + init + "'");
    t.theta = j.value("theta", t.theta);
    t.barnes_hut_threshold = j.value("barnes_hut_threshold", t.barnes_hut_threshold);
    return t;
}

json tsne_to_json(const TsneOptions& t) {
    const char* method = t.method == TsneOptions::Method::automatic ? "automatic"
                         : t.method == TsneOptions::Method::exact   ? "exact"
                                                                    : "barnes_hut";
    return {{"dims", t.dims},
            {"perplexity", t.perplexity},
            {"iterations", t.iterations},
            {"learning_rate", t.learning_rate},
            {"early_exaggeration", t.early_exaggeration},
            {"exaggeration_iterations", t.exaggeration_iterations},
            {"method", method},
            {"init", t.init == TsneOptions::Init::pca ? "pca" : "random"},
            {"theta", t.theta},
            {"barnes_hut_threshold", t.barnes_hut_threshold}};
}

LearnerConfig learner_from_json(const json& j) {
    LearnerConfig c;
    json spec = j;
    if (spec.contains("tune")) {
        const json& t = spec.at("tune");
        if (t.is_boolean()) {
            c.tune = t.get<bool>();
        } else {
            reject_unknown(t, {"enabled", "budget", "method", "folds", "initial_points"}, "learners[].tune");
            c.tune = t.value("enabled", true);
            c.tuning.budget = t.value("budget", c.tuning.budget);
            c.tuning.folds = t.value("folds", c.tuning.folds);
            c.tuning.initial_points = t.value("initial_points", c.tuning.initial_points);
            const std::string method = t.value("method", std::string("random"));
            if (method == "random")
                c.tuning.method = TuneMethod::random;
            else if (method == "gp_ei")
                c.tuning.method = TuneMethod::gp_ei;
            else
                throw ConfigError("unknown tune method '" + method + "'");
        }
        spec.erase("tune");
    }
    if (!spec.contains("model")) throw ConfigError("learner entry needs a 'model' tag (Kernel, RFoob or SVM)");
    try {
        c.spec = learner_spec_from_json(spec);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad learner entry: ") + e.what());
    }
    if (c.tuning.budget < 1) throw ConfigError("tune budget must be >= 1");
    return c;
}

json learner_to_json(const LearnerConfig& c) {
    json j;
    to_json(j, c.spec);
    j["tune"] = {{"enabled", c.tune},
                 {"budget", c.tuning.budget},
                 {"method", c.tuning.method == TuneMethod::random ? "random" : "gp_ei"},
                 {"folds", c.tuning.folds},
                 {"initial_points", c.tuning.initial_points}};
    return j;
}

std::optional<std::uint64_t> parse_seed(const char* text) {
    std::uint64_t v = 0;
    const std::string s(text);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace

std::string variant_name(EnsembleVariant v) {
    switch (v) {
        case EnsembleVariant::global: return "global";
        case EnsembleVariant::median_sigma: return "median_sigma";
        case EnsembleVariant::batch: return "batch";
    }
    return "?";
}

std::vector<std::string> ExperimentConfig::weightings() const {
    if (weights.enabled) return {"never", "ws_on"};
    return {"never"};
}

std::vector<std::string> ExperimentConfig::model_tags() const {
    std::vector<std::string> tags;
    for (const auto& l : learners) tags.push_back(model_tag(kind_of(l.spec)));
    return tags;
}

std::vector<LearnerConfig> default_learners() {
    std::vector<LearnerConfig> out(3);
    out[0].spec = KernelRegSpec{};
    out[1].spec = ForestSpec{};
    out[2].spec = SvrSpec{};
    return out;
}

void ExperimentConfig::validate() const {
    if (lead_hours < 1) throw ConfigError("lead_hours must be >= 1");
    if (importance_repeats < 1) throw ConfigError("importance.repeats must be >= 1");
    if (learners.empty()) throw ConfigError("no learners configured");
    std::set<std::string> seen;
    for (const auto& l : learners) {
        hydroens::validate(l.spec);
        if (!seen.insert(model_tag(kind_of(l.spec))).second)
            throw ConfigError("learner " + model_tag(kind_of(l.spec)) + " listed twice");
        if (l.tuning.folds < 2) throw ConfigError("tune folds must be >= 2");
    }
    if (data.source == "synthetic") {
        data.scenario.validate();
    } else if (data.source == "csv") {
        for (const auto& f : {data.series, data.grid, data.sst_features, data.train_terms, data.test_terms})
            if (!fs::exists(data.dir / f)) throw ConfigError("data file not found: " + (data.dir / f).string());
        if (read_terms(data.dir / data.train_terms).overlaps(read_terms(data.dir / data.test_terms)))
            throw ConfigError("training and test terms overlap");
    } else {
        throw ConfigError("data.source must be 'synthetic' or 'csv'");
    }
    if (ensemble.global_coefficients.size() != 0) {
        if (ensemble.global_coefficients.size() != static_cast<Eigen::Index>(learners.size()))
            throw ConfigError("ensemble.global_coefficients needs one entry per learner");
        validate_simplex(ensemble.global_coefficients);
    }
    if (!ensemble.coefficients_file.empty() && !fs::exists(ensemble.coefficients_file))
        throw ConfigError("coefficient file not found: " + ensemble.coefficients_file.string());
    if (ensemble.grid_divisions < 1) throw ConfigError("ensemble.grid_divisions must be >= 1");
    if (weights.options.epsilon <= 0.0) throw ConfigError("weights.epsilon must be > 0");
}

ExperimentConfig config_from_json(const json& j, const fs::path& base_dir) {
    reject_unknown(j, {"seed", "output_dir", "lead_hours", "data", "features", "learners", "weights", "ensemble",
                       "importance"},
                   "config");
    ExperimentConfig c;
    try {
        c.seed = j.value("seed", c.seed);
        c.output_dir = resolve(j.value("output_dir", c.output_dir.string()), base_dir);
        c.lead_hours = j.value("lead_hours", c.lead_hours);

        if (j.contains("data")) {
            const json& d = j.at("data");
            reject_unknown(d, {"source", "scenario", "dir", "series", "grid", "sst_features", "train_terms",
                               "test_terms", "target"},
                           "data");
            c.data.source = d.value("source", c.data.source);
            if (d.contains("scenario")) c.data.scenario = scenario_from_json(d.at("scenario"));
            c.data.dir = resolve(d.value("dir", std::string()), base_dir);
            c.data.series = d.value("series", c.data.series);
            c.data.grid = d.value("grid", c.data.grid);
            c.data.sst_features = d.value("sst_features", c.data.sst_features);
            c.data.train_terms = d.value("train_terms", c.data.train_terms);
            c.data.test_terms = d.value("test_terms", c.data.test_terms);
            c.data.target = d.value("target", c.data.target);
        }

        if (j.contains("features"))
            for (const auto& s : j.at("features")) c.features.push_back(feature_step_from_json(s));

        if (j.contains("learners"))
            for (const auto& l : j.at("learners")) c.learners.push_back(learner_from_json(l));
        else
            c.learners = default_learners();

        if (j.contains("weights")) {
            const json& w = j.at("weights");
            reject_unknown(w, {"enabled", "tsne", "pca_threshold", "epsilon"}, "weights");
            c.weights.enabled = w.value("enabled", c.weights.enabled);
            if (w.contains("tsne")) c.weights.options.tsne = tsne_from_json(w.at("tsne"));
            c.weights.options.pca_threshold = w.value("pca_threshold", c.weights.options.pca_threshold);
            c.weights.options.epsilon = w.value("epsilon", c.weights.options.epsilon);
        }

        if (j.contains("ensemble")) {
            const json& e = j.at("ensemble");
            reject_unknown(e, {"variant", "global_coefficients", "coefficients_file", "grid_divisions"}, "ensemble");
            const std::string v = e.value("variant", std::string("batch"));
            if (v == "global")
                c.ensemble.variant = EnsembleVariant::global;
            else if (v == "median_sigma")
                c.ensemble.variant = EnsembleVariant::median_sigma;
            else if (v == "batch")
                c.ensemble.variant = EnsembleVariant::batch;
            else
                throw ConfigError("ensemble.variant must be exactly one of global, median_sigma, batch");
            if (e.contains("global_coefficients")) {
                const auto a = e.at("global_coefficients").get<std::vector<double>>();
                c.ensemble.global_coefficients = Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
            }
            const std::string file = e.value("coefficients_file", std::string());
            if (!file.empty()) c.ensemble.coefficients_file = resolve(file, base_dir);
            c.ensemble.grid_divisions = e.value("grid_divisions", c.ensemble.grid_divisions);
        }

        if (j.contains("importance")) {
            reject_unknown(j.at("importance"), {"repeats"}, "importance");
            c.importance_repeats = j.at("importance").value("repeats", c.importance_repeats);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir.string();
    j["lead_hours"] = c.lead_hours;
    json d{{"source", c.data.source}, {"target", c.data.target}};
    if (c.data.source == "synthetic") {
        d["scenario"] = scenario_to_json(c.data.scenario);
    } else {
        d["dir"] = c.data.dir.string();
        d["series"] = c.data.series;
        d["grid"] = c.data.grid;
        d["sst_features"] = c.data.sst_features;
        d["train_terms"] = c.data.train_terms;
        d["test_terms"] = c.data.test_terms;
    }
    j["data"] = d;
    j["features"] = json::array();
    for (const auto& s : c.features) j["features"].push_back(feature_step_to_json(s));
    j["learners"] = json::array();
    for (const auto& l : c.learners) j["learners"].push_back(learner_to_json(l));
    j["weights"] = {{"enabled", c.weights.enabled},
                    {"tsne", tsne_to_json(c.weights.options.tsne)},
                    {"pca_threshold", c.weights.options.pca_threshold},
                    {"epsilon", c.weights.options.epsilon}};
    json e{{"variant", variant_name(c.ensemble.variant)}, {"grid_divisions", c.ensemble.grid_divisions}};
    if (c.ensemble.global_coefficients.size() > 0)
        e["global_coefficients"] = std::vector<double>(c.ensemble.global_coefficients.data(),
                                                       c.ensemble.global_coefficients.data() +
                                                           c.ensemble.global_coefficients.size());
    if (!c.ensemble.coefficients_file.empty()) e["coefficients_file"] = c.ensemble.coefficients_file.string();
    j["ensemble"] = e;
    j["importance"] = {{"repeats", c.importance_repeats}};
    return j;
}

void apply_env_overrides(ExperimentConfig& c) {
    if (const char* s = std::getenv("HYDROENS_SEED")) {
        auto v = parse_seed(s);
        if (!v) throw ConfigError(std::string("HYDROENS_SEED is not an unsigned integer: '") + s + "'");
        c.seed = *v;
    }
    if (const char* d = std::getenv("HYDROENS_DATA_DIR"); d && *d) {
        c.data.dir = d;
    }
    if (const char* o = std::getenv("HYDROENS_OUTPUT_DIR"); o && *o) c.output_dir = o;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    ExperimentConfig c = config_from_json(j, path.parent_path());
    apply_env_overrides(c);
    c.validate();
    return c;
}

}  // namespace hydroens::io
