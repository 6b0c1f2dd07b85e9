#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "hydroens/features.hpp"
#include "hydroens/learners/model.hpp"
#include "hydroens/learners/tune.hpp"
#include "hydroens/sst_weights.hpp"
#include "hydroens/synth.hpp"

namespace hydroens::io {

struct DataConfig {
    std::string source = "synthetic";  // synthetic | csv
    ScenarioSpec scenario;             // source == synthetic
    /// csv: where the files below live. synthetic: where `synth` writes them
    /// (empty = <output_dir>/data).
    std::filesystem::path dir;
    std::string series = "series.csv";
    std::string grid = "grid.csv";
    std::string sst_features = "sst_features.csv";
    std::string train_terms = "train_terms.csv";
    std::string test_terms = "test_terms.csv";
    std::string target = "inflow";
};

struct LearnerConfig {
    LearnerSpec spec;
    bool tune = true;
    TuneOptions tuning;  // tuning.seed is derived from the root seed, never read from file
};

struct WeightConfig {
    bool enabled = true;  // false: only the unweighted fit is produced
    SstWeightOptions options;
};

enum class EnsembleVariant { global, median_sigma, batch };

std::string variant_name(EnsembleVariant v);

struct EnsembleConfig {
    EnsembleVariant variant = EnsembleVariant::batch;
    Eigen::VectorXd global_coefficients;     // per model, learner order; empty = uniform
    std::filesystem::path coefficients_file; // batch: `term_id,model,alpha`; empty = grid search
    int grid_divisions = 10;
};

struct ExperimentConfig {
    std::uint64_t seed = 2019;
    std::filesystem::path output_dir = "out";
    int lead_hours = 6;
    DataConfig data;
    std::vector<FeatureStep> features;  // empty = default recipe
    std::vector<LearnerConfig> learners;
    WeightConfig weights;
    EnsembleConfig ensemble;
    int importance_repeats = 3;

    /// `never` and, when weighting is enabled, `ws_on`.
    std::vector<std::string> weightings() const;
    std::vector<std::string> model_tags() const;
    /// Throws ConfigError: missing files, duplicate learners, bad coefficient vector, lead < 1.
    void validate() const;
};

/// Reads a JSON config. Relative paths resolve against the config file's directory.
/// HYDROENS_SEED, HYDROENS_DATA_DIR and HYDROENS_OUTPUT_DIR override the file.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const ExperimentConfig& config);
void apply_env_overrides(ExperimentConfig& config);

nlohmann::json feature_step_to_json(const FeatureStep& step);
FeatureStep feature_step_from_json(const nlohmann::json& j);

/// Kernel, RFoob and SVM with default specs.
std::vector<LearnerConfig> default_learners();

}  // namespace hydroens::io
