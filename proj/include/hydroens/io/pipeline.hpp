#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "hydroens/features.hpp"
#include "hydroens/io/config.hpp"
#include "hydroens/io/csv.hpp"
#include "hydroens/metrics.hpp"
#include "hydroens/sst_weights.hpp"
#include "hydroens/timeseries.hpp"

namespace hydroens::io {

class EvaluateKey;

/// Test-term targets. Only the evaluation stage can mint the key that opens them.
class SealedTargets {
public:
    SealedTargets() = default;
    SealedTargets(HydroSeries target, FloodBatchSet terms) : target_(std::move(target)), terms_(std::move(terms)) {}

    const FloodBatchSet& terms() const noexcept { return terms_; }
    /// Target values at `times` (NaN where masked). RangeError outside the series.
    Eigen::VectorXd open(const EvaluateKey& key, const std::vector<HourStamp>& times) const;

private:
    HydroSeries target_;
    FloodBatchSet terms_;
};

class EvaluateKey {
    EvaluateKey() = default;
    friend struct Evaluation;
};

/// Everything a run reads. The target series stays in `sources` as a predictor,
/// read only through the feature pipeline (causal: values at or before the
/// forecast origin). Test-term target vectors come only from `sealed`.
struct Dataset {
    FeatureSources sources;
    std::string target;
    FloodBatchSet train_terms;
    SealedTargets sealed;
    std::vector<MonthlyFeature> sst;
};

Dataset load_dataset(const ExperimentConfig& config);

/// Rows for one weighting: hour tau in a term, features at tau - lead.
struct RowSet {
    std::vector<int> term_ids;                     // per term, in term order
    std::vector<std::vector<HourStamp>> targets;   // target hours kept per term
    FeatureTable features;                         // one row per kept hour, term order
    std::vector<int> term_of_row;
    std::vector<HourStamp> time_of_row;            // target hour
};

/// Drops hours whose predictors are invalid (warning with the count).
RowSet build_rows(const FeaturePipeline& pipeline, const FeatureSources& sources, const FloodBatchSet& terms,
                  int lead_hours);

nlohmann::json pipeline_to_json(const FeaturePipeline& pipeline);
FeaturePipeline pipeline_from_json(const nlohmann::json& j);

/// Training design for one weighting (`never` = unit weights).
DesignMatrix training_design(const ExperimentConfig& config, const Dataset& data, const FeaturePipeline& pipeline,
                             const std::string& weighting, const WeightSeries* weights);

struct WeightStageResult {
    SstWeightResult result;
    double silhouette = 0.0;
};

/// Artifact layout under config.output_dir.
struct ArtifactPaths {
    std::filesystem::path root;

    std::filesystem::path data_dir(const ExperimentConfig& c) const;
    std::filesystem::path weights() const { return root / "weights" / "stw.csv"; }
    std::filesystem::path embedding() const { return root / "weights" / "embedding.csv"; }
    std::filesystem::path weight_report() const { return root / "weights" / "report.json"; }
    std::filesystem::path feature_pipeline() const { return root / "features" / "pipeline.json"; }
    std::filesystem::path design(const std::string& w) const { return root / "design" / (w + ".json"); }
    std::filesystem::path model(const std::string& w, const std::string& tag) const {
        return root / "models" / w / (tag + ".json");
    }
    std::filesystem::path tune_log(const std::string& w, const std::string& tag) const {
        return root / "tune" / w / (tag + ".json");
    }
    std::filesystem::path oof(const std::string& w) const { return root / "oof" / (w + ".csv"); }
    std::filesystem::path forecast(const std::string& w) const { return root / "forecasts" / (w + ".csv"); }
    std::filesystem::path ensemble(const std::string& w) const { return root / "ensemble" / (w + ".csv"); }
    std::filesystem::path norms(const std::string& w) const { return root / "ensemble" / (w + "_norms.csv"); }
    std::filesystem::path coefficients(const std::string& w, const std::string& variant) const {
        return root / "ensemble" / (w + "_" + variant + "_coefficients.csv");
    }
    std::filesystem::path ensemble_report(const std::string& w) const {
        return root / "ensemble" / (w + "_report.json");
    }
    std::filesystem::path skill() const { return root / "report" / "skill.csv"; }
    std::filesystem::path table2() const { return root / "report" / "table2.csv"; }
    std::filesystem::path proposition() const { return root / "report" / "proposition1.csv"; }
    std::filesystem::path importance() const { return root / "report" / "importance.csv"; }
    std::filesystem::path importance_summary() const { return root / "report" / "importance_summary.json"; }
    std::filesystem::path plots(const std::string& w) const { return root / "plots" / w; }
    std::filesystem::path manifest() const { return root / "manifest.json"; }
};

/// Writes the synthetic scenario as CSV (series, grid, SST features, term calendars).
std::filesystem::path stage_synth(const ExperimentConfig& config);

WeightStageResult stage_weights(const ExperimentConfig& config, const Dataset& data);

/// Fits the feature pipeline, tunes and fits every learner for every weighting,
/// and stores out-of-fold predictions on the training terms.
void stage_train(const ExperimentConfig& config, const Dataset& data);

/// Base-model forecasts on the test terms. Never touches test targets.
void stage_forecast(const ExperimentConfig& config, const Dataset& data);

/// Global, median+sigma and batch ensembles from stored forecasts.
void stage_ensemble(const ExperimentConfig& config);

struct Table2Row {
    std::string method;
    std::string weighting;
    double fcd = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
};

struct PropositionRow {
    std::string weighting;
    int term = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

struct EvaluationReport {
    std::vector<SkillRow> skill;
    std::vector<Table2Row> table2;
    std::vector<PropositionRow> proposition;
};

/// The only holder of an EvaluateKey.
struct Evaluation {
    static EvaluationReport run(const ExperimentConfig& config, const Dataset& data);
};

inline EvaluationReport stage_evaluate(const ExperimentConfig& config, const Dataset& data) {
    return Evaluation::run(config, data);
}

struct ImportanceReport {
    std::vector<std::string> predictors;
    std::map<std::string, Eigen::VectorXd> reported;  // per weighting, floored at 0
    std::map<std::string, Eigen::VectorXd> raw;
    std::map<std::string, double> coefficient_of_variation;
};

/// Forest OOB permutation importance for each weighting.
ImportanceReport stage_importance(const ExperimentConfig& config, const Dataset& data);

/// Coefficient of variation (population sd / mean) of an importance vector.
double coefficient_of_variation(const Eigen::Ref<const Eigen::VectorXd>& v);

struct RunSummary {
    EvaluationReport evaluation;
    ImportanceReport importance;
    double seconds = 0.0;
};

/// Every stage in order; stage failures surface as StageError.
RunSummary run_pipeline(const ExperimentConfig& config);

void write_table2(const std::filesystem::path& path, const std::vector<Table2Row>& rows);

}  // namespace hydroens::io
