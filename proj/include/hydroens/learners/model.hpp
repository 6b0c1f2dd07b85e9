#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "hydroens/learners/common.hpp"
#include "hydroens/learners/forest.hpp"
#include "hydroens/learners/kernel.hpp"
#include "hydroens/learners/svr.hpp"
#include "hydroens/timeseries.hpp"

namespace hydroens {

using LearnerSpec = std::variant<KernelRegSpec, ForestSpec, SvrSpec>;

ModelKind kind_of(const LearnerSpec& spec);
void validate(const LearnerSpec& spec);

struct FittedModel {
    std::variant<KernelModel, ForestModel, SvrModel> params;
    std::vector<std::string> columns;
    std::string weight_fingerprint;
    std::uint64_t seed = 0;

    ModelKind kind() const noexcept { return static_cast<ModelKind>(params.index()); }
    std::string tag() const { return model_tag(kind()); }
};

/// Fits on the full design matrix. `seed` drives the random features (kernel)
/// and bootstrap streams (forest); the SVR is deterministic.
FittedModel fit_model(const LearnerSpec& spec, const DesignMatrix& data, std::uint64_t seed);
FittedModel fit_model(const LearnerSpec& spec, const std::vector<std::string>& columns,
                      const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                      const Eigen::Ref<const Eigen::VectorXd>& w, std::uint64_t seed);

/// Throws SchemaError unless `columns` equals the training schema.
Eigen::VectorXd predict(const FittedModel& model, const std::vector<std::string>& columns,
                        const Eigen::Ref<const Eigen::MatrixXd>& X);

/// Weight fingerprint recorded at fit time (FNV-1a over the weight bytes).
std::string weight_fingerprint(const Eigen::Ref<const Eigen::VectorXd>& w);

void to_json(nlohmann::json& j, const LearnerSpec& spec);
LearnerSpec learner_spec_from_json(const nlohmann::json& j);

/// Structured-text artifact; doubles are written in shortest round-trip form so
/// a reloaded model predicts bit-identically.
nlohmann::json model_to_json(const FittedModel& model);
FittedModel model_from_json(const nlohmann::json& j);
void save_model(const FittedModel& model, const std::filesystem::path& path);
FittedModel load_model(const std::filesystem::path& path);

}  // namespace hydroens
