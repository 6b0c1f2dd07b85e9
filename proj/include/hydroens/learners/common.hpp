#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace hydroens {

enum class ModelKind { kernel, forest, svr };

/// Display tag used in reports: Kernel, RFoob, SVM.
std::string model_tag(ModelKind kind);
ModelKind model_kind_from_tag(const std::string& tag);

/// Per-column affine map onto [0, 1] frozen from training data. Constant
/// columns map to 0.
struct MinMaxScaler {
    Eigen::VectorXd offset;
    Eigen::VectorXd scale;  // 1 / range, or 0 for constant columns

    static MinMaxScaler fit(const Eigen::Ref<const Eigen::MatrixXd>& X);
    Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& X) const;
};

/// Checks rows(X) == len(y) == len(w), finite entries, w >= 0 and sum(w) > 0.
void validate_training_data(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                            const Eigen::Ref<const Eigen::VectorXd>& w);

/// Indices of rows with strictly positive weight.
std::vector<Eigen::Index> positive_rows(const Eigen::Ref<const Eigen::VectorXd>& w);

Eigen::MatrixXd select_rows(const Eigen::Ref<const Eigen::MatrixXd>& X, const std::vector<Eigen::Index>& rows);
Eigen::VectorXd select_values(const Eigen::Ref<const Eigen::VectorXd>& v, const std::vector<Eigen::Index>& rows);

/// Σ w (y - yhat)^2 / Σ w.
double weighted_mse(const Eigen::Ref<const Eigen::VectorXd>& yhat, const Eigen::Ref<const Eigen::VectorXd>& y,
                    const Eigen::Ref<const Eigen::VectorXd>& w);

}  // namespace hydroens
