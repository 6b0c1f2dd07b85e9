#pragma once

#include <Eigen/Core>

namespace hydroens {

/// Principal components fitted once and frozen for later transformation.
struct PcaModel {
    Eigen::VectorXd mean;            // d
    Eigen::MatrixXd components;      // d x kept, unit columns, largest-|loading| entry positive
    Eigen::VectorXd eigenvalues;     // all d, descending, clamped at 0
    Eigen::VectorXd explained_ratio; // all d
    double total_variance = 0.0;

    Eigen::Index kept() const noexcept { return components.cols(); }
    Eigen::Index dims() const noexcept { return mean.size(); }

    /// Scores of the rows of X on the kept components.
    Eigen::MatrixXd transform(const Eigen::Ref<const Eigen::MatrixXd>& X) const;
    /// Maps scores back to input space.
    Eigen::MatrixXd reconstruct(const Eigen::Ref<const Eigen::MatrixXd>& scores) const;
};

/// Fits PCA on the rows of X and keeps the smallest number of components whose
/// cumulative explained variance reaches `var_threshold`. Zero-eigenvalue
/// directions are never kept. `max_components` > 0 caps the count.
/// Throws DegenerateInput when X has fewer than 2 rows or zero total variance.
PcaModel fit_pca(const Eigen::Ref<const Eigen::MatrixXd>& X, double var_threshold, Eigen::Index max_components = 0);

struct FirstComponent {
    Eigen::VectorXd scores;           // one per row
    Eigen::VectorXd loading;          // unit vector, largest-|entry| positive
    Eigen::VectorXd explained_ratio;  // all components
    Eigen::Index components_to_threshold = 1;
};

/// Scores on the first principal component of the centered rows. Always the
/// first component only, even if more are needed to reach `var_threshold`.
FirstComponent pca_first(const Eigen::Ref<const Eigen::MatrixXd>& vectors, double var_threshold = 0.90);

}  // namespace hydroens
