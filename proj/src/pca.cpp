#include "hydroens/pca.hpp"

#include <Eigen/Eigenvalues>

#include "hydroens/errors.hpp"

namespace hydroens {
namespace {

// Flip so that the entry with the largest magnitude is positive (first one wins ties).
void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
    if (v(arg) < 0) v = -v;
}

Eigen::Index count_to_threshold(const Eigen::VectorXd& ratio, double threshold, Eigen::Index nonzero) {
    double cum = 0.0;
    for (Eigen::Index k = 0; k < nonzero; ++k) {
        cum += ratio(k);
        if (cum >= threshold - 1e-12) return k + 1;
    }
    return nonzero;
}

}  // namespace

Eigen::MatrixXd PcaModel::transform(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    return (X.rowwise() - mean.transpose()) * components;
}

Eigen::MatrixXd PcaModel::reconstruct(const Eigen::Ref<const Eigen::MatrixXd>& scores) const {
    Eigen::MatrixXd out = scores * components.transpose();
    out.rowwise() += mean.transpose();
    return out;
}

PcaModel fit_pca(const Eigen::Ref<const Eigen::MatrixXd>& X, double var_threshold, Eigen::Index max_components) {
    if (X.rows() < 2) throw DegenerateInput("PCA needs at least 2 rows");
    if (!(var_threshold > 0.0 && var_threshold <= 1.0)) throw ConfigError("PCA variance threshold must be in (0, 1]");

    PcaModel model;
    model.mean = X.colwise().mean().transpose();
    const Eigen::MatrixXd centered = X.rowwise() - model.mean.transpose();
    const Eigen::Index d = X.cols();
    const Eigen::Index n = X.rows();
    const double denom = static_cast<double>(n - 1);

    Eigen::MatrixXd vectors(d, d);
    if (d <= n) {
        const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
        if (solver.info() != Eigen::Success) throw DegenerateInput("PCA eigendecomposition failed");
        // Eigen returns ascending order.
        model.eigenvalues = solver.eigenvalues().reverse().cwiseMax(0.0);
        vectors = solver.eigenvectors().rowwise().reverse();
    } else {
        // Wide data: decompose the n x n Gram matrix and lift its eigenvectors.
        const Eigen::MatrixXd gram = (centered * centered.transpose()) / denom;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
        if (solver.info() != Eigen::Success) throw DegenerateInput("PCA eigendecomposition failed");
        model.eigenvalues = Eigen::VectorXd::Zero(d);
        model.eigenvalues.head(n) = solver.eigenvalues().reverse().cwiseMax(0.0);
        const Eigen::MatrixXd u = solver.eigenvectors().rowwise().reverse();
        vectors.setZero();
        for (Eigen::Index k = 0; k < n; ++k) {
            if (model.eigenvalues(k) <= 0.0) break;
            Eigen::VectorXd v = centered.transpose() * u.col(k);
            const double norm = v.norm();
            if (norm > 0.0) vectors.col(k) = v / norm;
        }
    }
    model.total_variance = model.eigenvalues.sum();
    if (!(model.total_variance > 0.0)) throw DegenerateInput("PCA input has zero total variance");
    model.explained_ratio = model.eigenvalues / model.total_variance;

    const double zero_tol = 1e-12 * model.eigenvalues(0);
    Eigen::Index nonzero = 0;
    while (nonzero < d && model.eigenvalues(nonzero) > zero_tol) ++nonzero;

    Eigen::Index keep = count_to_threshold(model.explained_ratio, var_threshold, nonzero);
    if (max_components > 0 && keep > max_components) keep = max_components;
    model.components = vectors.leftCols(keep);
    for (Eigen::Index k = 0; k < keep; ++k) fix_sign(model.components.col(k));
    return model;
}

FirstComponent pca_first(const Eigen::Ref<const Eigen::MatrixXd>& vectors, double var_threshold) {
    const PcaModel model = fit_pca(vectors, var_threshold);
    FirstComponent out;
    out.loading = model.components.col(0);
    out.scores = (vectors.rowwise() - model.mean.transpose()) * out.loading;
    out.explained_ratio = model.explained_ratio;
    out.components_to_threshold = model.kept();
    return out;
}

}  // namespace hydroens
