#include "hydroens/learners/common.hpp"

#include "hydroens/errors.hpp"

namespace hydroens {

std::string model_tag(ModelKind kind) {
    switch (kind) {
        case ModelKind::kernel: return "Kernel";
        case ModelKind::forest: return "RFoob";
        case ModelKind::svr: return "SVM";
    }
    return "unknown";
}

ModelKind model_kind_from_tag(const std::string& tag) {
    if (tag == "Kernel") return ModelKind::kernel;
    if (tag == "RFoob") return ModelKind::forest;
    if (tag == "SVM") return ModelKind::svr;
    throw ConfigError("unknown model tag '" + tag + "'");
}

MinMaxScaler MinMaxScaler::fit(const Eigen::Ref<const Eigen::MatrixXd>& X) {
    MinMaxScaler s;
    s.offset = X.colwise().minCoeff().transpose();
    const Eigen::VectorXd range = X.colwise().maxCoeff().transpose() - s.offset;
    s.scale = range.unaryExpr([](double r) { return r > 0.0 ? 1.0 / r : 0.0; });
    return s;
}

Eigen::MatrixXd MinMaxScaler::apply(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    if (X.cols() != offset.size()) throw SchemaError("scaler expects " + std::to_string(offset.size()) + " columns");
    return (X.rowwise() - offset.transpose()).array().rowwise() * scale.transpose().array();
}

void validate_training_data(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                            const Eigen::Ref<const Eigen::VectorXd>& w) {
    if (X.rows() != y.size() || X.rows() != w.size())
        throw ShapeError("training data: rows(X), len(y), len(w) differ");
    if (X.rows() == 0) throw ShapeError("training data is empty");
    if (!X.allFinite() || !y.allFinite() || !w.allFinite()) throw ValidationError("training data has non-finite values");
    if ((w.array() < 0.0).any()) throw ValidationError("negative sample weight");
    if (!(w.sum() > 0.0)) throw ValidationError("sample weights sum to zero");
}

std::vector<Eigen::Index> positive_rows(const Eigen::Ref<const Eigen::VectorXd>& w) {
    std::vector<Eigen::Index> rows;
    rows.reserve(static_cast<std::size_t>(w.size()));
    for (Eigen::Index i = 0; i < w.size(); ++i)
        if (w(i) > 0.0) rows.push_back(i);
    return rows;
}

Eigen::MatrixXd select_rows(const Eigen::Ref<const Eigen::MatrixXd>& X, const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
    return out;
}

Eigen::VectorXd select_values(const Eigen::Ref<const Eigen::VectorXd>& v, const std::vector<Eigen::Index>& rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(rows[i]);
    return out;
}

double weighted_mse(const Eigen::Ref<const Eigen::VectorXd>& yhat, const Eigen::Ref<const Eigen::VectorXd>& y,
                    const Eigen::Ref<const Eigen::VectorXd>& w) {
    if (yhat.size() != y.size() || y.size() != w.size()) throw ShapeError("weighted_mse: length mismatch");
    const double sw = w.sum();
    if (!(sw > 0.0)) throw DegenerateInput("weighted_mse: weights sum to zero");
    return (w.array() * (yhat - y).array().square()).sum() / sw;
}

}  // namespace hydroens
