#include "hydroens/learners/kernel.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Cholesky>

#include "hydroens/errors.hpp"
#include "hydroens/learners/svr.hpp"

namespace hydroens {

void validate(const KernelRegSpec& spec) {
    if (!(spec.kernel_scale > 0.0)) throw ConfigError("kernel scale must be > 0");
    if (!(spec.lambda >= 0.0)) throw ConfigError("kernel lambda must be >= 0");
    if (spec.expansion_dims < 1) throw ConfigError("kernel expansion dimensions must be >= 1");
    if (!(spec.epsilon >= 0.0)) throw ConfigError("kernel epsilon must be >= 0");
    if (spec.learner == KernelLearner::svm && !(spec.lambda > 0.0))
        throw ConfigError("kernel svm learner needs lambda > 0");
}

RandomFeatures RandomFeatures::draw(Eigen::Index inputs, int dims, double scale, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0 / scale);
    std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
    RandomFeatures rf;
    rf.omega.resize(inputs, dims);
    rf.phase.resize(dims);
    for (int d = 0; d < dims; ++d)
        for (Eigen::Index p = 0; p < inputs; ++p) rf.omega(p, d) = normal(rng);
    for (int d = 0; d < dims; ++d) rf.phase(d) = uniform(rng);
    return rf;
}

Eigen::MatrixXd RandomFeatures::map(const Eigen::Ref<const Eigen::MatrixXd>& Xs) const {
    if (Xs.cols() != omega.rows()) throw SchemaError("random features expect " + std::to_string(omega.rows()) + " inputs");
    Eigen::MatrixXd Z = Xs * omega;
    Z.rowwise() += phase.transpose();
    return std::sqrt(2.0 / static_cast<double>(omega.cols())) * Z.array().cos().matrix();
}

NormalEquations kernel_normal_equations(const Eigen::Ref<const Eigen::MatrixXd>& Phi,
                                        const Eigen::Ref<const Eigen::VectorXd>& y,
                                        const Eigen::Ref<const Eigen::VectorXd>& w, double lambda) {
    const Eigen::Index n = Phi.rows(), d = Phi.cols();
    Eigen::MatrixXd design(n, d + 1);
    design.col(0).setOnes();
    design.rightCols(d) = Phi;
    NormalEquations ne;
    ne.A = design.transpose() * w.asDiagonal() * design;
    ne.A.diagonal().tail(d).array() += lambda;
    ne.rhs = design.transpose() * (w.array() * y.array()).matrix();
    return ne;
}

namespace {

void solve_least_squares(KernelModel& model, const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& w) {
    const NormalEquations ne = kernel_normal_equations(Phi, y, w, model.spec.lambda);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(ne.A);
    const double rcond = ldlt.info() == Eigen::Success ? ldlt.rcond() : 0.0;
    if (!(rcond > 1e-13) || !ldlt.isPositive())
        throw SolveError("kernel normal equations are singular (rcond " + std::to_string(rcond) +
                         "); use lambda > 0 or fewer expansion dimensions");
    const Eigen::VectorXd sol = ldlt.solve(ne.rhs);
    if (!sol.allFinite()) throw SolveError("kernel normal equations produced non-finite coefficients; use lambda > 0");
    model.intercept = sol(0);
    model.beta = sol.tail(sol.size() - 1);
}

void solve_svm(KernelModel& model, const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    const double center = y.mean();
    double scale = std::sqrt((y.array() - center).square().mean());
    if (!(scale > 0.0)) scale = 1.0;

    SvrDualProblem problem;
    problem.size = Phi.rows();
    problem.target = (y.array() - center) / scale;
    problem.upper = w / (2.0 * model.spec.lambda * scale);
    problem.epsilon = model.spec.epsilon / scale;
    problem.kernel_diagonal = Phi.rowwise().squaredNorm();
    problem.kernel_column = [&Phi](Eigen::Index i, Eigen::Ref<Eigen::VectorXd> out) {
        out.noalias() = Phi * Phi.row(i).transpose();
    };
    const SvrDualSolution sol = solve_svr_dual(problem);
    model.beta = scale * (Phi.transpose() * sol.coefficients());
    model.intercept = scale * sol.bias + center;
}

}  // namespace

KernelModel fit_kernel(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                       const Eigen::Ref<const Eigen::VectorXd>& w, const KernelRegSpec& spec, std::uint64_t seed) {
    validate(spec);
    validate_training_data(X, y, w);
    const auto rows = positive_rows(w);
    const Eigen::MatrixXd Xp = select_rows(X, rows);
    const Eigen::VectorXd yp = select_values(y, rows);
    const Eigen::VectorXd wp = select_values(w, rows);

    KernelModel model;
    model.spec = spec;
    model.seed = seed;
    model.scaler = MinMaxScaler::fit(Xp);
    model.features = RandomFeatures::draw(X.cols(), spec.expansion_dims, spec.kernel_scale, seed);
    const Eigen::MatrixXd Phi = model.features.map(model.scaler.apply(Xp));
    if (spec.learner == KernelLearner::least_squares)
        solve_least_squares(model, Phi, yp, wp);
    else
        solve_svm(model, Phi, yp, wp);
    return model;
}

Eigen::VectorXd predict_kernel(const KernelModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X) {
    if (X.rows() == 0) return Eigen::VectorXd(0);
    const Eigen::MatrixXd Phi = model.features.map(model.scaler.apply(X));
    return (Phi * model.beta).array() + model.intercept;
}

}  // namespace hydroens
