#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "hydroens/learners/common.hpp"

namespace hydroens {

enum class KernelLearner { least_squares, svm };

struct KernelRegSpec {
    KernelLearner learner = KernelLearner::least_squares;
    double kernel_scale = 1.0;
    double lambda = 1e-4;
    int expansion_dims = 128;
    double epsilon = 0.1;  // svm only, target units
};

void validate(const KernelRegSpec& spec);

/// Random Fourier features for a Gaussian kernel exp(-|u - v|^2 / (2 s^2)):
/// phi(x) = sqrt(2 / D) cos(x' Omega + phase), Omega ~ N(0, 1 / s^2).
struct RandomFeatures {
    Eigen::MatrixXd omega;  // P x D
    Eigen::VectorXd phase;  // D

    static RandomFeatures draw(Eigen::Index inputs, int dims, double scale, std::uint64_t seed);
    Eigen::MatrixXd map(const Eigen::Ref<const Eigen::MatrixXd>& Xs) const;
};

struct KernelModel {
    KernelRegSpec spec;
    MinMaxScaler scaler;
    RandomFeatures features;
    Eigen::VectorXd beta;
    double intercept = 0.0;
    std::uint64_t seed = 0;
};

/// Normal equations of min sum w_t (y_t - c - phi_t' b)^2 + lambda |b|^2 in the
/// unknowns (c, b). The intercept is not penalized.
struct NormalEquations {
    Eigen::MatrixXd A;
    Eigen::VectorXd rhs;
};

NormalEquations kernel_normal_equations(const Eigen::Ref<const Eigen::MatrixXd>& Phi,
                                        const Eigen::Ref<const Eigen::VectorXd>& y,
                                        const Eigen::Ref<const Eigen::VectorXd>& w, double lambda);

/// Least squares: weighted ridge on the features; SolveError when the system is
/// singular. svm: epsilon-insensitive loss with C_t = w_t / (2 lambda).
/// Rows with w = 0 are dropped before anything else.
KernelModel fit_kernel(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                       const Eigen::Ref<const Eigen::VectorXd>& w, const KernelRegSpec& spec, std::uint64_t seed);

Eigen::VectorXd predict_kernel(const KernelModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X);

}  // namespace hydroens
