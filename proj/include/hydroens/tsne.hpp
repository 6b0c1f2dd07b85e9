#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace hydroens {

struct TsneOptions {
    enum class Method { automatic, exact, barnes_hut };
    enum class Init { pca, random };

    int dims = 3;
    /// Non-positive selects min(30, (M - 1) / 3).
    double perplexity = 0.0;
    int iterations = 1000;
    double learning_rate = 200.0;
    double early_exaggeration = 12.0;
    int exaggeration_iterations = 250;
    std::uint64_t seed = 0;
    Method method = Method::automatic;  // automatic: Barnes-Hut above `barnes_hut_threshold` points
    Init init = Init::pca;
    double theta = 0.5;
    int barnes_hut_threshold = 2000;
};

struct TsneResult {
    Eigen::MatrixXd embedding;  // M x dims
    double perplexity = 0.0;
    double kl_initial = 0.0;    // KL(P || Q) of the initial layout
    double kl_final = 0.0;
    bool barnes_hut = false;
};

/// t-distributed stochastic neighbour embedding of the rows of `features`.
/// Requires M >= 4 and 0 < perplexity <= (M - 1) / 3 (ConfigError otherwise).
/// Single-threaded and bit-reproducible for a fixed seed.
TsneResult tsne_embed(const Eigen::Ref<const Eigen::MatrixXd>& features, const TsneOptions& options = {});

/// KL(P || Q) for an exact joint P (symmetrized input affinities) and a layout Y.
double tsne_kl_divergence(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y);

/// Symmetrized joint affinities P for the given perplexity (exact, dense).
Eigen::MatrixXd tsne_joint_probabilities(const Eigen::Ref<const Eigen::MatrixXd>& features, double perplexity);

}  // namespace hydroens
