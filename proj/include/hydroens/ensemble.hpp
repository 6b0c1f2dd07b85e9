#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace hydroens {

/// sqrt(sum v_t^2).
double l2_norm(const Eigen::Ref<const Eigen::VectorXd>& v);

/// v / (|v|_2 / N). Throws ZeroNormError(model, term) for a zero vector.
Eigen::VectorXd l2_normalized(const Eigen::Ref<const Eigen::VectorXd>& v, const std::string& model = "?",
                              int term = -1);

/// One base model's forecasts split by flood term, with cached norms.
class ModelOutput {
public:
    ModelOutput() = default;
    ModelOutput(std::string model, std::vector<Eigen::VectorXd> terms);

    const std::string& model() const noexcept { return model_; }
    std::size_t term_count() const noexcept { return terms_.size(); }
    const Eigen::VectorXd& term(std::size_t b) const { return terms_.at(b); }
    double norm(std::size_t b) const { return norms_.at(b); }
    const std::vector<Eigen::VectorXd>& terms() const noexcept { return terms_; }
    Eigen::VectorXd concatenated() const;

    /// Copy with every value multiplied by c (norms rescaled exactly as recomputed).
    ModelOutput scaled(double c) const;

private:
    std::string model_;
    std::vector<Eigen::VectorXd> terms_;
    std::vector<double> norms_;
};

/// Per-term, per-model simplex coefficients. Row b of `alpha` belongs to term b.
struct CoefficientSet {
    std::vector<std::string> models;
    Eigen::MatrixXd alpha;  // B x M

    static CoefficientSet uniform(std::size_t terms, std::vector<std::string> models);
    static CoefficientSet repeated(std::size_t terms, std::vector<std::string> models,
                                   const Eigen::Ref<const Eigen::VectorXd>& a);
    /// Throws ConfigError unless every row is >= 0 and sums to 1 within 1e-12.
    void validate() const;
};

/// Throws ConfigError unless a >= 0 and sum(a) = 1 within 1e-12.
void validate_simplex(const Eigen::Ref<const Eigen::VectorXd>& a);

/// sum_m a_m * yhat_m / (|yhat_m|_2 / N) over whole-range vectors.
Eigen::VectorXd global_ensemble(const std::vector<Eigen::VectorXd>& outputs, const Eigen::Ref<const Eigen::VectorXd>& a,
                                const std::vector<std::string>& models = {});
Eigen::VectorXd global_ensemble(const std::vector<ModelOutput>& outputs, const Eigen::Ref<const Eigen::VectorXd>& a);

/// sum_m a_m * yhat_m / d_m with caller-supplied denominators d_m = |yhat_m|_2 / N.
Eigen::VectorXd ensemble_with_denominators(const std::vector<Eigen::VectorXd>& outputs,
                                           const Eigen::Ref<const Eigen::VectorXd>& denominators,
                                           const Eigen::Ref<const Eigen::VectorXd>& a);

/// Batch-term variant: each term normalized by its own norm and combined with
/// that term's coefficients. Warns when two models share a norm in one term.
std::vector<Eigen::VectorXd> batch_ensemble(const std::vector<ModelOutput>& outputs, const CoefficientSet& coeffs);

/// The normalized output carries energy N per unit coefficient mass; this restores
/// the models' own level: multiplies term b by sum_m a_m |yhat_m,b|_2 / N_b.
std::vector<Eigen::VectorXd> restore_level(const std::vector<Eigen::VectorXd>& ensemble,
                                           const std::vector<ModelOutput>& outputs, const CoefficientSet& coeffs);

/// |yhat_m,b|_2 for every term b (rows) and model m (columns).
struct NormTable {
    std::vector<std::string> models;
    std::vector<int> term_ids;
    Eigen::MatrixXd norms;  // B x M

    static NormTable from(const std::vector<ModelOutput>& outputs, std::vector<int> term_ids = {});
};

struct MedianSigma {
    Eigen::VectorXd median;  // per model
    Eigen::VectorXd stdev;   // sample (n - 1)
    Eigen::VectorXd raw;     // median + stdev
    Eigen::VectorXd coefficients;
};

/// raw_m = median_b + stdev_b of the model's term norms, normalized to sum 1.
MedianSigma median_sigma_coeffs(const NormTable& table);

/// Simplex grid {i/k} over M models.
std::vector<Eigen::VectorXd> simplex_grid(int models, int divisions);

struct GridSearchResult {
    Eigen::VectorXd best;
    double best_mse = 0.0;
    std::vector<std::pair<Eigen::VectorXd, double>> evaluated;
};

/// Coefficients minimizing the MSE of the level-restored batch ensemble against
/// `targets` (per term), searched over simplex_grid(M, divisions).
GridSearchResult search_coefficients(const std::vector<ModelOutput>& outputs,
                                     const std::vector<Eigen::VectorXd>& targets, int divisions);

}  // namespace hydroens
