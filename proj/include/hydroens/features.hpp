#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hydroens/pca.hpp"
#include "hydroens/timeseries.hpp"

namespace hydroens {

/// One predictor column aligned to the rows of its source series.
struct FeatureColumn {
    std::string name;
    std::vector<double> values;
    std::vector<std::uint8_t> valid;
    bool dummy = false;
};

struct LagSpec {
    int p = 8;
};

/// Columns j = 1..p holding the value at t - j. The first p rows (and rows whose
/// lagged source is masked) are invalid. Throws InsufficientHistory when the
/// series is shorter than p + 1.
std::vector<FeatureColumn> ar_block(const HydroSeries& series, LagSpec spec, const std::string& prefix = "ar");

/// Mean of the p strictly-past values.
FeatureColumn ma_block(const HydroSeries& series, LagSpec spec, const std::string& name = "ma");

inline constexpr std::size_t kGridCells = 400;

/// Analysed rainfall on the fixed 20 x 20 basin grid at one hour.
class GridField {
public:
    GridField() = default;
    /// Throws ValidationError unless there are exactly 400 finite, non-negative cells.
    GridField(HourStamp t, std::vector<double> cells);

    HourStamp time() const noexcept { return t_; }
    const std::vector<double>& cells() const noexcept { return cells_; }

private:
    HourStamp t_{};
    std::vector<double> cells_;
};

struct GridMoments {
    double mean = 0.0;
    double stddev = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;  // non-excess (normal -> 3)
    bool degenerate = false;  // zero variance: skewness / kurtosis are NaN
};

/// Population moments over the cells. A zero-variance field yields NaN
/// skewness/kurtosis, `degenerate = true`, and a warning.
GridMoments grid_moments(const GridField& field);
GridMoments grid_moments(const std::vector<double>& cells, bool warn_on_degenerate = true);

enum class GradientMode {
    least_squares,  // slope of the LS line through the window + 1 most recent values
    difference      // (y_t - y_{t-window}) / window
};

/// Per-hour slope over the trailing window; rows without window + 1 observed values are invalid.
FeatureColumn trapezoid_gradient(const HydroSeries& series, int window = 12,
                                 GradientMode mode = GradientMode::least_squares, const std::string& name = "grad");

/// Per-cell rainfall summed over the `horizon` fields ending at each requested time.
/// Rows lacking any of those fields are marked invalid (and hold zeros).
Eigen::MatrixXd accumulate_rain(const std::vector<GridField>& fields, const std::vector<HourStamp>& times, int horizon,
                                std::vector<std::uint8_t>& valid);

struct PcaFeatures {
    PcaModel model;
    Eigen::MatrixXd scores;  // rows x kept
};

/// Accumulated-rainfall PCA fitted on every accumulable hour of `fields`.
PcaFeatures accum_rain_pca(const std::vector<GridField>& fields, int horizon = 6, double var_threshold = 0.85,
                           Eigen::Index max_components = 16);

/// PCA of the rainfall-guidance lead columns (rows = hours, cols = leads).
PcaFeatures guidance_pca(const Eigen::Ref<const Eigen::MatrixXd>& guidance, double var_threshold = 0.90);

/// One-hot June..October indicator columns. Throws ValidationError when an
/// in-term timestamp (`in_term[i] != 0`) lies outside June to October.
std::vector<FeatureColumn> seasonal_dummies(const std::vector<HourStamp>& times,
                                            const std::vector<std::uint8_t>& in_term = {});

/// One step of the predictor recipe.
struct FeatureStep {
    std::string transform;             // ar | ma | gradient | grid_moments | accum_pca | guidance_pca | dummies
    std::vector<std::string> sources;  // series names (guidance_pca: the lead columns in order)
    int p = 8;
    int window = 12;
    GradientMode mode = GradientMode::least_squares;
    int horizon = 6;
    double threshold = 0.85;
    int max_components = 0;
};

/// Raw inputs available to the recipe.
struct FeatureSources {
    std::map<std::string, HydroSeries> series;
    std::vector<GridField> grid;
};

/// Predictor values at a list of row timestamps.
struct FeatureTable {
    std::vector<std::string> names;
    std::vector<std::uint8_t> dummy;
    Eigen::MatrixXd X;
    std::vector<std::uint8_t> valid;  // per row
};

/// Ordered recipe whose PCA steps are fitted on training rows and then frozen.
class FeaturePipeline {
public:
    FeaturePipeline() = default;
    explicit FeaturePipeline(std::vector<FeatureStep> steps);

    const std::vector<FeatureStep>& steps() const noexcept { return steps_; }
    bool fitted() const noexcept { return fitted_; }
    const std::map<std::size_t, PcaModel>& pca_models() const noexcept { return pca_; }

    /// Fits every PCA step on the valid rows among `train_times`.
    void fit(const FeatureSources& sources, const std::vector<HourStamp>& train_times);
    /// Restores frozen PCA state (deserialization).
    void set_fitted(std::map<std::size_t, PcaModel> models);

    FeatureTable transform(const FeatureSources& sources, const std::vector<HourStamp>& times) const;

private:
    std::vector<FeatureStep> steps_;
    std::map<std::size_t, PcaModel> pca_;
    bool fitted_ = false;
};

}  // namespace hydroens
