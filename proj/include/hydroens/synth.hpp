#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hydroens/features.hpp"
#include "hydroens/sst_weights.hpp"
#include "hydroens/timeseries.hpp"

namespace hydroens {

struct ScenarioSpec {
    std::uint64_t seed = 2019;
    int first_year = 2007;
    int train_years = 12;            // first_year .. first_year + train_years - 1
    int train_terms_per_year = 3;
    int test_terms = 5;              // all in the year after training
    int term_hours_min = 60;
    int term_hours_max = 100;
    double peak_min = 100.0;         // inflow units per second
    double peak_max = 2000.0;
    int peaks_min = 1;
    int peaks_max = 3;
    double base_flow = 20.0;
    double noise = 0.03;             // relative inflow noise
    int lag_hours = 4;               // rainfall leads inflow by this much
    double guidance_noise = 0.15;    // per lead hour, relative to rain + 1
    int gauges = 5;
    int sst_dims = 64;
    double sst_separation = 4.0;     // distance between flood / non-flood month centres
    double sst_intensity = 3.0;      // flood-magnitude signal carried by flood months

    /// Throws ConfigError for out-of-range fields.
    void validate() const;
};

struct Peak {
    HourStamp time;
    double level = 0.0;
    int term = 0;
};

struct Hydrograph {
    HydroSeries inflow;
    FloodBatchSet terms;  // training terms first, then the test year
    std::vector<Peak> peaks;
};

struct Rainfall {
    HydroSeries basin;
    std::vector<HydroSeries> gauges;    // gauge1..gaugeN
    std::vector<HydroSeries> guidance;  // lead 1..6
    std::vector<GridField> grid;        // term windows plus two days of history
};

/// Gamma-pulse superposition over a base flow. Deterministic given spec.seed.
Hydrograph gen_hydrograph(const ScenarioSpec& spec);

/// Rainfall pulses matching the inflow pulses, shifted earlier by lag_hours.
Rainfall gen_rainfall(const Hydrograph& hydro, const ScenarioSpec& spec);

/// Two Gaussian clusters (June..October vs the rest). Flood months additionally
/// carry `sst_intensity * magnitude` along a fixed direction when `magnitude` is given.
std::vector<MonthlyFeature> gen_sst_features(const std::vector<MonthKey>& months, int dims, double separation,
                                             std::uint64_t seed, const std::map<MonthKey, double>& magnitude = {},
                                             double intensity = 0.0);

/// Unit-peak gamma pulse with shape a: (s / (a - 1))^(a - 1) exp(-(s - (a - 1))), s >= 0.
double gamma_pulse(double s, double shape = 3.0);

struct Scenario {
    ScenarioSpec spec;
    std::map<std::string, HydroSeries> series;  // inflow, water_height, rain, gauge1.., vp1, vp2, guidance_h1..h6
    std::vector<GridField> grid;
    FloodBatchSet train_terms;
    FloodBatchSet test_terms;
    std::vector<MonthlyFeature> sst;
    std::vector<Peak> peaks;

    FeatureSources sources() const { return {series, grid}; }
};

Scenario generate_scenario(const ScenarioSpec& spec);

/// Predictor recipe used for the synthetic scenario.
std::vector<FeatureStep> default_feature_recipe(int gauges = 5);

}  // namespace hydroens
