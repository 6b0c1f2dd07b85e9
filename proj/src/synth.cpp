#include "hydroens/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "hydroens/errors.hpp"
#include "hydroens/util.hpp"

namespace hydroens {

namespace {

constexpr double kPulseShape = 3.0;
constexpr int kGridHistory = 36;
constexpr int kGridSide = 20;

struct Pulse {
    double onset = 0.0;  // hours since series start
    double tau = 1.0;
    double level = 0.0;
    std::size_t pattern = 0;
};

HourStamp series_start(const ScenarioSpec& spec) { return HourStamp::from_civil(spec.first_year, 1, 1, 0); }
HourStamp series_end(const ScenarioSpec& spec) {
    return HourStamp::from_civil(spec.first_year + spec.train_years + 1, 1, 1, 0) - 1;
}

double pulse_tau(const ScenarioSpec& spec, std::size_t k) {
    std::mt19937_64 rng(derive_seed(spec.seed, "tau" + std::to_string(k)));
    return std::uniform_real_distribution<double>(3.0, 6.0)(rng);
}

}  // namespace

void ScenarioSpec::validate() const {
    if (train_years < 1 || train_terms_per_year < 1 || test_terms < 1) throw ConfigError("scenario needs terms in train and test years");
    if (term_hours_min < 24 || term_hours_max < term_hours_min) throw ConfigError("scenario term hours must satisfy 24 <= min <= max");
    if (!(peak_min > 0.0) || peak_max < peak_min) throw ConfigError("scenario peak range must be positive");
    if (peaks_min < 1 || peaks_max < peaks_min) throw ConfigError("scenario peak count range invalid");
    if (!(base_flow >= 0.0) || !(noise >= 0.0) || !(guidance_noise >= 0.0)) throw ConfigError("scenario noise/base must be >= 0");
    if (lag_hours < 0) throw ConfigError("scenario lag must be >= 0");
    if (gauges < 1 || sst_dims < 2) throw ConfigError("scenario needs >= 1 gauge and >= 2 SST dimensions");
    if (!(sst_separation >= 0.0) || !(sst_intensity >= 0.0)) throw ConfigError("scenario SST parameters must be >= 0");
    const int season = 153 * 24;
    const int slots = std::max(train_terms_per_year, test_terms);
    if (season / slots < term_hours_max + 2 * (kGridHistory + 12))
        throw ConfigError("too many flood terms per season for the configured term length");
}

double gamma_pulse(double s, double shape) {
    if (s <= 0.0) return 0.0;
    const double m = shape - 1.0;
    return std::pow(s / m, m) * std::exp(-(s - m));
}

Hydrograph gen_hydrograph(const ScenarioSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(derive_seed(spec.seed, "hydrograph"));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const HourStamp start = series_start(spec);
    const std::size_t n = static_cast<std::size_t>(series_end(spec) - start + 1);
    std::vector<double> flow(n, spec.base_flow);
    std::vector<FloodTerm> terms;
    Hydrograph h;

    auto add_year = [&](int year, int count) {
        const HourStamp season = HourStamp::from_civil(year, 6, 1, 0);
        const int slot = 153 * 24 / count;
        for (int s = 0; s < count; ++s) {
            const int len = spec.term_hours_min +
                            static_cast<int>(unif(rng) * (spec.term_hours_max - spec.term_hours_min + 1));
            const int margin = kGridHistory + 12;
            const int room = slot - len - 2 * margin;
            const HourStamp ts = season + s * slot + margin + static_cast<int>(unif(rng) * room);
            FloodTerm term{static_cast<int>(terms.size()), ts, ts + (std::min(len, spec.term_hours_max) - 1)};
            const int npk = spec.peaks_min + static_cast<int>(unif(rng) * (spec.peaks_max - spec.peaks_min + 1));
            for (int k = 0; k < npk; ++k) {
                const double frac = (k + 0.3 + 0.4 * unif(rng)) / npk;
                const HourStamp peak = term.start + static_cast<int>(std::lround(0.15 * len + frac * 0.6 * len));
                const double level =
                    std::exp(std::log(spec.peak_min) + unif(rng) * (std::log(spec.peak_max) - std::log(spec.peak_min)));
                h.peaks.push_back(Peak{peak, level, term.id});
            }
            terms.push_back(term);
        }
    };
    for (int y = 0; y < spec.train_years; ++y) add_year(spec.first_year + y, spec.train_terms_per_year);
    add_year(spec.first_year + spec.train_years, spec.test_terms);

    for (std::size_t k = 0; k < h.peaks.size(); ++k) {
        const double tau = pulse_tau(spec, k);
        const double peak_at = static_cast<double>(h.peaks[k].time - start);
        const double onset = peak_at - (kPulseShape - 1.0) * tau;
        const auto first = static_cast<std::size_t>(std::max(0.0, std::floor(onset)));
        const auto last = std::min(n, static_cast<std::size_t>(onset + 40.0 * tau) + 1);
        for (std::size_t t = first; t < last; ++t)
            flow[t] += h.peaks[k].level * gamma_pulse((static_cast<double>(t) - onset) / tau, kPulseShape);
    }
    if (spec.noise > 0.0) {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (auto& v : flow) v = std::max(0.0, v * (1.0 + spec.noise * normal(rng)));
    }
    h.inflow = HydroSeries(start, std::move(flow));
    h.terms = FloodBatchSet(std::move(terms));
    return h;
}

Rainfall gen_rainfall(const Hydrograph& hydro, const ScenarioSpec& spec) {
    const HourStamp start = hydro.inflow.start();
    const std::size_t n = hydro.inflow.size();
    std::mt19937_64 rng(derive_seed(spec.seed, "rainfall"));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // Spatial pattern per storm: Gaussian blob over a uniform background, mean 1.
    std::vector<Pulse> pulses;
    std::vector<std::vector<double>> patterns;
    for (std::size_t k = 0; k < hydro.peaks.size(); ++k) {
        const double tau = pulse_tau(spec, k);
        Pulse p;
        p.tau = tau;
        p.onset = static_cast<double>(hydro.peaks[k].time - start) - (kPulseShape - 1.0) * tau - spec.lag_hours;
        p.level = hydro.peaks[k].level / 100.0;
        p.pattern = k;
        pulses.push_back(p);
        const double cx = unif(rng) * (kGridSide - 1), cy = unif(rng) * (kGridSide - 1);
        const double width = 2.0 + 4.0 * unif(rng);
        std::vector<double> pat(kGridCells);
        double total = 0.0;
        for (int i = 0; i < kGridSide; ++i)
            for (int j = 0; j < kGridSide; ++j) {
                const double d2 = (i - cx) * (i - cx) + (j - cy) * (j - cy);
                const double v = 0.3 + std::exp(-0.5 * d2 / (width * width));
                pat[static_cast<std::size_t>(i * kGridSide + j)] = v;
                total += v;
            }
        for (auto& v : pat) v *= static_cast<double>(kGridCells) / total;
        patterns.push_back(std::move(pat));
    }

    std::vector<double> rain(n, 0.0);
    std::vector<std::vector<std::pair<std::size_t, double>>> active(n);
    for (std::size_t k = 0; k < pulses.size(); ++k) {
        const auto& p = pulses[k];
        const auto first = static_cast<std::size_t>(std::max(0.0, std::floor(p.onset)));
        const auto last = std::min(n, static_cast<std::size_t>(std::max(0.0, p.onset + 40.0 * p.tau)) + 1);
        for (std::size_t t = first; t < last; ++t) {
            const double v = p.level * gamma_pulse((static_cast<double>(t) - p.onset) / p.tau, kPulseShape);
            if (v <= 0.0) continue;
            rain[t] += v;
            active[t].emplace_back(k, v);
        }
    }

    Rainfall out;
    out.basin = HydroSeries(start, rain);
    for (int g = 0; g < spec.gauges; ++g) {
        const double factor = 0.8 + 0.4 * unif(rng);
        std::vector<double> v(n);
        for (std::size_t t = 0; t < n; ++t) v[t] = std::max(0.0, rain[t] * factor * (1.0 + 0.1 * normal(rng)));
        out.gauges.emplace_back(start, std::move(v));
    }
    for (int h = 1; h <= 6; ++h) {
        std::vector<double> v(n);
        for (std::size_t t = 0; t < n; ++t) {
            const double future = rain[std::min(n - 1, t + static_cast<std::size_t>(h))];
            const double sd = spec.guidance_noise * h * (future + 0.1);
            v[t] = std::max(0.0, future + (sd > 0.0 ? sd * normal(rng) : 0.0));
        }
        out.guidance.emplace_back(start, std::move(v));
    }

    std::set<std::int64_t> hours;
    for (const auto& term : hydro.terms)
        for (HourStamp t = term.start - kGridHistory; t <= term.end; t = t + 1)
            if (hydro.inflow.contains(t)) hours.insert(t.hours());
    out.grid.reserve(hours.size());
    for (std::int64_t hour : hours) {
        const auto t = static_cast<std::size_t>(HourStamp(hour) - start);
        std::vector<double> cells(kGridCells);
        for (std::size_t c = 0; c < kGridCells; ++c) cells[c] = 0.02 * unif(rng);
        for (const auto& [k, v] : active[t])
            for (std::size_t c = 0; c < kGridCells; ++c) cells[c] += v * patterns[k][c];
        out.grid.emplace_back(HourStamp(hour), std::move(cells));
    }
    return out;
}

std::vector<MonthlyFeature> gen_sst_features(const std::vector<MonthKey>& months, int dims, double separation,
                                             std::uint64_t seed, const std::map<MonthKey, double>& magnitude,
                                             double intensity) {
    if (dims < 2) throw ConfigError("SST features need at least 2 dimensions");
    std::mt19937_64 rng(derive_seed(seed, "sst"));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd direction(dims), signal(dims);
    for (int k = 0; k < dims; ++k) direction(k) = normal(rng);
    for (int k = 0; k < dims; ++k) signal(k) = normal(rng);
    direction.normalize();
    signal -= signal.dot(direction) * direction;
    signal.normalize();
    const double spread = 1.0 / std::sqrt(static_cast<double>(dims));
    std::vector<MonthlyFeature> out;
    out.reserve(months.size());
    for (const auto& m : months) {
        const bool flood = m.month >= 6 && m.month <= 10;
        Eigen::VectorXd z = (flood ? 0.5 : -0.5) * separation * direction;
        if (flood) {
            auto it = magnitude.find(m);
            if (it != magnitude.end()) z += intensity * it->second * signal;
        }
        for (int k = 0; k < dims; ++k) z(k) += spread * normal(rng);
        out.push_back(MonthlyFeature{m, std::move(z)});
    }
    return out;
}

Scenario generate_scenario(const ScenarioSpec& spec) {
    spec.validate();
    Scenario sc;
    sc.spec = spec;
    const Hydrograph hydro = gen_hydrograph(spec);
    Rainfall rain = gen_rainfall(hydro, spec);
    const HourStamp start = hydro.inflow.start();
    const std::size_t n = hydro.inflow.size();

    std::mt19937_64 rng(derive_seed(spec.seed, "stations"));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> height(n), vp1(n), vp2(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double q = hydro.inflow.value(t);
        const HourStamp ts = start + static_cast<std::int64_t>(t);
        const double season = 2.0 * std::numbers::pi * (static_cast<double>(ts.hours() % 8766) / 8766.0);
        height[t] = 150.0 + 8.0 * std::log1p(q / 50.0) + 0.05 * normal(rng);
        vp1[t] = 20.0 + 6.0 * std::sin(season - 1.7) + 0.5 * normal(rng) + 0.3 * rain.basin.value(t);
        vp2[t] = 18.0 + 5.0 * std::sin(season - 1.9) + 0.5 * normal(rng) + 0.2 * rain.basin.value(t);
    }

    sc.series.emplace("inflow", hydro.inflow);
    sc.series.emplace("water_height", HydroSeries(start, std::move(height)));
    sc.series.emplace("rain", rain.basin);
    for (std::size_t g = 0; g < rain.gauges.size(); ++g) sc.series.emplace("gauge" + std::to_string(g + 1), rain.gauges[g]);
    sc.series.emplace("vp1", HydroSeries(start, std::move(vp1)));
    sc.series.emplace("vp2", HydroSeries(start, std::move(vp2)));
    for (std::size_t h = 0; h < rain.guidance.size(); ++h)
        sc.series.emplace("guidance_h" + std::to_string(h + 1), rain.guidance[h]);
    sc.grid = std::move(rain.grid);

    const auto& all = hydro.terms.terms();
    const std::size_t n_train = static_cast<std::size_t>(spec.train_years * spec.train_terms_per_year);
    sc.train_terms = FloodBatchSet(std::vector<FloodTerm>(all.begin(), all.begin() + static_cast<long>(n_train)));
    sc.test_terms = FloodBatchSet(std::vector<FloodTerm>(all.begin() + static_cast<long>(n_train), all.end()));
    sc.peaks = hydro.peaks;

    std::map<MonthKey, double> magnitude;
    double top = 0.0;
    for (const auto& p : hydro.peaks) {
        auto& v = magnitude[p.time.month_key()];
        v = std::max(v, p.level);
        top = std::max(top, p.level);
    }
    for (auto& [m, v] : magnitude) v /= top;
    std::vector<MonthKey> months;
    for (MonthKey m{spec.first_year, 1}; m.year <= spec.first_year + spec.train_years; m = m.next()) months.push_back(m);
    sc.sst = gen_sst_features(months, spec.sst_dims, spec.sst_separation, spec.seed, magnitude, spec.sst_intensity);
    return sc;
}

std::vector<FeatureStep> default_feature_recipe(int gauges) {
    std::vector<FeatureStep> steps;
    auto step = [](std::string transform, std::vector<std::string> sources) {
        FeatureStep s;
        s.transform = std::move(transform);
        s.sources = std::move(sources);
        return s;
    };
    steps.push_back(step("ar", {"inflow"}));
    steps.push_back(step("ma", {"inflow"}));
    FeatureStep h = step("ar", {"water_height"});
    h.p = 2;
    steps.push_back(h);
    for (const std::string src : {"inflow", "water_height"}) steps.push_back(step("gradient", {src}));
    for (int g = 1; g <= gauges; ++g) steps.push_back(step("gradient", {"gauge" + std::to_string(g)}));
    for (const std::string src : {"vp1", "vp2"}) {
        FeatureStep v = step("ar", {src});
        v.p = 1;
        steps.push_back(v);
    }
    steps.push_back(step("grid_moments", {}));
    FeatureStep acc = step("accum_pca", {});
    acc.horizon = 6;
    acc.threshold = 0.85;
    acc.max_components = 16;
    steps.push_back(acc);
    FeatureStep gd = step("guidance_pca", {"guidance_h1", "guidance_h2", "guidance_h3", "guidance_h4", "guidance_h5",
                                           "guidance_h6"});
    gd.threshold = 0.90;
    steps.push_back(gd);
    steps.push_back(step("dummies", {}));
    return steps;
}

}  // namespace hydroens
