#include "hydroens/features.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_map>

#include "hydroens/errors.hpp"
#include "hydroens/log.hpp"

namespace hydroens {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string two_digit(int v) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d", v);
    return buf;
}

void require_history(const HydroSeries& series, int p) {
    if (p < 1) throw ConfigError("lag order must be >= 1");
    if (series.size() < static_cast<std::size_t>(p) + 1)
        throw InsufficientHistory("series of " + std::to_string(series.size()) + " samples is too short for order " +
                                  std::to_string(p));
}

std::unordered_map<std::int64_t, std::size_t> index_fields(const std::vector<GridField>& fields) {
    std::unordered_map<std::int64_t, std::size_t> index;
    index.reserve(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) index[fields[i].time().hours()] = i;
    return index;
}

const HydroSeries& find_series(const FeatureSources& sources, const std::string& name) {
    auto it = sources.series.find(name);
    if (it == sources.series.end()) throw ConfigError("feature recipe references unknown series '" + name + "'");
    return it->second;
}

// Picks the rows of a full-series column at the requested times.
void gather(const HydroSeries& series, const FeatureColumn& column, const std::vector<HourStamp>& times,
            Eigen::Ref<Eigen::VectorXd> out, std::vector<std::uint8_t>& valid) {
    for (std::size_t r = 0; r < times.size(); ++r) {
        const auto idx = series.index_of(times[r]);
        if (!idx || !column.valid[*idx]) {
            valid[r] = 0;
            out(static_cast<Eigen::Index>(r)) = 0.0;
        } else {
            out(static_cast<Eigen::Index>(r)) = column.values[*idx];
        }
    }
}

Eigen::MatrixXd guidance_matrix(const FeatureSources& sources, const FeatureStep& step,
                                const std::vector<HourStamp>& times, std::vector<std::uint8_t>& valid) {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(times.size()),
                                              static_cast<Eigen::Index>(step.sources.size()));
    valid.assign(times.size(), 1);
    for (std::size_t c = 0; c < step.sources.size(); ++c) {
        const auto& s = find_series(sources, step.sources[c]);
        for (std::size_t r = 0; r < times.size(); ++r) {
            const auto idx = s.index_of(times[r]);
            if (!idx || !s.observed(*idx)) {
                valid[r] = 0;
                continue;
            }
            G(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = s.value(*idx);
        }
    }
    return G;
}

Eigen::MatrixXd valid_rows(const Eigen::MatrixXd& M, const std::vector<std::uint8_t>& valid) {
    std::vector<Eigen::Index> keep;
    for (std::size_t r = 0; r < valid.size(); ++r)
        if (valid[r]) keep.push_back(static_cast<Eigen::Index>(r));
    Eigen::MatrixXd out(static_cast<Eigen::Index>(keep.size()), M.cols());
    for (std::size_t i = 0; i < keep.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = M.row(keep[i]);
    return out;
}

}  // namespace

std::vector<FeatureColumn> ar_block(const HydroSeries& series, LagSpec spec, const std::string& prefix) {
    require_history(series, spec.p);
    const std::size_t n = series.size();
    std::vector<FeatureColumn> cols;
    for (int j = 1; j <= spec.p; ++j) {
        FeatureColumn col{prefix + std::to_string(j), std::vector<double>(n, kNaN), std::vector<std::uint8_t>(n, 0)};
        for (std::size_t t = static_cast<std::size_t>(spec.p); t < n; ++t) {
            const std::size_t src = t - static_cast<std::size_t>(j);
            if (series.observed(src)) {
                col.values[t] = series.value(src);
                col.valid[t] = 1;
            }
        }
        cols.push_back(std::move(col));
    }
    return cols;
}

FeatureColumn ma_block(const HydroSeries& series, LagSpec spec, const std::string& name) {
    require_history(series, spec.p);
    const std::size_t n = series.size();
    const auto p = static_cast<std::size_t>(spec.p);
    FeatureColumn col{name, std::vector<double>(n, kNaN), std::vector<std::uint8_t>(n, 0)};
    for (std::size_t t = p; t < n; ++t) {
        double sum = 0.0;
        bool ok = true;
        for (std::size_t j = 1; j <= p && ok; ++j) {
            ok = series.observed(t - j);
            sum += series.value(t - j);
        }
        if (ok) {
            col.values[t] = sum / static_cast<double>(p);
            col.valid[t] = 1;
        }
    }
    return col;
}

GridField::GridField(HourStamp t, std::vector<double> cells) : t_(t), cells_(std::move(cells)) {
    if (cells_.size() != kGridCells)
        throw ValidationError("grid field at " + t.to_string() + " has " + std::to_string(cells_.size()) +
                              " cells, expected 400");
    for (double v : cells_)
        if (!std::isfinite(v) || v < 0.0)
            throw ValidationError("grid field at " + t.to_string() + " has a negative or non-finite cell");
}

GridMoments grid_moments(const GridField& field) { return grid_moments(field.cells()); }

GridMoments grid_moments(const std::vector<double>& cells, bool warn_on_degenerate) {
    GridMoments m;
    const double n = static_cast<double>(cells.size());
    for (double v : cells) m.mean += v;
    m.mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : cells) {
        const double d = v - m.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    const double scale = 1e-14 * std::max(1.0, std::abs(m.mean));
    if (m2 <= scale * scale) {
        m.stddev = 0.0;
        m.skewness = kNaN;
        m.kurtosis = kNaN;
        m.degenerate = true;
        if (warn_on_degenerate) log::warn("grid field has zero variance; skewness and kurtosis undefined");
        return m;
    }
    m.stddev = std::sqrt(m2);
    m.skewness = m3 / (m2 * m.stddev);
    m.kurtosis = m4 / (m2 * m2);
    return m;
}

FeatureColumn trapezoid_gradient(const HydroSeries& series, int window, GradientMode mode, const std::string& name) {
    if (window < 1) throw ConfigError("gradient window must be >= 1");
    const std::size_t n = series.size();
    const auto w = static_cast<std::size_t>(window);
    FeatureColumn col{name, std::vector<double>(n, kNaN), std::vector<std::uint8_t>(n, 0)};
    // x = -w..0, centred: x - xbar = k - w/2 for k = 0..w
    const double xbar = static_cast<double>(w) / 2.0;
    double sxx = 0.0;
    for (std::size_t k = 0; k <= w; ++k) sxx += (static_cast<double>(k) - xbar) * (static_cast<double>(k) - xbar);
    for (std::size_t t = w; t < n; ++t) {
        bool ok = true;
        for (std::size_t k = 0; k <= w && ok; ++k) ok = series.observed(t - w + k);
        if (!ok) continue;
        if (mode == GradientMode::difference) {
            col.values[t] = (series.value(t) - series.value(t - w)) / static_cast<double>(w);
        } else {
            double sxy = 0.0;
            for (std::size_t k = 0; k <= w; ++k) sxy += (static_cast<double>(k) - xbar) * series.value(t - w + k);
            col.values[t] = sxy / sxx;
        }
        col.valid[t] = 1;
    }
    return col;
}

Eigen::MatrixXd accumulate_rain(const std::vector<GridField>& fields, const std::vector<HourStamp>& times, int horizon,
                                std::vector<std::uint8_t>& valid) {
    if (horizon < 1) throw ConfigError("accumulation horizon must be >= 1");
    const auto index = index_fields(fields);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(times.size()), kGridCells);
    valid.assign(times.size(), 1);
    for (std::size_t r = 0; r < times.size(); ++r) {
        for (int k = 0; k < horizon; ++k) {
            auto it = index.find((times[r] - k).hours());
            if (it == index.end()) {
                valid[r] = 0;
                acc.row(static_cast<Eigen::Index>(r)).setZero();
                break;
            }
            const auto& cells = fields[it->second].cells();
            for (std::size_t c = 0; c < kGridCells; ++c) acc(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += cells[c];
        }
    }
    return acc;
}

PcaFeatures accum_rain_pca(const std::vector<GridField>& fields, int horizon, double var_threshold,
                           Eigen::Index max_components) {
    std::vector<HourStamp> times;
    times.reserve(fields.size());
    for (const auto& f : fields) times.push_back(f.time());
    std::vector<std::uint8_t> valid;
    const Eigen::MatrixXd acc = valid_rows(accumulate_rain(fields, times, horizon, valid), valid);
    PcaFeatures out;
    out.model = fit_pca(acc, var_threshold, max_components);
    out.scores = out.model.transform(acc);
    return out;
}

PcaFeatures guidance_pca(const Eigen::Ref<const Eigen::MatrixXd>& guidance, double var_threshold) {
    PcaFeatures out;
    out.model = fit_pca(guidance, var_threshold);
    out.scores = out.model.transform(guidance);
    return out;
}

std::vector<FeatureColumn> seasonal_dummies(const std::vector<HourStamp>& times,
                                            const std::vector<std::uint8_t>& in_term) {
    const std::size_t n = times.size();
    std::vector<FeatureColumn> cols;
    for (int month = 6; month <= 10; ++month)
        cols.push_back(FeatureColumn{"month_" + two_digit(month), std::vector<double>(n, 0.0),
                                     std::vector<std::uint8_t>(n, 1), true});
    for (std::size_t r = 0; r < n; ++r) {
        const int month = times[r].month();
        if (month >= 6 && month <= 10) {
            cols[static_cast<std::size_t>(month - 6)].values[r] = 1.0;
        } else if (!in_term.empty() && in_term[r]) {
            throw ValidationError("flood-term timestamp " + times[r].to_string() + " lies outside June to October");
        }
    }
    return cols;
}

FeaturePipeline::FeaturePipeline(std::vector<FeatureStep> steps) : steps_(std::move(steps)) {
    for (const auto& s : steps_) {
        const auto& t = s.transform;
        const bool known = t == "ar" || t == "ma" || t == "gradient" || t == "grid_moments" || t == "accum_pca" ||
                           t == "guidance_pca" || t == "dummies";
        if (!known) throw ConfigError("unknown feature transform '" + t + "'");
        if ((t == "ar" || t == "ma" || t == "gradient") && s.sources.size() != 1)
            throw ConfigError("transform '" + t + "' takes exactly one source series");
        if (t == "guidance_pca" && s.sources.empty()) throw ConfigError("guidance_pca needs lead columns");
    }
}

void FeaturePipeline::fit(const FeatureSources& sources, const std::vector<HourStamp>& train_times) {
    pca_.clear();
    for (std::size_t i = 0; i < steps_.size(); ++i) {
        const auto& step = steps_[i];
        std::vector<std::uint8_t> valid;
        if (step.transform == "accum_pca") {
            const Eigen::MatrixXd acc = accumulate_rain(sources.grid, train_times, step.horizon, valid);
            pca_[i] = fit_pca(valid_rows(acc, valid), step.threshold, step.max_components);
        } else if (step.transform == "guidance_pca") {
            const Eigen::MatrixXd G = guidance_matrix(sources, step, train_times, valid);
            pca_[i] = fit_pca(valid_rows(G, valid), step.threshold, step.max_components);
        }
    }
    fitted_ = true;
}

void FeaturePipeline::set_fitted(std::map<std::size_t, PcaModel> models) {
    pca_ = std::move(models);
    fitted_ = true;
}

FeatureTable FeaturePipeline::transform(const FeatureSources& sources, const std::vector<HourStamp>& times) const {
    if (!fitted_) throw ConfigError("feature pipeline used before fit");
    const auto n = static_cast<Eigen::Index>(times.size());
    FeatureTable table;
    table.valid.assign(times.size(), 1);
    std::vector<Eigen::VectorXd> columns;

    auto add = [&](std::string name, Eigen::VectorXd values, bool dummy = false) {
        table.names.push_back(std::move(name));
        table.dummy.push_back(dummy ? 1 : 0);
        columns.push_back(std::move(values));
    };
    auto add_series_column = [&](const HydroSeries& s, const FeatureColumn& col) {
        Eigen::VectorXd v(n);
        gather(s, col, times, v, table.valid);
        add(col.name, std::move(v));
    };

    for (std::size_t i = 0; i < steps_.size(); ++i) {
        const auto& step = steps_[i];
        const auto& t = step.transform;
        if (t == "ar") {
            const auto& s = find_series(sources, step.sources[0]);
            for (const auto& col : ar_block(s, LagSpec{step.p}, step.sources[0] + "_ar")) add_series_column(s, col);
        } else if (t == "ma") {
            const auto& s = find_series(sources, step.sources[0]);
            add_series_column(s, ma_block(s, LagSpec{step.p}, step.sources[0] + "_ma" + std::to_string(step.p)));
        } else if (t == "gradient") {
            const auto& s = find_series(sources, step.sources[0]);
            const std::string name = step.sources[0] + (step.mode == GradientMode::difference ? "_dgrad" : "_grad") +
                                     std::to_string(step.window);
            add_series_column(s, trapezoid_gradient(s, step.window, step.mode, name));
        } else if (t == "grid_moments") {
            const auto index = index_fields(sources.grid);
            Eigen::MatrixXd mom = Eigen::MatrixXd::Zero(n, 4);
            std::size_t degenerate = 0;
            for (std::size_t r = 0; r < times.size(); ++r) {
                auto it = index.find(times[r].hours());
                if (it == index.end()) {
                    table.valid[r] = 0;
                    continue;
                }
                const auto m = grid_moments(sources.grid[it->second].cells(), false);
                if (m.degenerate) {
                    ++degenerate;
                    table.valid[r] = 0;
                    continue;
                }
                mom.row(static_cast<Eigen::Index>(r)) << m.mean, m.stddev, m.skewness, m.kurtosis;
            }
            if (degenerate > 0)
                log::warn(std::to_string(degenerate) + " grid field(s) with zero variance; rows dropped");
            add("grid_mean", mom.col(0));
            add("grid_std", mom.col(1));
            add("grid_skew", mom.col(2));
            add("grid_kurt", mom.col(3));
        } else if (t == "accum_pca" || t == "guidance_pca") {
            const auto& model = pca_.at(i);
            std::vector<std::uint8_t> valid;
            const Eigen::MatrixXd raw = t == "accum_pca" ? accumulate_rain(sources.grid, times, step.horizon, valid)
                                                         : guidance_matrix(sources, step, times, valid);
            const Eigen::MatrixXd scores = model.transform(raw);
            for (std::size_t r = 0; r < valid.size(); ++r)
                if (!valid[r]) table.valid[r] = 0;
            const std::string prefix = t == "accum_pca" ? "accum" + std::to_string(step.horizon) + "_pc" : "guidance_pc";
            for (Eigen::Index k = 0; k < scores.cols(); ++k) add(prefix + std::to_string(k + 1), scores.col(k));
        } else if (t == "dummies") {
            const std::vector<std::uint8_t> in_term(times.size(), 1);
            for (const auto& col : seasonal_dummies(times, in_term))
                add(col.name, Eigen::Map<const Eigen::VectorXd>(col.values.data(), n), true);
        }
    }

    table.X.resize(n, static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) table.X.col(static_cast<Eigen::Index>(c)) = columns[c];
    return table;
}

}  // namespace hydroens
