#include "hydroens/learners/tune.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Cholesky>
#include <nlohmann/json.hpp>

#include "hydroens/errors.hpp"
#include "hydroens/util.hpp"

namespace hydroens {

SearchSpace default_search_space(ModelKind kind, const Eigen::Ref<const Eigen::VectorXd>& y) {
    const double sd = y.size() > 1 ? std::sqrt((y.array() - y.mean()).square().mean()) : 1.0;
    const double spread = sd > 0.0 ? sd : 1.0;
    switch (kind) {
        case ModelKind::kernel:
            return {{"kernel_scale", 0.1, 10.0, true, false},
                    {"lambda", 1e-6, 1e-1, true, false},
                    {"expansion_dims", 32, 256, true, true}};
        case ModelKind::forest: return {{"min_leaf_size", 1, 50, true, true}};
        case ModelKind::svr:
            return {{"box_constraint", 0.01, 100.0, true, false},
                    {"epsilon", 1e-3 * spread, 0.5 * spread, true, false},
                    {"poly_order", 2.0, 2.97, false, false}};
    }
    return {};
}

LearnerSpec apply_params(LearnerSpec spec, const ParamSet& params) {
    for (const auto& [name, value] : params) {
        bool used = false;
        if (auto* k = std::get_if<KernelRegSpec>(&spec)) {
            if (name == "kernel_scale") { k->kernel_scale = value; used = true; }
            else if (name == "lambda") { k->lambda = value; used = true; }
            else if (name == "expansion_dims") { k->expansion_dims = static_cast<int>(std::lround(value)); used = true; }
            else if (name == "epsilon") { k->epsilon = value; used = true; }
        } else if (auto* f = std::get_if<ForestSpec>(&spec)) {
            if (name == "min_leaf_size") { f->min_leaf_size = static_cast<int>(std::lround(value)); used = true; }
            else if (name == "n_trees") { f->n_trees = static_cast<int>(std::lround(value)); used = true; }
        } else if (auto* s = std::get_if<SvrSpec>(&spec)) {
            if (name == "box_constraint") { s->box_constraint = value; used = true; }
            else if (name == "epsilon") { s->epsilon = value; used = true; }
            else if (name == "poly_order") { s->poly_order = value; used = true; }
        }
        if (!used) throw ConfigError("parameter '" + name + "' is not tunable for " + model_tag(kind_of(spec)));
    }
    return spec;
}

ParamSet read_params(const LearnerSpec& spec, const SearchSpace& space) {
    ParamSet out;
    for (const auto& r : space) {
        double v = std::numeric_limits<double>::quiet_NaN();
        if (const auto* k = std::get_if<KernelRegSpec>(&spec)) {
            if (r.name == "kernel_scale") v = k->kernel_scale;
            else if (r.name == "lambda") v = k->lambda;
            else if (r.name == "expansion_dims") v = k->expansion_dims;
            else if (r.name == "epsilon") v = k->epsilon;
        } else if (const auto* f = std::get_if<ForestSpec>(&spec)) {
            if (r.name == "min_leaf_size") v = f->min_leaf_size;
            else if (r.name == "n_trees") v = f->n_trees;
        } else if (const auto* s = std::get_if<SvrSpec>(&spec)) {
            if (r.name == "box_constraint") v = s->box_constraint;
            else if (r.name == "epsilon") v = s->epsilon;
            else if (r.name == "poly_order") v = s->poly_order;
        }
        if (std::isnan(v)) throw ConfigError("parameter '" + r.name + "' is not tunable for " + model_tag(kind_of(spec)));
        out[r.name] = v;
    }
    return out;
}

std::vector<int> term_folds(const std::vector<int>& term_of_row, int folds) {
    if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
    std::vector<int> order;
    std::vector<int> fold(term_of_row.size());
    for (std::size_t i = 0; i < term_of_row.size(); ++i) {
        auto it = std::find(order.begin(), order.end(), term_of_row[i]);
        const int rank = static_cast<int>(it - order.begin());
        if (it == order.end()) order.push_back(term_of_row[i]);
        fold[i] = rank % folds;
    }
    if (static_cast<int>(order.size()) < folds)
        throw ConfigError("blocked cross-validation needs at least " + std::to_string(folds) + " flood terms, got " +
                          std::to_string(order.size()));
    return fold;
}

Eigen::VectorXd out_of_fold_predictions(const LearnerSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                                        const Eigen::Ref<const Eigen::VectorXd>& y,
                                        const Eigen::Ref<const Eigen::VectorXd>& w,
                                        const std::vector<int>& term_of_row, int folds, std::uint64_t seed) {
    if (static_cast<Eigen::Index>(term_of_row.size()) != X.rows()) throw ShapeError("term ids do not match rows");
    if (kind_of(spec) == ModelKind::forest) {
        ForestSpec fs = std::get<ForestSpec>(spec);
        fs.seed = seed;
        return fit_forest(X, y, w, fs).oob_prediction;
    }
    const std::vector<int> fold = term_folds(term_of_row, folds);
    std::vector<std::string> names(static_cast<std::size_t>(X.cols()));
    for (std::size_t c = 0; c < names.size(); ++c) names[c] = "x" + std::to_string(c);
    Eigen::VectorXd out = Eigen::VectorXd::Constant(X.rows(), std::numeric_limits<double>::quiet_NaN());
    for (int k = 0; k < folds; ++k) {
        std::vector<Eigen::Index> train, hold;
        for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == k ? hold : train).push_back(static_cast<Eigen::Index>(i));
        const Eigen::VectorXd wt = select_values(w, train);
        if (!(wt.sum() > 0.0)) continue;
        const FittedModel m = fit_model(spec, names, select_rows(X, train), select_values(y, train), wt, seed);
        const Eigen::VectorXd pred = predict(m, names, select_rows(X, hold));
        for (std::size_t i = 0; i < hold.size(); ++i) out(hold[i]) = pred(static_cast<Eigen::Index>(i));
    }
    return out;
}

double tuning_objective(const LearnerSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                        const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& w,
                        const std::vector<int>& term_of_row, int folds, std::uint64_t seed) {
    if (kind_of(spec) == ModelKind::forest) {
        ForestSpec fs = std::get<ForestSpec>(spec);
        fs.seed = seed;
        return fit_forest(X, y, w, fs).oob_mse;
    }
    const Eigen::VectorXd pred = out_of_fold_predictions(spec, X, y, w, term_of_row, folds, seed);
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
        if (std::isnan(pred(i))) continue;
        num += w(i) * (pred(i) - y(i)) * (pred(i) - y(i));
        den += w(i);
    }
    if (!(den > 0.0)) throw DegenerateInput("no held-out row carries positive weight");
    return num / den;
}

namespace {

double from_unit(const ParamRange& r, double u) {
    double v = r.log_scale ? std::exp(std::log(r.low) + u * (std::log(r.high) - std::log(r.low)))
                           : r.low + u * (r.high - r.low);
    if (r.integer) v = std::round(v);
    return std::clamp(v, r.low, r.high);
}

double to_unit(const ParamRange& r, double v) {
    if (r.high == r.low) return 0.0;
    const double u = r.log_scale ? (std::log(v) - std::log(r.low)) / (std::log(r.high) - std::log(r.low))
                                 : (v - r.low) / (r.high - r.low);
    return std::clamp(u, 0.0, 1.0);
}

ParamSet params_at(const SearchSpace& space, const Eigen::VectorXd& u) {
    ParamSet p;
    for (std::size_t k = 0; k < space.size(); ++k) p[space[k].name] = from_unit(space[k], u(static_cast<Eigen::Index>(k)));
    return p;
}

Eigen::VectorXd unit_of(const SearchSpace& space, const ParamSet& p) {
    Eigen::VectorXd u(static_cast<Eigen::Index>(space.size()));
    for (std::size_t k = 0; k < space.size(); ++k) u(static_cast<Eigen::Index>(k)) = to_unit(space[k], p.at(space[k].name));
    return u;
}

// Gaussian-process surrogate on log objective with a squared-exponential kernel.
class Surrogate {
public:
    Surrogate(const std::vector<Eigen::VectorXd>& points, const std::vector<double>& values) : points_(points) {
        const Eigen::Index n = static_cast<Eigen::Index>(points.size());
        Eigen::VectorXd z(n);
        for (Eigen::Index i = 0; i < n; ++i) z(i) = std::log(std::max(values[static_cast<std::size_t>(i)], 1e-300));
        mean_ = z.mean();
        sd_ = n > 1 ? std::sqrt((z.array() - mean_).square().sum() / (n - 1)) : 1.0;
        if (!(sd_ > 0.0)) sd_ = 1.0;
        z = (z.array() - mean_) / sd_;
        Eigen::MatrixXd K(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) K(i, j) = kernel(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]);
        K.diagonal().array() += 1e-6;
        chol_.compute(K);
        alpha_ = chol_.solve(z);
        best_ = z.minCoeff();
    }

    double expected_improvement(const Eigen::VectorXd& u) const {
        const Eigen::Index n = static_cast<Eigen::Index>(points_.size());
        Eigen::VectorXd k(n);
        for (Eigen::Index i = 0; i < n; ++i) k(i) = kernel(u, points_[static_cast<std::size_t>(i)]);
        const double mu = k.dot(alpha_);
        const double var = std::max(1.0 - k.dot(chol_.solve(k)), 1e-12);
        const double s = std::sqrt(var);
        const double gain = best_ - mu - 0.01;
        const double z = gain / s;
        const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
        const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
        return gain * cdf + s * pdf;
    }

private:
    static double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        constexpr double length = 0.3;
        return std::exp(-0.5 * (a - b).squaredNorm() / (length * length));
    }

    std::vector<Eigen::VectorXd> points_;
    Eigen::LLT<Eigen::MatrixXd> chol_;
    Eigen::VectorXd alpha_;
    double mean_ = 0.0, sd_ = 1.0, best_ = 0.0;
};

}  // namespace

TuneResult tune(const LearnerSpec& base, const SearchSpace& space, const Eigen::Ref<const Eigen::MatrixXd>& X,
                const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& w,
                const std::vector<int>& term_of_row, const TuneOptions& options) {
    if (options.budget < 1) throw ConfigError("tuning budget must be >= 1");
    for (const auto& r : space)
        if (!(r.high >= r.low) || (r.log_scale && !(r.low > 0.0)))
            throw ConfigError("invalid search range for '" + r.name + "'");

    TuneResult result;
    result.objective_name = kind_of(base) == ModelKind::forest ? "oob_weighted_mse" : "blocked_cv_weighted_mse";
    std::mt19937_64 rng(derive_seed(options.seed, "tune"));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::uint64_t fit_seed = derive_seed(options.seed, "fit");
    const Eigen::Index dims = static_cast<Eigen::Index>(space.size());
    auto random_unit = [&] {
        Eigen::VectorXd u(dims);
        for (Eigen::Index k = 0; k < dims; ++k) u(k) = unif(rng);
        return u;
    };

    std::vector<Eigen::VectorXd> seen;
    std::vector<double> values;
    double best = std::numeric_limits<double>::infinity();
    for (int it = 0; it < options.budget; ++it) {
        ParamSet params;
        if (it == 0) {
            params = read_params(base, space);
        } else if (options.method == TuneMethod::gp_ei && static_cast<int>(values.size()) >= options.initial_points &&
                   dims > 0) {
            const Surrogate gp(seen, values);
            Eigen::VectorXd pick = random_unit();
            double best_ei = -1.0;
            for (int c = 0; c < 256; ++c) {
                const Eigen::VectorXd u = random_unit();
                const double ei = gp.expected_improvement(u);
                if (ei > best_ei) { best_ei = ei; pick = u; }
            }
            params = params_at(space, pick);
        } else {
            params = params_at(space, random_unit());
        }

        TuneEntry entry;
        entry.params = params;
        try {
            const LearnerSpec spec = apply_params(base, params);
            validate(spec);
            entry.objective = tuning_objective(spec, X, y, w, term_of_row, options.folds, fit_seed);
            if (!std::isfinite(entry.objective)) throw DegenerateInput("objective is not finite");
            seen.push_back(unit_of(space, params));
            values.push_back(entry.objective);
            if (entry.objective < best) {
                best = entry.objective;
                result.best = spec;
                result.best_params = params;
                result.best_objective = entry.objective;
            }
        } catch (const Error& e) {
            entry.objective = std::numeric_limits<double>::quiet_NaN();
            entry.error = e.what();
        }
        result.log.push_back(std::move(entry));
    }
    if (values.empty()) {
        std::string detail;
        for (std::size_t i = 0; i < result.log.size(); ++i)
            detail += "\n  candidate " + std::to_string(i) + ": " + result.log[i].error;
        throw TuneError("every tuning candidate failed for " + model_tag(kind_of(base)) + ":" + detail);
    }
    return result;
}

nlohmann::json tune_log_json(const TuneResult& result) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : result.log) {
        nlohmann::json j;
        j["params"] = e.params;
        if (std::isnan(e.objective))
            j["objective"] = nullptr;
        else
            j["objective"] = e.objective;
        if (!e.error.empty()) j["error"] = e.error;
        entries.push_back(j);
    }
    nlohmann::json best;
    to_json(best, result.best);
    return {{"objective", result.objective_name},
            {"best_objective", result.best_objective},
            {"best_params", result.best_params},
            {"best_spec", best},
            {"candidates", entries}};
}

}  // namespace hydroens
