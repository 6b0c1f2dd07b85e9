#include "hydroens/learners/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "hydroens/errors.hpp"
#include "hydroens/learners/common.hpp"
#include "hydroens/log.hpp"
#include "hydroens/util.hpp"

namespace hydroens {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void validate(const ForestSpec& spec) {
    if (spec.min_leaf_size < 1) throw ConfigError("forest min leaf size must be >= 1");
    if (spec.n_trees < 1) throw ConfigError("forest needs at least one tree");
    if (spec.mtry < 0) throw ConfigError("forest mtry must be >= 0");
}

int RegressionTree::leaf_of(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    int node = 0;
    while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const TreeNode& n = nodes[static_cast<std::size_t>(node)];
        node = x(n.feature) <= n.threshold ? n.left : n.right;
    }
    return node;
}

namespace {

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = -std::numeric_limits<double>::infinity();
};

class TreeBuilder {
public:
    TreeBuilder(const RowMatrix& X, const Eigen::VectorXd& y, int min_leaf, int mtry, std::mt19937_64& rng,
                RegressionTree& tree)
        : X_(X), y_(y), min_leaf_(min_leaf), mtry_(mtry), rng_(rng), tree_(tree),
          features_(static_cast<std::size_t>(X.cols())) {
        std::iota(features_.begin(), features_.end(), 0);
    }

    int build(std::vector<int>& rows, std::size_t begin, std::size_t end) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        const std::size_t n = end - begin;
        double sum = 0.0;
        for (std::size_t k = begin; k < end; ++k) sum += y_(rows[k]);
        const double mean = sum / static_cast<double>(n);

        Split split;
        if (n >= 2 * static_cast<std::size_t>(min_leaf_) && !constant_target(rows, begin, end))
            split = best_split(rows, begin, end, sum);
        if (split.feature < 0) {
            TreeNode& leaf = tree_.nodes[static_cast<std::size_t>(id)];
            leaf.value = mean;
            leaf.sample_begin = static_cast<int>(tree_.samples.size());
            tree_.samples.insert(tree_.samples.end(), rows.begin() + static_cast<long>(begin),
                                 rows.begin() + static_cast<long>(end));
            leaf.sample_end = static_cast<int>(tree_.samples.size());
            return id;
        }
        auto mid = std::stable_partition(rows.begin() + static_cast<long>(begin), rows.begin() + static_cast<long>(end),
                                         [&](int r) { return X_(r, split.feature) <= split.threshold; });
        const std::size_t cut = static_cast<std::size_t>(mid - rows.begin());
        const int left = build(rows, begin, cut);
        const int right = build(rows, cut, end);
        TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = left;
        node.right = right;
        node.value = mean;
        return id;
    }

private:
    bool constant_target(const std::vector<int>& rows, std::size_t begin, std::size_t end) const {
        const double first = y_(rows[begin]);
        for (std::size_t k = begin + 1; k < end; ++k)
            if (y_(rows[k]) != first) return false;
        return true;
    }

    Split best_split(const std::vector<int>& rows, std::size_t begin, std::size_t end, double sum) {
        const std::size_t n = end - begin;
        const double parent = sum * sum / static_cast<double>(n);
        std::shuffle(features_.begin(), features_.end(), rng_);
        Split best;
        int tried = 0;
        for (int f : features_) {
            if (tried >= mtry_ && best.feature >= 0) break;
            pairs_.clear();
            for (std::size_t k = begin; k < end; ++k) pairs_.emplace_back(X_(rows[k], f), y_(rows[k]));
            std::sort(pairs_.begin(), pairs_.end());
            if (pairs_.front().first == pairs_.back().first) continue;
            ++tried;
            double left_sum = 0.0;
            for (std::size_t k = 1; k < n; ++k) {
                left_sum += pairs_[k - 1].second;
                if (k < static_cast<std::size_t>(min_leaf_) || n - k < static_cast<std::size_t>(min_leaf_)) continue;
                if (pairs_[k - 1].first == pairs_[k].first) continue;
                const double right_sum = sum - left_sum;
                const double score = left_sum * left_sum / static_cast<double>(k) +
                                     right_sum * right_sum / static_cast<double>(n - k);
                if (score > best.score) {
                    best.score = score;
                    best.feature = f;
                    double thr = 0.5 * (pairs_[k - 1].first + pairs_[k].first);
                    if (!(thr < pairs_[k].first)) thr = pairs_[k - 1].first;
                    best.threshold = thr;
                }
            }
        }
        if (best.feature >= 0 && !(best.score > parent + 1e-12 * std::abs(parent))) best.feature = -1;
        return best;
    }

    const RowMatrix& X_;
    const Eigen::VectorXd& y_;
    int min_leaf_;
    int mtry_;
    std::mt19937_64& rng_;
    RegressionTree& tree_;
    std::vector<int> features_;
    std::vector<std::pair<double, double>> pairs_;
};

struct OobAccumulator {
    Eigen::VectorXd sum;
    Eigen::VectorXi count;
};

OobAccumulator accumulate_oob(const ForestModel& model, const RowMatrix& X) {
    OobAccumulator acc{Eigen::VectorXd::Zero(X.rows()), Eigen::VectorXi::Zero(X.rows())};
    for (const auto& tree : model.trees)
        for (int r : tree.oob_rows) {
            acc.sum(r) += tree.predict(X.row(r));
            ++acc.count(r);
        }
    return acc;
}

Eigen::VectorXd oob_from(const OobAccumulator& acc) {
    Eigen::VectorXd out(acc.sum.size());
    for (Eigen::Index r = 0; r < out.size(); ++r)
        out(r) = acc.count(r) > 0 ? acc.sum(r) / acc.count(r) : std::numeric_limits<double>::quiet_NaN();
    return out;
}

double oob_weighted_mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    double num = 0.0, den = 0.0;
    for (Eigen::Index r = 0; r < pred.size(); ++r) {
        if (std::isnan(pred(r))) continue;
        const double e = pred(r) - y(r);
        num += w(r) * e * e;
        den += w(r);
    }
    if (!(den > 0.0)) throw DegenerateInput("no positively weighted row is out-of-bag in any tree");
    return num / den;
}

void check_training_rows(const ForestModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X) {
    if (X.rows() != model.train_y.size() || X.cols() != model.n_features)
        throw ShapeError("OOB evaluation needs the training matrix");
}

}  // namespace

ForestModel fit_forest(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                       const Eigen::Ref<const Eigen::VectorXd>& w, const ForestSpec& spec) {
    validate(spec);
    validate_training_data(X, y, w);
    const RowMatrix Xr = X;
    const Eigen::VectorXd yv = y;
    const auto positive = positive_rows(w);
    std::vector<double> cumulative(positive.size());
    double total = 0.0;
    for (std::size_t k = 0; k < positive.size(); ++k) cumulative[k] = total += w(positive[k]);

    ForestModel model;
    model.spec = spec;
    model.n_features = X.cols();
    model.train_y = y;
    model.train_w = w;
    const int mtry = spec.mtry > 0 ? std::min<int>(spec.mtry, static_cast<int>(X.cols()))
                                   : std::max(1, static_cast<int>(X.cols()) / 3);
    model.trees.resize(static_cast<std::size_t>(spec.n_trees));
    std::vector<std::uint8_t> drawn(static_cast<std::size_t>(X.rows()));
    for (int t = 0; t < spec.n_trees; ++t) {
        std::mt19937_64 rng(spec.seed + static_cast<std::uint64_t>(t));
        std::uniform_real_distribution<double> unif(0.0, total);
        RegressionTree& tree = model.trees[static_cast<std::size_t>(t)];
        tree.in_bag.resize(positive.size());
        std::fill(drawn.begin(), drawn.end(), 0);
        for (auto& slot : tree.in_bag) {
            const double u = unif(rng);
            auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
            if (it == cumulative.end()) --it;
            slot = static_cast<int>(positive[static_cast<std::size_t>(it - cumulative.begin())]);
            drawn[static_cast<std::size_t>(slot)] = 1;
        }
        for (Eigen::Index r = 0; r < X.rows(); ++r)
            if (!drawn[static_cast<std::size_t>(r)]) tree.oob_rows.push_back(static_cast<int>(r));
        std::vector<int> rows = tree.in_bag;
        TreeBuilder builder(Xr, yv, spec.min_leaf_size, mtry, rng, tree);
        builder.build(rows, 0, rows.size());
    }

    const OobAccumulator acc = accumulate_oob(model, Xr);
    model.oob_prediction = oob_from(acc);
    model.oob_rows = (acc.count.array() > 0).count();
    const Eigen::Index never = X.rows() - model.oob_rows;
    if (never > 0)
        log::warn(std::to_string(never) + " training rows are in-bag for every tree; excluded from OOB error");
    model.oob_mse = oob_weighted_mse(model.oob_prediction, model.train_y, model.train_w);
    return model;
}

Eigen::VectorXd predict_forest(const ForestModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X) {
    if (X.cols() != model.n_features) throw SchemaError("forest expects " + std::to_string(model.n_features) + " columns");
    const RowMatrix Xr = X;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
    for (const auto& tree : model.trees)
        for (Eigen::Index r = 0; r < Xr.rows(); ++r) out(r) += tree.predict(Xr.row(r));
    return out / static_cast<double>(model.trees.size());
}

Eigen::VectorXd predict_forest_quantile(const ForestModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X,
                                        double q) {
    if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile level must lie in [0, 1]");
    if (X.cols() != model.n_features) throw SchemaError("forest expects " + std::to_string(model.n_features) + " columns");
    const RowMatrix Xr = X;
    const Eigen::Index n_train = model.train_y.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n_train));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return model.train_y(a) < model.train_y(b); });
    Eigen::VectorXd out(X.rows());
    Eigen::VectorXd weight(n_train);
    for (Eigen::Index r = 0; r < Xr.rows(); ++r) {
        weight.setZero();
        for (const auto& tree : model.trees) {
            const TreeNode& leaf = tree.nodes[static_cast<std::size_t>(tree.leaf_of(Xr.row(r)))];
            const double share = 1.0 / static_cast<double>(leaf.sample_end - leaf.sample_begin);
            for (int k = leaf.sample_begin; k < leaf.sample_end; ++k) weight(tree.samples[static_cast<std::size_t>(k)]) += share;
        }
        const double total = weight.sum();
        double acc = 0.0;
        out(r) = model.train_y(order.back());
        for (Eigen::Index idx : order) {
            acc += weight(idx);
            if (acc >= q * total && weight(idx) > 0.0) {
                out(r) = model.train_y(idx);
                break;
            }
        }
    }
    return out;
}

Eigen::VectorXd oob_predict(const ForestModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X) {
    check_training_rows(model, X);
    return oob_from(accumulate_oob(model, RowMatrix(X)));
}

ImportanceResult oob_importance(const ForestModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const ImportanceOptions& options) {
    check_training_rows(model, X);
    if (options.repeats < 1) throw ConfigError("importance needs at least one repeat");
    RowMatrix Xr = X;
    ImportanceResult result;
    result.baseline_mse = oob_weighted_mse(oob_from(accumulate_oob(model, Xr)), model.train_y, model.train_w);
    result.raw = Eigen::VectorXd::Zero(X.cols());
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const Eigen::VectorXd column = X.col(j);
        double total = 0.0;
        for (int rep = 0; rep < options.repeats; ++rep) {
            std::mt19937_64 rng(derive_seed(options.seed, "perm" + std::to_string(j) + ":" + std::to_string(rep)));
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), rng);
            for (Eigen::Index r = 0; r < X.rows(); ++r) Xr(r, j) = column(perm[static_cast<std::size_t>(r)]);
            const double mse = oob_weighted_mse(oob_from(accumulate_oob(model, Xr)), model.train_y, model.train_w);
            total += mse - result.baseline_mse;
        }
        Xr.col(j) = column;
        result.raw(j) = total / options.repeats;
    }
    result.reported = result.raw.cwiseMax(0.0);
    return result;
}

}  // namespace hydroens
