#include "hydroens/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <vector>

#include "hydroens/errors.hpp"
#include "hydroens/pca.hpp"

namespace hydroens {
namespace {

Eigen::MatrixXd squared_distances(const Eigen::Ref<const Eigen::MatrixXd>& X) {
    const Eigen::Index m = X.rows();
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const double d = (X.row(i) - X.row(j)).squaredNorm();
            D(i, j) = d;
            D(j, i) = d;
        }
    return D;
}

// Conditional distribution p_{j|i} over `dist` (squared distances to the
// candidate neighbours) whose entropy matches log(perplexity).
std::vector<double> conditional_row(const std::vector<double>& dist, double perplexity) {
    const double target = std::log(perplexity);
    const double dmin = *std::min_element(dist.begin(), dist.end());
    std::vector<double> p(dist.size());
    double beta = 1.0;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 200; ++iter) {
        double sum = 0.0, weighted = 0.0;
        for (std::size_t j = 0; j < dist.size(); ++j) {
            p[j] = std::exp(-(dist[j] - dmin) * beta);
            sum += p[j];
            weighted += (dist[j] - dmin) * p[j];
        }
        const double entropy = std::log(sum) + beta * weighted / sum;
        const double diff = entropy - target;
        if (std::abs(diff) < 1e-5) break;
        if (diff > 0) {
            lo = beta;
            beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
        } else {
            hi = beta;
            beta = std::isinf(lo) ? beta * 0.5 : 0.5 * (beta + lo);
        }
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < dist.size(); ++j) {
        p[j] = std::exp(-(dist[j] - dmin) * beta);
        sum += p[j];
    }
    for (double& v : p) v /= sum;
    return p;
}

struct SparseP {
    std::vector<int> row_ptr;
    std::vector<int> col;
    std::vector<double> val;
};

SparseP sparse_joint_probabilities(const Eigen::Ref<const Eigen::MatrixXd>& X, double perplexity) {
    const auto m = static_cast<int>(X.rows());
    const int k = std::min(m - 1, static_cast<int>(3.0 * perplexity) + 1);
    std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(m));
    std::vector<int> order(static_cast<std::size_t>(m));
    std::vector<double> d(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) d[static_cast<std::size_t>(j)] = (X.row(i) - X.row(j)).squaredNorm();
        d[static_cast<std::size_t>(i)] = std::numeric_limits<double>::infinity();
        std::iota(order.begin(), order.end(), 0);
        std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
            return d[static_cast<std::size_t>(a)] < d[static_cast<std::size_t>(b)] ||
                   (d[static_cast<std::size_t>(a)] == d[static_cast<std::size_t>(b)] && a < b);
        });
        std::vector<double> nd(static_cast<std::size_t>(k));
        for (int t = 0; t < k; ++t) nd[static_cast<std::size_t>(t)] = d[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])];
        const auto p = conditional_row(nd, perplexity);
        for (int t = 0; t < k; ++t) rows[static_cast<std::size_t>(i)].emplace_back(order[static_cast<std::size_t>(t)], p[static_cast<std::size_t>(t)]);
    }
    // Symmetrize: P_ij = (p_j|i + p_i|j) / 2M.
    std::vector<std::vector<std::pair<int, double>>> sym(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
        for (auto [j, v] : rows[static_cast<std::size_t>(i)]) {
            sym[static_cast<std::size_t>(i)].emplace_back(j, v);
            sym[static_cast<std::size_t>(j)].emplace_back(i, v);
        }
    SparseP P;
    P.row_ptr.push_back(0);
    for (int i = 0; i < m; ++i) {
        auto& r = sym[static_cast<std::size_t>(i)];
        std::sort(r.begin(), r.end());
        for (std::size_t t = 0; t < r.size();) {
            const int j = r[t].first;
            double v = 0.0;
            while (t < r.size() && r[t].first == j) v += r[t++].second;
            P.col.push_back(j);
            P.val.push_back(std::max(v / (2.0 * m), 1e-12));
        }
        P.row_ptr.push_back(static_cast<int>(P.col.size()));
    }
    return P;
}

// Space-partitioning tree (quadtree/octree generalized to `dims`) for the
// Barnes-Hut approximation of the repulsive forces.
class SpaceTree {
public:
    SpaceTree(const Eigen::MatrixXd& Y) : Y_(Y), dims_(static_cast<int>(Y.cols())) {
        const Eigen::VectorXd lo = Y.colwise().minCoeff().transpose();
        const Eigen::VectorXd hi = Y.colwise().maxCoeff().transpose();
        root_ = std::make_unique<Node>();
        root_->center = 0.5 * (lo + hi);
        root_->half = (0.5 * (hi - lo)).array() + 1e-5;
        root_->com = Eigen::VectorXd::Zero(dims_);
        for (Eigen::Index i = 0; i < Y.rows(); ++i) insert(*root_, static_cast<int>(i), 0);
    }

    void repulsion(int i, double theta, Eigen::Ref<Eigen::VectorXd> force, double& sum_q) const {
        visit(*root_, i, theta, force, sum_q);
    }

private:
    struct Node {
        Eigen::VectorXd center, half, com;
        int count = 0;
        std::vector<int> points;
        std::vector<std::unique_ptr<Node>> children;
    };

    bool same_point(int a, int b) const { return (Y_.row(a).array() == Y_.row(b).array()).all(); }

    std::size_t child_index(const Node& node, int i) const {
        std::size_t idx = 0;
        for (int d = 0; d < dims_; ++d)
            if (Y_(i, d) > node.center(d)) idx |= (std::size_t{1} << d);
        return idx;
    }

    void insert(Node& node, int i, int depth) {
        node.com = (node.com * node.count + Y_.row(i).transpose()) / (node.count + 1);
        ++node.count;
        if (node.children.empty()) {
            if (node.points.empty() || same_point(node.points.front(), i) || depth > 48) {
                node.points.push_back(i);
                return;
            }
            node.children.resize(std::size_t{1} << dims_);
            for (std::size_t c = 0; c < node.children.size(); ++c) {
                auto child = std::make_unique<Node>();
                child->half = node.half / 2.0;
                child->center = node.center;
                for (int d = 0; d < dims_; ++d)
                    child->center(d) += ((c >> d) & 1U) ? child->half(d) : -child->half(d);
                child->com = Eigen::VectorXd::Zero(dims_);
                node.children[c] = std::move(child);
            }
            for (int p : node.points) insert(*node.children[child_index(node, p)], p, depth + 1);
            node.points.clear();
        }
        insert(*node.children[child_index(node, i)], i, depth + 1);
    }

    void visit(const Node& node, int i, double theta, Eigen::Ref<Eigen::VectorXd> force, double& sum_q) const {
        if (node.count == 0) return;
        if (node.children.empty()) {
            for (int p : node.points) {
                if (p == i) continue;
                const Eigen::VectorXd diff = Y_.row(i).transpose() - Y_.row(p).transpose();
                const double q = 1.0 / (1.0 + diff.squaredNorm());
                sum_q += q;
                force += q * q * diff;
            }
            return;
        }
        const Eigen::VectorXd diff = Y_.row(i).transpose() - node.com;
        const double dist2 = diff.squaredNorm();
        const double width = 2.0 * node.half.maxCoeff();
        if (dist2 > 0.0 && width * width < theta * theta * dist2) {
            const double q = 1.0 / (1.0 + dist2);
            const double mass = node.count * q;
            sum_q += mass;
            force += mass * q * diff;
            return;
        }
        for (const auto& child : node.children) visit(*child, i, theta, force, sum_q);
    }

    const Eigen::MatrixXd& Y_;
    int dims_;
    std::unique_ptr<Node> root_;
};

double kl_sparse(const SparseP& P, const Eigen::MatrixXd& Y) {
    const Eigen::Index m = Y.rows();
    double z = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i + 1; j < m; ++j) z += 2.0 / (1.0 + (Y.row(i) - Y.row(j)).squaredNorm());
    double kl = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (int t = P.row_ptr[static_cast<std::size_t>(i)]; t < P.row_ptr[static_cast<std::size_t>(i) + 1]; ++t) {
            const int j = P.col[static_cast<std::size_t>(t)];
            const double p = P.val[static_cast<std::size_t>(t)];
            const double q = std::max(1.0 / (1.0 + (Y.row(i) - Y.row(j)).squaredNorm()) / z, 1e-300);
            kl += p * std::log(p / q);
        }
    return kl;
}

Eigen::MatrixXd initial_layout(const Eigen::Ref<const Eigen::MatrixXd>& X, const TsneOptions& options) {
    const Eigen::Index m = X.rows();
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(m, options.dims);
    if (options.init == TsneOptions::Init::pca) {
        try {
            const PcaModel pca = fit_pca(X, 1.0);
            const Eigen::MatrixXd scores = pca.transform(X);
            const Eigen::Index k = std::min<Eigen::Index>(scores.cols(), options.dims);
            Y.leftCols(k) = scores.leftCols(k);
            const Eigen::VectorXd c0 = Y.col(0);
            const double sd = std::sqrt((c0.array() - c0.mean()).square().sum() / static_cast<double>(m));
            if (sd > 0.0) return Y / sd * 1e-4;
        } catch (const DegenerateInput&) {
            // identical rows: fall through to the seeded random layout
        }
    }
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1e-4);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index d = 0; d < options.dims; ++d) Y(i, d) = normal(rng);
    return Y;
}

}  // namespace

Eigen::MatrixXd tsne_joint_probabilities(const Eigen::Ref<const Eigen::MatrixXd>& features, double perplexity) {
    const Eigen::Index m = features.rows();
    const Eigen::MatrixXd D = squared_distances(features);
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(m, m);
    std::vector<double> row(static_cast<std::size_t>(m - 1));
    for (Eigen::Index i = 0; i < m; ++i) {
        std::size_t t = 0;
        for (Eigen::Index j = 0; j < m; ++j)
            if (j != i) row[t++] = D(i, j);
        const auto p = conditional_row(row, perplexity);
        t = 0;
        for (Eigen::Index j = 0; j < m; ++j)
            if (j != i) P(i, j) = p[t++];
    }
    P = (P + P.transpose()).eval() / (2.0 * static_cast<double>(m));
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            if (i != j) P(i, j) = std::max(P(i, j), 1e-12);
    return P;
}

double tsne_kl_divergence(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Y) {
    const Eigen::Index m = Y.rows();
    Eigen::MatrixXd num = Eigen::MatrixXd::Zero(m, m);
    double z = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const double q = 1.0 / (1.0 + (Y.row(i) - Y.row(j)).squaredNorm());
            num(i, j) = num(j, i) = q;
            z += 2.0 * q;
        }
    double kl = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
            if (i == j || P(i, j) <= 0.0) continue;
            const double q = std::max(num(i, j) / z, 1e-300);
            kl += P(i, j) * std::log(P(i, j) / q);
        }
    return kl;
}

TsneResult tsne_embed(const Eigen::Ref<const Eigen::MatrixXd>& features, const TsneOptions& options) {
    const Eigen::Index m = features.rows();
    if (m < 4) throw ConfigError("t-SNE needs at least 4 points");
    if (options.dims < 1) throw ConfigError("t-SNE output dimension must be positive");
    if (!features.allFinite()) throw ConfigError("t-SNE input contains non-finite values");
    const double max_perplexity = static_cast<double>(m - 1) / 3.0;
    const double perplexity = options.perplexity > 0.0 ? options.perplexity : std::min(30.0, max_perplexity);
    if (perplexity > max_perplexity + 1e-12)
        throw ConfigError("t-SNE perplexity " + std::to_string(perplexity) + " infeasible for " + std::to_string(m) +
                          " points (must be <= (M - 1) / 3)");

    TsneResult result;
    result.perplexity = perplexity;
    result.barnes_hut = options.method == TsneOptions::Method::barnes_hut ||
                        (options.method == TsneOptions::Method::automatic && m > options.barnes_hut_threshold);

    Eigen::MatrixXd Y = initial_layout(features, options);
    Eigen::MatrixXd update = Eigen::MatrixXd::Zero(m, options.dims);
    Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(m, options.dims);
    Eigen::MatrixXd grad(m, options.dims);

    Eigen::MatrixXd P;
    SparseP sparse;
    if (result.barnes_hut) {
        sparse = sparse_joint_probabilities(features, perplexity);
        result.kl_initial = kl_sparse(sparse, Y);
    } else {
        P = tsne_joint_probabilities(features, perplexity);
        result.kl_initial = tsne_kl_divergence(P, Y);
    }

    Eigen::MatrixXd num(m, m);
    for (int iter = 0; iter < options.iterations; ++iter) {
        const double exaggeration = iter < options.exaggeration_iterations ? options.early_exaggeration : 1.0;
        const double momentum = iter < options.exaggeration_iterations ? 0.5 : 0.8;
        grad.setZero();
        if (!result.barnes_hut) {
            double z = 0.0;
            for (Eigen::Index i = 0; i < m; ++i) {
                num(i, i) = 0.0;
                for (Eigen::Index j = i + 1; j < m; ++j) {
                    const double q = 1.0 / (1.0 + (Y.row(i) - Y.row(j)).squaredNorm());
                    num(i, j) = num(j, i) = q;
                    z += 2.0 * q;
                }
            }
            for (Eigen::Index i = 0; i < m; ++i)
                for (Eigen::Index j = 0; j < m; ++j) {
                    if (i == j) continue;
                    const double coef = (exaggeration * P(i, j) - num(i, j) / z) * num(i, j);
                    grad.row(i) += 4.0 * coef * (Y.row(i) - Y.row(j));
                }
        } else {
            const SpaceTree tree(Y);
            Eigen::MatrixXd repulsive = Eigen::MatrixXd::Zero(m, options.dims);
            double sum_q = 0.0;
            Eigen::VectorXd f(options.dims);
            for (Eigen::Index i = 0; i < m; ++i) {
                f.setZero();
                tree.repulsion(static_cast<int>(i), options.theta, f, sum_q);
                repulsive.row(i) = f.transpose();
            }
            for (Eigen::Index i = 0; i < m; ++i) {
                for (int t = sparse.row_ptr[static_cast<std::size_t>(i)]; t < sparse.row_ptr[static_cast<std::size_t>(i) + 1]; ++t) {
                    const int j = sparse.col[static_cast<std::size_t>(t)];
                    const Eigen::RowVectorXd diff = Y.row(i) - Y.row(j);
                    const double q = 1.0 / (1.0 + diff.squaredNorm());
                    grad.row(i) += 4.0 * exaggeration * sparse.val[static_cast<std::size_t>(t)] * q * diff;
                }
                grad.row(i) -= 4.0 * repulsive.row(i) / sum_q;
            }
        }

        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index d = 0; d < options.dims; ++d) {
                const bool same_sign = (grad(i, d) > 0.0) == (update(i, d) > 0.0);
                gains(i, d) = same_sign ? std::max(gains(i, d) * 0.8, 0.01) : gains(i, d) + 0.2;
                update(i, d) = momentum * update(i, d) - options.learning_rate * gains(i, d) * grad(i, d);
                Y(i, d) += update(i, d);
            }
        Y.rowwise() -= Y.colwise().mean();
    }

    result.kl_final = result.barnes_hut ? kl_sparse(sparse, Y) : tsne_kl_divergence(P, Y);
    result.embedding = std::move(Y);
    return result;
}

}  // namespace hydroens
