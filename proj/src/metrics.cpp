#include "hydroens/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <cmath>
#include <limits>

#include "hydroens/ensemble.hpp"
#include "hydroens/errors.hpp"
#include "hydroens/log.hpp"

namespace hydroens {

namespace {

void check_pair(const Eigen::Ref<const Eigen::VectorXd>& yhat, const Eigen::Ref<const Eigen::VectorXd>& y) {
    if (yhat.size() != y.size()) throw ShapeError("forecast and target lengths differ");
    if (y.size() == 0) throw ShapeError("metrics need at least one sample");
}

Eigen::VectorXd concat(const std::vector<Eigen::VectorXd>& parts) {
    Eigen::Index n = 0;
    for (const auto& p : parts) n += p.size();
    Eigen::VectorXd out(n);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        out.segment(at, p.size()) = p;
        at += p.size();
    }
    return out;
}

}  // namespace

double mse(const Eigen::Ref<const Eigen::VectorXd>& yhat, const Eigen::Ref<const Eigen::VectorXd>& y) {
    check_pair(yhat, y);
    return (yhat - y).squaredNorm() / static_cast<double>(y.size());
}

double rmse(const Eigen::Ref<const Eigen::VectorXd>& yhat, const Eigen::Ref<const Eigen::VectorXd>& y) {
    return std::sqrt(mse(yhat, y));
}

double mae(const Eigen::Ref<const Eigen::VectorXd>& yhat, const Eigen::Ref<const Eigen::VectorXd>& y) {
    check_pair(yhat, y);
    return (yhat - y).cwiseAbs().sum() / static_cast<double>(y.size());
}

double sim(const Eigen::Ref<const Eigen::VectorXd>& yhat, const Eigen::Ref<const Eigen::VectorXd>& y) {
    check_pair(yhat, y);
    const double a = l2_norm(yhat), b = l2_norm(y);
    if (!(a > 0.0)) throw ZeroNormError("forecast");
    if (!(b > 0.0)) throw ZeroNormError("target");
    return std::clamp(yhat.dot(y) / (a * b), -1.0, 1.0);
}

IdentityCheck mse_skill_identity(const Eigen::Ref<const Eigen::VectorXd>& yhat, const Eigen::Ref<const Eigen::VectorXd>& y) {
    check_pair(yhat, y);
    const double a = l2_norm(yhat), b = l2_norm(y);
    if (!(a > 0.0)) throw ZeroNormError("forecast");
    if (!(b > 0.0)) throw ZeroNormError("target");
    const double n = static_cast<double>(y.size());
    const double s = yhat.dot(y) / (a * b);
    IdentityCheck c;
    c.lhs = mse(yhat, y) / (a * b);
    c.rhs = a / (n * b) - 2.0 / n * s + b / (n * a);
    c.absolute = std::abs(c.lhs - c.rhs);
    // Both sides are sums of O(1/N) terms; cancellation is bounded by their size.
    const double scale = std::max({std::abs(c.lhs), a / (n * b) + b / (n * a), std::numeric_limits<double>::min()});
    c.relative = c.absolute / scale;
    return c;
}

double mse_skill_identity_residual(const Eigen::Ref<const Eigen::VectorXd>& yhat, const Eigen::Ref<const Eigen::VectorXd>& y) {
    return mse_skill_identity(yhat, y).absolute;
}

double determination(const Eigen::Ref<const Eigen::VectorXd>& yhat, const Eigen::Ref<const Eigen::VectorXd>& y,
                     double reference) {
    check_pair(yhat, y);
    const double ss = (y.array() - reference).square().sum();
    if (!(ss > 0.0)) throw DegenerateInput("FCD undefined: target has zero variance about the reference");
    const double r = 1.0 - (yhat - y).squaredNorm() / ss;
    if (r < 0.0) log::warn("FCD is negative (" + std::to_string(r) + "): forecast worse than the reference mean");
    return r;
}

FcdReport fcd(const std::vector<Eigen::VectorXd>& yhat, const std::vector<Eigen::VectorXd>& y) {
    if (yhat.size() != y.size() || y.empty()) throw ShapeError("FCD needs matching, nonempty term lists");
    const Eigen::VectorXd all_y = concat(y);
    const Eigen::VectorXd all_hat = concat(yhat);
    const double pooled_mean = all_y.mean();
    FcdReport r;
    for (std::size_t b = 0; b < y.size(); ++b) {
        if (y[b].size() == 0) throw ShapeError("FCD term " + std::to_string(b) + " is empty");
        r.per_term.push_back(determination(yhat[b], y[b], y[b].mean()));
        r.per_term_global.push_back(determination(yhat[b], y[b], pooled_mean));
    }
    r.pooled = determination(all_hat, all_y, pooled_mean);
    return r;
}

Proposition1Report check_proposition1(const std::vector<Eigen::VectorXd>& outputs, const Eigen::Ref<const Eigen::VectorXd>& y,
                                      const Eigen::Ref<const Eigen::VectorXd>& a) {
    if (outputs.empty() || a.size() != static_cast<Eigen::Index>(outputs.size()))
        throw ShapeError("proposition check needs one coefficient per model");
    validate_simplex(a);
    Proposition1Report r;
    Eigen::VectorXd ybar = Eigen::VectorXd::Zero(y.size());
    for (std::size_t m = 0; m < outputs.size(); ++m) {
        const double am = a(static_cast<Eigen::Index>(m));
        r.lhs += am * sim(outputs[m], y);
        ybar += am * (outputs[m] / l2_norm(outputs[m]));
    }
    r.ybar_norm = l2_norm(ybar);
    r.in_domain = r.lhs >= 0.0;
    if (!(r.ybar_norm > 0.0)) {
        r.degenerate = true;
        return r;
    }
    r.rhs = sim(ybar, y);
    r.holds = r.lhs <= r.rhs + 1e-12;
    r.strict = r.lhs < r.rhs;
    return r;
}

PropositionSweep proposition1_sweep(long instances, std::uint64_t seed, int models, int n_min, int n_max) {
    if (instances < 1 || models < 1 || n_min < 1 || n_max < n_min) throw ConfigError("bad sweep parameters");
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick_n(n_min, n_max), pick_family(0, 2);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    PropositionSweep s;
    std::vector<Eigen::VectorXd> outputs(static_cast<std::size_t>(models));
    Eigen::VectorXd a(models);
    for (long k = 0; k < instances; ++k) {
        const int n = pick_n(rng);
        const int family = pick_family(rng);
        Eigen::VectorXd y(n);
        for (int t = 0; t < n; ++t) y(t) = family == 2 ? expo(rng) * expo(rng) : unif(rng);
        const double spread = std::pow(10.0, -3.0 * unif(rng));
        for (auto& o : outputs) {
            o.resize(n);
            for (int t = 0; t < n; ++t) {
                if (family == 1)
                    o(t) = y(t) * (1.0 + spread * (unif(rng) - 0.5)) + spread * unif(rng);
                else
                    o(t) = family == 2 ? expo(rng) * expo(rng) : unif(rng);
            }
        }
        for (int m = 0; m < models; ++m) a(m) = expo(rng);
        a /= a.sum();
        a(models - 1) = 1.0 - a.head(models - 1).sum();
        if (a(models - 1) < 0.0) a(models - 1) = 0.0;

        ++s.instances;
        Proposition1Report r;
        try {
            r = check_proposition1(outputs, y, a);
        } catch (const ZeroNormError&) {
            ++s.degenerate;
            continue;
        }
        if (r.degenerate) {
            ++s.degenerate;
            continue;
        }
        s.worst_excess = std::max(s.worst_excess, r.lhs - r.rhs);
        if (!r.holds) ++s.violations;
        if (r.lhs > 1e-6) {
            ++s.strict_candidates;
            if (!r.strict) ++s.strict_failures;
        }
    }
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return s;
}

std::vector<SkillRow> skill_rows(const std::string& method, const std::string& weighting,
                                 const std::vector<Eigen::VectorXd>& yhat, const std::vector<Eigen::VectorXd>& y,
                                 const std::vector<int>& term_ids) {
    if (yhat.size() != y.size() || term_ids.size() != y.size()) throw ShapeError("skill rows need matching term lists");
    const FcdReport f = fcd(yhat, y);
    std::vector<SkillRow> rows;
    auto make = [&](int term, const Eigen::VectorXd& h, const Eigen::VectorXd& t, double fcd_value) {
        SkillRow r;
        r.method = method;
        r.weighting = weighting;
        r.term = term;
        r.fcd = fcd_value;
        r.rmse = rmse(h, t);
        r.mae = mae(h, t);
        r.sim = sim(h, t);
        r.norm_yhat = l2_norm(h);
        r.norm_y = l2_norm(t);
        return r;
    };
    for (std::size_t b = 0; b < y.size(); ++b) rows.push_back(make(term_ids[b], yhat[b], y[b], f.per_term[b]));
    rows.push_back(make(-1, concat(yhat), concat(y), f.pooled));
    return rows;
}

}  // namespace hydroens
