#include "hydroens/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hydroens/errors.hpp"
#include "hydroens/log.hpp"

namespace hydroens {

double l2_norm(const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (!v.allFinite()) throw ValidationError("l2_norm of a vector with non-finite entries");
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += v(i) * v(i);
    return std::sqrt(s);
}

namespace {

// a * v / (norm / N), shared by every variant so reductions agree bit-for-bit.
void accumulate(Eigen::VectorXd& out, const Eigen::Ref<const Eigen::VectorXd>& v, double norm, double a,
                const std::string& model, int term) {
    if (!(norm > 0.0)) throw ZeroNormError(model, term);
    const double denom = norm / static_cast<double>(v.size());
    for (Eigen::Index t = 0; t < v.size(); ++t) out(t) += a * (v(t) / denom);
}

}  // namespace

Eigen::VectorXd l2_normalized(const Eigen::Ref<const Eigen::VectorXd>& v, const std::string& model, int term) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
    accumulate(out, v, l2_norm(v), 1.0, model, term);
    return out;
}

ModelOutput::ModelOutput(std::string model, std::vector<Eigen::VectorXd> terms)
    : model_(std::move(model)), terms_(std::move(terms)) {
    norms_.reserve(terms_.size());
    for (const auto& t : terms_) {
        if (t.size() == 0) throw ShapeError("model " + model_ + " has an empty term");
        norms_.push_back(l2_norm(t));
    }
}

Eigen::VectorXd ModelOutput::concatenated() const {
    Eigen::Index n = 0;
    for (const auto& t : terms_) n += t.size();
    Eigen::VectorXd out(n);
    Eigen::Index at = 0;
    for (const auto& t : terms_) {
        out.segment(at, t.size()) = t;
        at += t.size();
    }
    return out;
}

ModelOutput ModelOutput::scaled(double c) const {
    std::vector<Eigen::VectorXd> terms = terms_;
    for (auto& t : terms) t *= c;
    return ModelOutput(model_, std::move(terms));
}

void validate_simplex(const Eigen::Ref<const Eigen::VectorXd>& a) {
    if (a.size() == 0) throw ConfigError("empty coefficient vector");
    if ((a.array() < 0.0).any() || !a.allFinite()) throw ConfigError("ensemble coefficients must be finite and >= 0");
    if (std::abs(a.sum() - 1.0) > 1e-12) throw ConfigError("ensemble coefficients must sum to 1");
}

CoefficientSet CoefficientSet::uniform(std::size_t terms, std::vector<std::string> models) {
    const Eigen::Index m = static_cast<Eigen::Index>(models.size());
    return {std::move(models), Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(terms), m, 1.0 / static_cast<double>(m))};
}

CoefficientSet CoefficientSet::repeated(std::size_t terms, std::vector<std::string> models,
                                        const Eigen::Ref<const Eigen::VectorXd>& a) {
    if (a.size() != static_cast<Eigen::Index>(models.size())) throw ShapeError("coefficient count differs from models");
    CoefficientSet c{std::move(models), Eigen::MatrixXd(static_cast<Eigen::Index>(terms), a.size())};
    c.alpha.rowwise() = a.transpose();
    return c;
}

void CoefficientSet::validate() const {
    if (alpha.cols() != static_cast<Eigen::Index>(models.size())) throw ShapeError("coefficient columns differ from models");
    for (Eigen::Index b = 0; b < alpha.rows(); ++b) {
        try {
            validate_simplex(alpha.row(b).transpose());
        } catch (const ConfigError& e) {
            throw ConfigError("term " + std::to_string(b) + ": " + e.what());
        }
    }
}

Eigen::VectorXd global_ensemble(const std::vector<Eigen::VectorXd>& outputs, const Eigen::Ref<const Eigen::VectorXd>& a,
                                const std::vector<std::string>& models) {
    if (outputs.empty()) throw ShapeError("global ensemble needs at least one model");
    if (a.size() != static_cast<Eigen::Index>(outputs.size())) throw ShapeError("coefficient count differs from models");
    validate_simplex(a);
    const Eigen::Index n = outputs.front().size();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (std::size_t m = 0; m < outputs.size(); ++m) {
        if (outputs[m].size() != n) throw ShapeError("model outputs differ in length");
        const std::string name = m < models.size() ? models[m] : "model " + std::to_string(m);
        accumulate(out, outputs[m], l2_norm(outputs[m]), a(static_cast<Eigen::Index>(m)), name, -1);
    }
    return out;
}

Eigen::VectorXd global_ensemble(const std::vector<ModelOutput>& outputs, const Eigen::Ref<const Eigen::VectorXd>& a) {
    std::vector<Eigen::VectorXd> whole;
    std::vector<std::string> names;
    for (const auto& o : outputs) {
        whole.push_back(o.concatenated());
        names.push_back(o.model());
    }
    return global_ensemble(whole, a, names);
}

Eigen::VectorXd ensemble_with_denominators(const std::vector<Eigen::VectorXd>& outputs,
                                           const Eigen::Ref<const Eigen::VectorXd>& denominators,
                                           const Eigen::Ref<const Eigen::VectorXd>& a) {
    if (outputs.empty() || denominators.size() != static_cast<Eigen::Index>(outputs.size()) || a.size() != denominators.size())
        throw ShapeError("ensemble inputs differ in model count");
    validate_simplex(a);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(outputs.front().size());
    for (std::size_t m = 0; m < outputs.size(); ++m) {
        const double d = denominators(static_cast<Eigen::Index>(m));
        if (!(d > 0.0)) throw ZeroNormError("model " + std::to_string(m));
        if (outputs[m].size() != out.size()) throw ShapeError("model outputs differ in length");
        for (Eigen::Index t = 0; t < out.size(); ++t) out(t) += a(static_cast<Eigen::Index>(m)) * (outputs[m](t) / d);
    }
    return out;
}

namespace {

void check_outputs(const std::vector<ModelOutput>& outputs, const CoefficientSet& coeffs) {
    if (outputs.empty()) throw ShapeError("batch ensemble needs at least one model");
    coeffs.validate();
    if (coeffs.models.size() != outputs.size()) throw ShapeError("coefficient models differ from outputs");
    for (std::size_t m = 0; m < outputs.size(); ++m)
        if (coeffs.models[m] != outputs[m].model())
            throw ConfigError("coefficient column " + coeffs.models[m] + " does not match model " + outputs[m].model());
    const std::size_t terms = outputs.front().term_count();
    if (static_cast<std::size_t>(coeffs.alpha.rows()) != terms) throw ShapeError("coefficient rows differ from term count");
    for (const auto& o : outputs) {
        if (o.term_count() != terms) throw ShapeError("models differ in term count");
        for (std::size_t b = 0; b < terms; ++b)
            if (o.term(b).size() != outputs.front().term(b).size())
                throw ShapeError("models differ in length for term " + std::to_string(b));
    }
}

}  // namespace

std::vector<Eigen::VectorXd> batch_ensemble(const std::vector<ModelOutput>& outputs, const CoefficientSet& coeffs) {
    check_outputs(outputs, coeffs);
    const std::size_t terms = outputs.front().term_count();
    std::vector<Eigen::VectorXd> result;
    result.reserve(terms);
    for (std::size_t b = 0; b < terms; ++b) {
        for (std::size_t m = 0; m < outputs.size(); ++m)
            for (std::size_t k = m + 1; k < outputs.size(); ++k)
                if (outputs[m].norm(b) == outputs[k].norm(b))
                    log::warn("term " + std::to_string(b) + ": models " + outputs[m].model() + " and " +
                              outputs[k].model() + " have equal l2-norms");
        Eigen::VectorXd out = Eigen::VectorXd::Zero(outputs.front().term(b).size());
        for (std::size_t m = 0; m < outputs.size(); ++m)
            accumulate(out, outputs[m].term(b), outputs[m].norm(b),
                       coeffs.alpha(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(m)), outputs[m].model(),
                       static_cast<int>(b));
        result.push_back(std::move(out));
    }
    return result;
}

std::vector<Eigen::VectorXd> restore_level(const std::vector<Eigen::VectorXd>& ensemble,
                                           const std::vector<ModelOutput>& outputs, const CoefficientSet& coeffs) {
    check_outputs(outputs, coeffs);
    if (ensemble.size() != outputs.front().term_count()) throw ShapeError("ensemble term count differs from outputs");
    std::vector<Eigen::VectorXd> out = ensemble;
    for (std::size_t b = 0; b < out.size(); ++b) {
        double level = 0.0;
        for (std::size_t m = 0; m < outputs.size(); ++m)
            level += coeffs.alpha(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(m)) * outputs[m].norm(b) /
                     static_cast<double>(out[b].size());
        out[b] *= level;
    }
    return out;
}

NormTable NormTable::from(const std::vector<ModelOutput>& outputs, std::vector<int> term_ids) {
    if (outputs.empty()) throw ShapeError("norm table needs at least one model");
    const std::size_t terms = outputs.front().term_count();
    NormTable t;
    if (term_ids.empty())
        for (std::size_t b = 0; b < terms; ++b) term_ids.push_back(static_cast<int>(b));
    if (term_ids.size() != terms) throw ShapeError("term id count differs from term count");
    t.term_ids = std::move(term_ids);
    t.norms.resize(static_cast<Eigen::Index>(terms), static_cast<Eigen::Index>(outputs.size()));
    for (std::size_t m = 0; m < outputs.size(); ++m) {
        if (outputs[m].term_count() != terms) throw ShapeError("models differ in term count");
        t.models.push_back(outputs[m].model());
        for (std::size_t b = 0; b < terms; ++b)
            t.norms(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(m)) = outputs[m].norm(b);
    }
    return t;
}

MedianSigma median_sigma_coeffs(const NormTable& table) {
    const Eigen::Index B = table.norms.rows(), M = table.norms.cols();
    if (B < 2) throw DegenerateInput("median+sigma coefficients need at least two terms");
    if (M < 1) throw DegenerateInput("median+sigma coefficients need at least one model");
    MedianSigma r;
    r.median.resize(M);
    r.stdev.resize(M);
    for (Eigen::Index m = 0; m < M; ++m) {
        std::vector<double> v(table.norms.col(m).data(), table.norms.col(m).data() + B);
        std::sort(v.begin(), v.end());
        const std::size_t h = v.size() / 2;
        r.median(m) = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
        const double mean = table.norms.col(m).mean();
        r.stdev(m) = std::sqrt((table.norms.col(m).array() - mean).square().sum() / static_cast<double>(B - 1));
    }
    r.raw = r.median + r.stdev;
    const double total = r.raw.sum();
    if (!(total > 0.0)) throw DegenerateInput("median+sigma raw coefficients are all zero");
    r.coefficients = r.raw / total;
    return r;
}

std::vector<Eigen::VectorXd> simplex_grid(int models, int divisions) {
    if (models < 1 || divisions < 1) throw ConfigError("simplex grid needs models >= 1 and divisions >= 1");
    std::vector<Eigen::VectorXd> out;
    std::vector<int> counts(static_cast<std::size_t>(models), 0);
    // Enumerate compositions of `divisions` into `models` parts.
    auto recurse = [&](auto&& self, int index, int remaining) -> void {
        if (index == models - 1) {
            counts[static_cast<std::size_t>(index)] = remaining;
            Eigen::VectorXd a(models);
            for (int m = 0; m < models; ++m) a(m) = static_cast<double>(counts[static_cast<std::size_t>(m)]) / divisions;
            out.push_back(a);
            return;
        }
        for (int c = remaining; c >= 0; --c) {
            counts[static_cast<std::size_t>(index)] = c;
            self(self, index + 1, remaining - c);
        }
    };
    recurse(recurse, 0, divisions);
    return out;
}

GridSearchResult search_coefficients(const std::vector<ModelOutput>& outputs,
                                     const std::vector<Eigen::VectorXd>& targets, int divisions) {
    if (outputs.empty()) throw ShapeError("coefficient search needs at least one model");
    const std::size_t terms = outputs.front().term_count();
    if (targets.size() != terms) throw ShapeError("target term count differs from outputs");
    std::vector<std::string> names;
    for (const auto& o : outputs) names.push_back(o.model());

    GridSearchResult result;
    result.best_mse = std::numeric_limits<double>::infinity();
    for (const auto& a : simplex_grid(static_cast<int>(outputs.size()), divisions)) {
        // Exact rational grid points may sum to 1 only up to rounding.
        const Eigen::VectorXd an = a / a.sum();
        const CoefficientSet c = CoefficientSet::repeated(terms, names, an);
        const auto ens = restore_level(batch_ensemble(outputs, c), outputs, c);
        double sse = 0.0;
        Eigen::Index n = 0;
        for (std::size_t b = 0; b < terms; ++b) {
            if (targets[b].size() != ens[b].size()) throw ShapeError("target length differs for term " + std::to_string(b));
            sse += (ens[b] - targets[b]).squaredNorm();
            n += ens[b].size();
        }
        const double mse = sse / static_cast<double>(n);
        result.evaluated.emplace_back(an, mse);
        if (mse < result.best_mse) {
            result.best_mse = mse;
            result.best = an;
        }
    }
    return result;
}

}  // namespace hydroens
