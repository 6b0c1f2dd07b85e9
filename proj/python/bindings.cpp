#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hydroens/ensemble.hpp"
#include "hydroens/errors.hpp"
#include "hydroens/io/config.hpp"
#include "hydroens/io/csv.hpp"
#include "hydroens/io/pipeline.hpp"
#include "hydroens/metrics.hpp"
#include "hydroens/sst_weights.hpp"

namespace py = pybind11;
using namespace hydroens;

namespace {

std::vector<MonthKey> parse_months(const std::vector<std::string>& text) {
    std::vector<MonthKey> out;
    out.reserve(text.size());
    for (const auto& s : text) {
        auto m = MonthKey::parse(s);
        if (!m) throw ValidationError("bad month id '" + s + "', expected YYYY-MM");
        out.push_back(*m);
    }
    return out;
}

std::vector<std::string> month_strings(const std::vector<MonthKey>& months) {
    std::vector<std::string> out;
    for (auto m : months) out.push_back(m.to_string());
    return out;
}

// outputs[m][b]: model m, term b.
std::vector<ModelOutput> model_outputs(const std::vector<std::vector<Eigen::VectorXd>>& outputs,
                                       std::vector<std::string> models) {
    if (models.empty())
        for (std::size_t m = 0; m < outputs.size(); ++m) models.push_back("m" + std::to_string(m));
    if (models.size() != outputs.size()) throw ShapeError("one model name per output is required");
    std::vector<ModelOutput> out;
    for (std::size_t m = 0; m < outputs.size(); ++m) out.emplace_back(models[m], outputs[m]);
    return out;
}

CoefficientSet coefficient_set(const Eigen::MatrixXd& alpha, const std::vector<ModelOutput>& outputs) {
    CoefficientSet c;
    for (const auto& o : outputs) c.models.push_back(o.model());
    c.alpha = alpha;
    c.validate();
    return c;
}

}  // namespace

PYBIND11_MODULE(_hydroens, m) {
    m.doc() = "Core routines of the hydroens C++ library";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<DegenerateInput>(m, "DegenerateInput", base.ptr());
    py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
    py::register_exception<ZeroNormError>(m, "ZeroNormError", base.ptr());
    py::register_exception<LineError>(m, "LineError", base.ptr());

    m.def("l2_normalized", [](const Eigen::VectorXd& v) { return l2_normalized(v); }, py::arg("v"));
    m.def(
        "global_ensemble",
        [](const std::vector<Eigen::VectorXd>& outputs, const Eigen::VectorXd& a) { return global_ensemble(outputs, a); },
        py::arg("outputs"), py::arg("a"));
    m.def(
        "batch_ensemble",
        [](const std::vector<std::vector<Eigen::VectorXd>>& outputs, const Eigen::MatrixXd& alpha,
           std::vector<std::string> models) {
            const auto mo = model_outputs(outputs, std::move(models));
            return batch_ensemble(mo, coefficient_set(alpha, mo));
        },
        py::arg("outputs"), py::arg("alpha"), py::arg("models") = std::vector<std::string>{},
        "outputs[m][b] is model m on term b; alpha is terms x models.");
    m.def(
        "restore_level",
        [](const std::vector<Eigen::VectorXd>& ensemble, const std::vector<std::vector<Eigen::VectorXd>>& outputs,
           const Eigen::MatrixXd& alpha) {
            const auto mo = model_outputs(outputs, {});
            return restore_level(ensemble, mo, coefficient_set(alpha, mo));
        },
        py::arg("ensemble"), py::arg("outputs"), py::arg("alpha"));
    m.def(
        "median_sigma_coeffs",
        [](const Eigen::MatrixXd& norms) {
            NormTable t;
            t.norms = norms;
            for (Eigen::Index j = 0; j < norms.cols(); ++j) t.models.push_back("m" + std::to_string(j));
            const auto r = median_sigma_coeffs(t);
            py::dict d;
            d["median"] = r.median;
            d["stdev"] = r.stdev;
            d["raw"] = r.raw;
            d["coefficients"] = r.coefficients;
            return d;
        },
        py::arg("norms"), "norms is terms x models.");

    m.def("mse", [](const Eigen::VectorXd& yhat, const Eigen::VectorXd& y) { return mse(yhat, y); });
    m.def("rmse", [](const Eigen::VectorXd& yhat, const Eigen::VectorXd& y) { return rmse(yhat, y); });
    m.def("mae", [](const Eigen::VectorXd& yhat, const Eigen::VectorXd& y) { return mae(yhat, y); });
    m.def("sim", [](const Eigen::VectorXd& yhat, const Eigen::VectorXd& y) { return sim(yhat, y); });
    m.def("mse_skill_identity", [](const Eigen::VectorXd& yhat, const Eigen::VectorXd& y) {
        const auto c = mse_skill_identity(yhat, y);
        return py::make_tuple(c.lhs, c.rhs);
    });
    m.def(
        "check_proposition1",
        [](const std::vector<Eigen::VectorXd>& outputs, const Eigen::VectorXd& y, const Eigen::VectorXd& a) {
            const auto r = check_proposition1(outputs, y, a);
            py::dict d;
            d["lhs"] = r.lhs;
            d["rhs"] = r.rhs;
            d["in_domain"] = r.in_domain;
            d["holds"] = r.holds;
            d["strict"] = r.strict;
            d["degenerate"] = r.degenerate;
            return d;
        },
        py::arg("outputs"), py::arg("y"), py::arg("a"));
    m.def(
        "proposition1_sweep",
        [](long instances, std::uint64_t seed) {
            const auto s = proposition1_sweep(instances, seed);
            py::dict d;
            d["instances"] = s.instances;
            d["violations"] = s.violations;
            d["strict_candidates"] = s.strict_candidates;
            d["strict_failures"] = s.strict_failures;
            d["worst_excess"] = s.worst_excess;
            return d;
        },
        py::arg("instances"), py::arg("seed"));

    m.def("minmax_standardize", [](const Eigen::VectorXd& w) { return minmax_standardize(w); });
    m.def(
        "finalize_weights", [](const Eigen::VectorXd& w, double eps) { return finalize_weights(w, eps); },
        py::arg("w_std"), py::arg("epsilon") = 1e-8);
    m.def(
        "compute_sst_weights",
        [](const std::vector<std::string>& months, const Eigen::MatrixXd& z, std::uint64_t seed, double perplexity,
           int iterations) {
            if (static_cast<std::size_t>(z.rows()) != months.size())
                throw ShapeError("one feature row per month is required");
            const auto keys = parse_months(months);
            std::vector<MonthlyFeature> features;
            for (std::size_t i = 0; i < keys.size(); ++i)
                features.push_back({keys[i], z.row(static_cast<Eigen::Index>(i)).transpose()});
            SstWeightOptions opt;
            opt.tsne.seed = seed;
            opt.tsne.perplexity = perplexity;
            opt.tsne.iterations = iterations;
            const auto r = compute_sst_weights(features, opt);
            py::dict d;
            d["stw"] = r.weights.monthly;
            d["standardized"] = r.standardized;
            d["scores"] = r.component.scores;
            d["embedding"] = r.embedding.embedding;
            d["kl_final"] = r.embedding.kl_final;
            d["perplexity"] = r.embedding.perplexity;
            return d;
        },
        py::arg("months"), py::arg("z"), py::arg("seed") = 2019, py::arg("perplexity") = 0.0,
        py::arg("iterations") = 1000);
    m.def(
        "silhouette",
        [](const Eigen::MatrixXd& points, const std::vector<int>& labels) { return silhouette(points, labels); },
        py::arg("points"), py::arg("labels"));
    m.def(
        "flood_month_silhouette",
        [](const Eigen::MatrixXd& embedding, const std::vector<std::string>& months) {
            return flood_month_silhouette(embedding, parse_months(months));
        },
        py::arg("embedding"), py::arg("months"));

    m.def(
        "read_features",
        [](const std::filesystem::path& path) {
            const auto f = io::read_features(path);
            std::vector<MonthKey> months;
            for (const auto& x : f) months.push_back(x.month);
            return py::make_tuple(month_strings(months), stack_features(f));
        },
        py::arg("path"));
    m.def(
        "read_embedding",
        [](const std::filesystem::path& path) {
            auto [months, e] = io::read_embedding(path);
            return py::make_tuple(month_strings(months), e);
        },
        py::arg("path"));
    m.def(
        "write_embedding",
        [](const std::filesystem::path& path, const std::vector<std::string>& months, const Eigen::MatrixXd& e) {
            io::write_embedding(path, parse_months(months), e);
        },
        py::arg("path"), py::arg("months"), py::arg("embedding"));
    m.def(
        "read_weights",
        [](const std::filesystem::path& path) {
            const auto w = io::read_weights(path);
            return py::make_tuple(month_strings(w.months), w.monthly);
        },
        py::arg("path"));

    m.def(
        "run",
        [](const std::filesystem::path& config_path) {
            const auto config = io::load_config(config_path);
            io::RunSummary s;
            {
                py::gil_scoped_release release;
                s = io::run_pipeline(config);
            }
            py::list table;
            for (const auto& r : s.evaluation.table2) {
                py::dict d;
                d["method"] = r.method;
                d["weighting"] = r.weighting;
                d["fcd"] = r.fcd;
                d["rmse"] = r.rmse;
                d["mae"] = r.mae;
                table.append(d);
            }
            py::dict d;
            d["table2"] = table;
            d["output_dir"] = config.output_dir;
            d["seconds"] = s.seconds;
            return d;
        },
        py::arg("config_path"), "Runs every stage from a config file and returns the comparison table.");
}
