#include "hydroens/learners/model.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "hydroens/errors.hpp"
#include "hydroens/util.hpp"

namespace hydroens {

using nlohmann::json;

ModelKind kind_of(const LearnerSpec& spec) { return static_cast<ModelKind>(spec.index()); }

void validate(const LearnerSpec& spec) {
    std::visit([](const auto& s) { validate(s); }, spec);
}

std::string weight_fingerprint(const Eigen::Ref<const Eigen::VectorXd>& w) { return hex64(fnv1a(w)); }

FittedModel fit_model(const LearnerSpec& spec, const std::vector<std::string>& columns,
                      const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                      const Eigen::Ref<const Eigen::VectorXd>& w, std::uint64_t seed) {
    if (static_cast<Eigen::Index>(columns.size()) != X.cols())
        throw ShapeError("column names do not match the design matrix width");
    FittedModel model;
    model.columns = columns;
    model.seed = seed;
    model.weight_fingerprint = weight_fingerprint(w);
    switch (kind_of(spec)) {
        case ModelKind::kernel: model.params = fit_kernel(X, y, w, std::get<KernelRegSpec>(spec), seed); break;
        case ModelKind::forest: {
            ForestSpec fs = std::get<ForestSpec>(spec);
            fs.seed = seed;
            model.params = fit_forest(X, y, w, fs);
            break;
        }
        case ModelKind::svr: model.params = fit_svr(X, y, w, std::get<SvrSpec>(spec)); break;
    }
    return model;
}

FittedModel fit_model(const LearnerSpec& spec, const DesignMatrix& data, std::uint64_t seed) {
    return fit_model(spec, data.column_names(), data.X(), data.y(), data.w(), seed);
}

Eigen::VectorXd predict(const FittedModel& model, const std::vector<std::string>& columns,
                        const Eigen::Ref<const Eigen::MatrixXd>& X) {
    if (columns != model.columns) {
        std::string detail = "expected " + std::to_string(model.columns.size()) + " columns, got " +
                             std::to_string(columns.size());
        for (std::size_t i = 0; i < std::min(columns.size(), model.columns.size()); ++i)
            if (columns[i] != model.columns[i]) {
                detail = "column " + std::to_string(i) + " is '" + columns[i] + "', expected '" + model.columns[i] + "'";
                break;
            }
        throw SchemaError(model.tag() + " model schema mismatch: " + detail);
    }
    if (X.cols() != static_cast<Eigen::Index>(columns.size())) throw ShapeError("matrix width differs from column list");
    Eigen::VectorXd out;
    switch (model.kind()) {
        case ModelKind::kernel: out = predict_kernel(std::get<KernelModel>(model.params), X); break;
        case ModelKind::forest: out = predict_forest(std::get<ForestModel>(model.params), X); break;
        case ModelKind::svr: out = predict_svr(std::get<SvrModel>(model.params), X); break;
    }
    if (!out.allFinite()) throw ValidationError(model.tag() + " produced non-finite predictions");
    return out;
}

// ---- JSON -----------------------------------------------------------------

namespace {

json vec_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::isnan(v(i)))
            a.push_back(nullptr);
        else
            a.push_back(v(i));
    }
    return a;
}

Eigen::VectorXd json_vec(const json& a) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = a[i].is_null() ? std::numeric_limits<double>::quiet_NaN() : a[i].get<double>();
    return v;
}

json mat_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_json(m.row(r).transpose()));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Eigen::MatrixXd json_mat(const json& j) {
    Eigen::MatrixXd m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
    const json& data = j.at("data");
    if (static_cast<Eigen::Index>(data.size()) != m.rows()) throw SchemaError("matrix row count mismatch in artifact");
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const Eigen::VectorXd row = json_vec(data[static_cast<std::size_t>(r)]);
        if (row.size() != m.cols()) throw SchemaError("matrix column count mismatch in artifact");
        m.row(r) = row.transpose();
    }
    return m;
}

json scaler_json(const MinMaxScaler& s) { return {{"offset", vec_json(s.offset)}, {"scale", vec_json(s.scale)}}; }
MinMaxScaler json_scaler(const json& j) { return {json_vec(j.at("offset")), json_vec(j.at("scale"))}; }

json kernel_spec_json(const KernelRegSpec& s) {
    return {{"learner", s.learner == KernelLearner::svm ? "svm" : "least_squares"},
            {"kernel_scale", s.kernel_scale},
            {"lambda", s.lambda},
            {"expansion_dims", s.expansion_dims},
            {"epsilon", s.epsilon}};
}

KernelRegSpec json_kernel_spec(const json& j) {
    KernelRegSpec s;
    const std::string learner = j.value("learner", std::string("least_squares"));
    if (learner == "svm")
        s.learner = KernelLearner::svm;
    else if (learner == "least_squares")
        s.learner = KernelLearner::least_squares;
    else
        throw ConfigError("unknown kernel learner '" + learner + "'");
    s.kernel_scale = j.value("kernel_scale", s.kernel_scale);
    s.lambda = j.value("lambda", s.lambda);
    s.expansion_dims = j.value("expansion_dims", s.expansion_dims);
    s.epsilon = j.value("epsilon", s.epsilon);
    return s;
}

json forest_spec_json(const ForestSpec& s) {
    return {{"min_leaf_size", s.min_leaf_size}, {"n_trees", s.n_trees}, {"seed", s.seed}, {"mtry", s.mtry}};
}

ForestSpec json_forest_spec(const json& j) {
    ForestSpec s;
    s.min_leaf_size = j.value("min_leaf_size", s.min_leaf_size);
    s.n_trees = j.value("n_trees", s.n_trees);
    s.seed = j.value("seed", s.seed);
    s.mtry = j.value("mtry", s.mtry);
    return s;
}

json svr_spec_json(const SvrSpec& s) {
    return {{"box_constraint", s.box_constraint},
            {"epsilon", s.epsilon},
            {"kernel", s.kernel == SvrKernel::linear ? "linear" : "polynomial"},
            {"poly_order", s.poly_order},
            {"tolerance", s.tolerance},
            {"max_iterations", s.max_iterations},
            {"standardize_target", s.standardize_target}};
}

SvrSpec json_svr_spec(const json& j) {
    SvrSpec s;
    s.box_constraint = j.value("box_constraint", s.box_constraint);
    s.epsilon = j.value("epsilon", s.epsilon);
    const std::string kernel = j.value("kernel", std::string("polynomial"));
    if (kernel == "linear")
        s.kernel = SvrKernel::linear;
    else if (kernel == "polynomial")
        s.kernel = SvrKernel::polynomial;
    else
        throw ConfigError("unknown SVR kernel '" + kernel + "'");
    s.poly_order = j.value("poly_order", s.poly_order);
    s.tolerance = j.value("tolerance", s.tolerance);
    s.max_iterations = j.value("max_iterations", s.max_iterations);
    s.standardize_target = j.value("standardize_target", s.standardize_target);
    return s;
}

json tree_json(const RegressionTree& t) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         value = json::array(), begin = json::array(), end = json::array();
    for (const auto& n : t.nodes) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        value.push_back(n.value);
        begin.push_back(n.sample_begin);
        end.push_back(n.sample_end);
    }
    return {{"feature", feature}, {"threshold", threshold}, {"left", left},       {"right", right},
            {"value", value},     {"sample_begin", begin},  {"sample_end", end}, {"samples", t.samples},
            {"in_bag", t.in_bag}, {"oob_rows", t.oob_rows}};
}

RegressionTree json_tree(const json& j) {
    RegressionTree t;
    const auto& feature = j.at("feature");
    t.nodes.resize(feature.size());
    for (std::size_t i = 0; i < feature.size(); ++i) {
        TreeNode& n = t.nodes[i];
        n.feature = feature[i].get<int>();
        n.threshold = j.at("threshold")[i].get<double>();
        n.left = j.at("left")[i].get<int>();
        n.right = j.at("right")[i].get<int>();
        n.value = j.at("value")[i].get<double>();
        n.sample_begin = j.at("sample_begin")[i].get<int>();
        n.sample_end = j.at("sample_end")[i].get<int>();
    }
    t.samples = j.at("samples").get<std::vector<int>>();
    t.in_bag = j.at("in_bag").get<std::vector<int>>();
    t.oob_rows = j.at("oob_rows").get<std::vector<int>>();
    return t;
}

json params_json(const KernelModel& m) {
    return {{"spec", kernel_spec_json(m.spec)},          {"scaler", scaler_json(m.scaler)},
            {"omega", mat_json(m.features.omega)},       {"phase", vec_json(m.features.phase)},
            {"beta", vec_json(m.beta)},                  {"intercept", m.intercept},
            {"seed", m.seed}};
}

json params_json(const ForestModel& m) {
    json trees = json::array();
    for (const auto& t : m.trees) trees.push_back(tree_json(t));
    return {{"spec", forest_spec_json(m.spec)},
            {"n_features", m.n_features},
            {"train_y", vec_json(m.train_y)},
            {"train_w", vec_json(m.train_w)},
            {"oob_prediction", vec_json(m.oob_prediction)},
            {"oob_rows", m.oob_rows},
            {"oob_mse", m.oob_mse},
            {"trees", trees}};
}

json params_json(const SvrModel& m) {
    return {{"spec", svr_spec_json(m.spec)},   {"scaler", scaler_json(m.scaler)},
            {"support", mat_json(m.support)},  {"coef", vec_json(m.coef)},
            {"bias", m.bias},                  {"objective", m.objective},
            {"kkt_gap", m.kkt_gap},            {"iterations", m.iterations},
            {"training_rows", m.training_rows}};
}

KernelModel json_kernel_model(const json& j) {
    KernelModel m;
    m.spec = json_kernel_spec(j.at("spec"));
    m.scaler = json_scaler(j.at("scaler"));
    m.features.omega = json_mat(j.at("omega"));
    m.features.phase = json_vec(j.at("phase"));
    m.beta = json_vec(j.at("beta"));
    m.intercept = j.at("intercept").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    return m;
}

ForestModel json_forest_model(const json& j) {
    ForestModel m;
    m.spec = json_forest_spec(j.at("spec"));
    m.n_features = j.at("n_features").get<Eigen::Index>();
    m.train_y = json_vec(j.at("train_y"));
    m.train_w = json_vec(j.at("train_w"));
    m.oob_prediction = json_vec(j.at("oob_prediction"));
    m.oob_rows = j.at("oob_rows").get<Eigen::Index>();
    m.oob_mse = j.at("oob_mse").get<double>();
    for (const auto& t : j.at("trees")) m.trees.push_back(json_tree(t));
    return m;
}

SvrModel json_svr_model(const json& j) {
    SvrModel m;
    m.spec = json_svr_spec(j.at("spec"));
    m.scaler = json_scaler(j.at("scaler"));
    m.support = json_mat(j.at("support"));
    m.coef = json_vec(j.at("coef"));
    m.bias = j.at("bias").get<double>();
    m.objective = j.at("objective").get<double>();
    m.kkt_gap = j.at("kkt_gap").get<double>();
    m.iterations = j.at("iterations").get<long>();
    m.training_rows = j.at("training_rows").get<Eigen::Index>();
    return m;
}

}  // namespace

void to_json(json& j, const LearnerSpec& spec) {
    switch (kind_of(spec)) {
        case ModelKind::kernel: j = kernel_spec_json(std::get<KernelRegSpec>(spec)); break;
        case ModelKind::forest: j = forest_spec_json(std::get<ForestSpec>(spec)); break;
        case ModelKind::svr: j = svr_spec_json(std::get<SvrSpec>(spec)); break;
    }
    j["model"] = model_tag(kind_of(spec));
}

LearnerSpec learner_spec_from_json(const json& j) {
    switch (model_kind_from_tag(j.at("model").get<std::string>())) {
        case ModelKind::kernel: return json_kernel_spec(j);
        case ModelKind::forest: return json_forest_spec(j);
        case ModelKind::svr: return json_svr_spec(j);
    }
    throw ConfigError("unreachable learner kind");
}

json model_to_json(const FittedModel& model) {
    json j;
    j["format"] = "hydroens-model/1";
    j["model"] = model.tag();
    j["columns"] = model.columns;
    j["weight_fingerprint"] = model.weight_fingerprint;
    j["seed"] = model.seed;
    j["params"] = std::visit([](const auto& p) { return params_json(p); }, model.params);
    return j;
}

FittedModel model_from_json(const json& j) {
    if (j.value("format", std::string()) != "hydroens-model/1") throw SchemaError("not a hydroens model artifact");
    FittedModel m;
    m.columns = j.at("columns").get<std::vector<std::string>>();
    m.weight_fingerprint = j.at("weight_fingerprint").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    const json& p = j.at("params");
    switch (model_kind_from_tag(j.at("model").get<std::string>())) {
        case ModelKind::kernel: m.params = json_kernel_model(p); break;
        case ModelKind::forest: m.params = json_forest_model(p); break;
        case ModelKind::svr: m.params = json_svr_model(p); break;
    }
    return m;
}

void save_model(const FittedModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write model file " + path.string());
    out << model_to_json(model).dump() << '\n';
}

FittedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read model file " + path.string());
    try {
        return model_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw SchemaError("malformed model artifact " + path.string() + ": " + e.what());
    }
}

}  // namespace hydroens
