#include "mtrack/model_io.hpp"

#include "mtrack/error.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstdlib>

namespace mtrack {

using nlohmann::json;

namespace {

std::string hex(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double unhex(const json& j) {
    const std::string s = j.get<std::string>();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw ValidationError("model: bad number '" + s + "'");
    return v;
}

json vec(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(hex(v[i]));
    return out;
}

Eigen::VectorXd unvec(const json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = unhex(j[i]);
    return v;
}

json mat(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec(m.row(r).transpose()));
    return json{{"cols", m.cols()}, {"rows", rows}};
}

Eigen::MatrixXd unmat(const json& j) {
    const auto& rows = j.at("rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), j.at("cols").get<Eigen::Index>());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<Eigen::Index>(rows[r].size()) != m.cols()) throw ValidationError("model: ragged matrix");
        m.row(static_cast<Eigen::Index>(r)) = unvec(rows[r]).transpose();
    }
    return m;
}

json standardizer(const Standardizer& s) { return json{{"mean", vec(s.mean)}, {"scale", vec(s.scale)}}; }

Standardizer unstandardizer(const json& j) {
    Standardizer s;
    s.mean = unvec(j.at("mean"));
    s.scale = unvec(j.at("scale"));
    return s;
}

json tree(const cart::Tree& t) {
    json nodes = json::array();
    for (const auto& n : t.nodes)
        nodes.push_back(json::array({n.feature, hex(n.threshold), n.left, n.right, hex(n.count), hex(n.sum),
                                     hex(n.value)}));
    return nodes;
}

cart::Tree untree(const json& j) {
    cart::Tree t;
    for (const auto& a : j) {
        if (a.size() != 7) throw ValidationError("model: bad tree node");
        cart::Node n;
        n.feature = a[0].get<int>();
        n.threshold = unhex(a[1]);
        n.left = a[2].get<int>();
        n.right = a[3].get<int>();
        n.count = unhex(a[4]);
        n.sum = unhex(a[5]);
        n.value = unhex(a[6]);
        t.nodes.push_back(n);
    }
    const int size = static_cast<int>(t.nodes.size());
    if (size == 0) throw ValidationError("model: empty tree");
    for (const auto& n : t.nodes)
        if (!n.is_leaf() && (n.left <= 0 || n.left >= size || n.right <= 0 || n.right >= size))
            throw ValidationError("model: tree child out of range");
    return t;
}

json trees(const std::vector<cart::Tree>& ts) {
    json out = json::array();
    for (const auto& t : ts) out.push_back(tree(t));
    return out;
}

std::vector<cart::Tree> untrees(const json& j) {
    std::vector<cart::Tree> out;
    for (const auto& t : j) out.push_back(untree(t));
    return out;
}

json hyper(const Hyperparameters& hp) {
    return json{{"complexity", hex(hp.complexity)}, {"n_trees", hp.n_trees}, {"mtry", hp.mtry},
                {"depth", hp.depth},               {"shrinkage", hex(hp.shrinkage)},
                {"cost", hex(hp.cost)},            {"gamma", hex(hp.gamma)},
                {"hidden", hp.hidden},             {"decay", hex(hp.decay)}};
}

Hyperparameters unhyper(const json& j) {
    Hyperparameters hp;
    hp.complexity = unhex(j.at("complexity"));
    hp.n_trees = j.at("n_trees").get<int>();
    hp.mtry = j.at("mtry").get<int>();
    hp.depth = j.at("depth").get<int>();
    hp.shrinkage = unhex(j.at("shrinkage"));
    hp.cost = unhex(j.at("cost"));
    hp.gamma = unhex(j.at("gamma"));
    hp.hidden = j.at("hidden").get<int>();
    hp.decay = unhex(j.at("decay"));
    return hp;
}

} // namespace

std::string export_model(const FittedModel& model) {
    json j;
    j["format"] = "mtrack-model";
    j["version"] = kModelFormatVersion;
    j["kind"] = std::string(to_string(model.kind));
    j["hyperparameters"] = hyper(model.hp);
    j["seed"] = model.seed;
    j["fold_id"] = model.fold_id;
    j["n_features"] = model.n_features;
    json p;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LogisticModel>) {
                p["standardizer"] = standardizer(m.standardizer);
                p["coefficients"] = vec(m.coefficients);
                p["standard_errors"] = vec(m.standard_errors);
                p["iterations"] = m.iterations;
                p["deviance"] = hex(m.deviance);
            } else if constexpr (std::is_same_v<T, TreeModel>) {
                p["tree"] = tree(m.tree);
            } else if constexpr (std::is_same_v<T, ForestModel>) {
                p["trees"] = trees(m.trees);
            } else if constexpr (std::is_same_v<T, BoostingModel>) {
                p["initial"] = hex(m.initial);
                p["shrinkage"] = hex(m.shrinkage);
                p["trees"] = trees(m.trees);
            } else if constexpr (std::is_same_v<T, SvmModel>) {
                p["standardizer"] = standardizer(m.standardizer);
                p["gamma"] = hex(m.gamma);
                p["cost"] = hex(m.cost);
                p["support_vectors"] = mat(m.support_vectors);
                p["dual_coef"] = vec(m.dual_coef);
                p["rho"] = hex(m.rho);
                p["iterations"] = m.iterations;
            } else {
                p["standardizer"] = standardizer(m.standardizer);
                p["inputs"] = m.params.inputs;
                p["hidden"] = m.params.hidden;
                p["theta"] = vec(m.params.theta);
                p["decay"] = hex(m.decay);
                p["training_loss"] = hex(m.training_loss);
            }
        },
        model.params);
    j["parameters"] = p;
    return j.dump(1) + "\n";
}

FittedModel import_model(std::string_view text) {
    try {
        const json j = json::parse(text);
        if (j.at("format").get<std::string>() != "mtrack-model") throw ValidationError("model: unknown format");
        if (j.at("version").get<int>() != kModelFormatVersion)
            throw ValidationError("model: unsupported version " + std::to_string(j.at("version").get<int>()));
        FittedModel model;
        model.kind = parse_learner_kind(j.at("kind").get<std::string>());
        model.hp = unhyper(j.at("hyperparameters"));
        model.seed = j.at("seed").get<std::uint64_t>();
        model.fold_id = j.at("fold_id").get<int>();
        model.n_features = j.at("n_features").get<std::size_t>();
        const json& p = j.at("parameters");
        switch (model.kind) {
        case LearnerKind::logistic: {
            LogisticModel m;
            m.standardizer = unstandardizer(p.at("standardizer"));
            m.coefficients = unvec(p.at("coefficients"));
            m.standard_errors = unvec(p.at("standard_errors"));
            m.iterations = p.at("iterations").get<int>();
            m.deviance = unhex(p.at("deviance"));
            if (m.coefficients.size() != static_cast<Eigen::Index>(model.n_features) + 1)
                throw ValidationError("model: coefficient count mismatch");
            model.params = std::move(m);
            break;
        }
        case LearnerKind::tree: model.params = TreeModel{untree(p.at("tree"))}; break;
        case LearnerKind::random_forest: model.params = ForestModel{untrees(p.at("trees"))}; break;
        case LearnerKind::boosting: {
            BoostingModel m;
            m.initial = unhex(p.at("initial"));
            m.shrinkage = unhex(p.at("shrinkage"));
            m.trees = untrees(p.at("trees"));
            model.params = std::move(m);
            break;
        }
        case LearnerKind::svm: {
            SvmModel m;
            m.standardizer = unstandardizer(p.at("standardizer"));
            m.gamma = unhex(p.at("gamma"));
            m.cost = unhex(p.at("cost"));
            m.support_vectors = unmat(p.at("support_vectors"));
            m.dual_coef = unvec(p.at("dual_coef"));
            m.rho = unhex(p.at("rho"));
            m.iterations = p.at("iterations").get<std::int64_t>();
            model.params = std::move(m);
            break;
        }
        case LearnerKind::neural_net: {
            NeuralNetModel m;
            m.standardizer = unstandardizer(p.at("standardizer"));
            m.params.inputs = p.at("inputs").get<int>();
            m.params.hidden = p.at("hidden").get<int>();
            m.params.theta = unvec(p.at("theta"));
            m.decay = unhex(p.at("decay"));
            m.training_loss = unhex(p.at("training_loss"));
            if (m.params.theta.size() != NeuralNetParams::size_for(m.params.inputs, m.params.hidden))
                throw ValidationError("model: parameter count mismatch");
            model.params = std::move(m);
            break;
        }
        }
        return model;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("model: ") + e.what());
    }
}

} // namespace mtrack
