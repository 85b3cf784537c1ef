#include "mtrack/learners.hpp"

#include "mtrack/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <type_traits>

namespace mtrack {

std::string_view to_string(LearnerKind kind) {
    switch (kind) {
    case LearnerKind::logistic: return "logistic";
    case LearnerKind::tree: return "tree";
    case LearnerKind::random_forest: return "random_forest";
    case LearnerKind::boosting: return "boosting";
    case LearnerKind::svm: return "svm";
    case LearnerKind::neural_net: return "neural_net";
    }
    return "unknown";
}

LearnerKind parse_learner_kind(std::string_view name) {
    for (auto kind : kAllLearners)
        if (to_string(kind) == name) return kind;
    throw ValidationError("unknown learner '" + std::string(name) + "'");
}

HyperparameterSpec default_spec(LearnerKind kind, std::size_t p) {
    HyperparameterSpec spec{kind, {}};
    Hyperparameters base;
    switch (kind) {
    case LearnerKind::logistic: spec.grid.push_back(base); break;
    case LearnerKind::tree:
        for (double cp : {0.001, 0.005, 0.01, 0.05}) {
            auto hp = base;
            hp.complexity = cp;
            spec.grid.push_back(hp);
        }
        break;
    case LearnerKind::random_forest: {
        std::vector<int> ms;
        const int root = static_cast<int>(std::floor(std::sqrt(static_cast<double>(p))));
        const int half = static_cast<int>(p / 2);
        for (int m : {1, 2, 3, root, half}) {
            m = std::clamp(m, 1, static_cast<int>(std::max<std::size_t>(p, 1)));
            if (std::find(ms.begin(), ms.end(), m) == ms.end()) ms.push_back(m);
        }
        for (int m : ms) {
            auto hp = base;
            hp.n_trees = 500;
            hp.mtry = m;
            spec.grid.push_back(hp);
        }
        break;
    }
    case LearnerKind::boosting:
        for (int trees : {50, 100, 250, 500})
            for (int depth : {1, 2, 3})
                for (double shrink : {0.01, 0.1}) {
                    auto hp = base;
                    hp.n_trees = trees;
                    hp.depth = depth;
                    hp.shrinkage = shrink;
                    spec.grid.push_back(hp);
                }
        break;
    case LearnerKind::svm:
        for (double c : {0.1, 1.0, 10.0, 100.0})
            for (double g : {0.01, 0.1, 1.0}) {
                auto hp = base;
                hp.cost = c;
                hp.gamma = g;
                spec.grid.push_back(hp);
            }
        break;
    case LearnerKind::neural_net:
        for (int h : {1, 3, 5, 10})
            for (double d : {0.0, 0.01, 0.1}) {
                auto hp = base;
                hp.hidden = h;
                hp.decay = d;
                spec.grid.push_back(hp);
            }
        break;
    }
    return spec;
}

void validate(LearnerKind kind, const Hyperparameters& hp, std::size_t p) {
    auto bad = [&](const std::string& what) {
        throw ValidationError(std::string(to_string(kind)) + ": " + what);
    };
    switch (kind) {
    case LearnerKind::logistic: break;
    case LearnerKind::tree:
        if (!(hp.complexity >= 0.0 && hp.complexity < 1.0)) bad("complexity must lie in [0, 1)");
        break;
    case LearnerKind::random_forest:
        if (hp.n_trees < 1) bad("n_trees must be >= 1");
        if (hp.mtry < 1 || static_cast<std::size_t>(hp.mtry) > p) bad("mtry must lie in [1, p]");
        break;
    case LearnerKind::boosting:
        if (hp.n_trees < 1) bad("n_trees must be >= 1");
        if (hp.depth < 1) bad("depth must be >= 1");
        if (!(hp.shrinkage > 0.0 && hp.shrinkage <= 1.0)) bad("shrinkage must lie in (0, 1]");
        break;
    case LearnerKind::svm:
        if (!(hp.cost > 0.0)) bad("cost must be positive");
        if (!(hp.gamma > 0.0)) bad("gamma must be positive");
        break;
    case LearnerKind::neural_net:
        if (hp.hidden < 1) bad("hidden must be >= 1");
        if (!(hp.decay >= 0.0)) bad("decay must be non-negative");
        break;
    }
}

void validate(const HyperparameterSpec& spec, std::size_t p) {
    if (spec.grid.empty()) throw ValidationError(std::string(to_string(spec.kind)) + ": empty grid");
    for (const auto& hp : spec.grid) validate(spec.kind, hp, p);
}

std::string describe(LearnerKind kind, const Hyperparameters& hp) {
    char buf[128];
    switch (kind) {
    case LearnerKind::logistic: return "none";
    case LearnerKind::tree: std::snprintf(buf, sizeof buf, "cp=%g", hp.complexity); break;
    case LearnerKind::random_forest: std::snprintf(buf, sizeof buf, "trees=%d;mtry=%d", hp.n_trees, hp.mtry); break;
    case LearnerKind::boosting:
        std::snprintf(buf, sizeof buf, "trees=%d;depth=%d;shrinkage=%g", hp.n_trees, hp.depth, hp.shrinkage);
        break;
    case LearnerKind::svm: std::snprintf(buf, sizeof buf, "cost=%g;gamma=%g", hp.cost, hp.gamma); break;
    case LearnerKind::neural_net: std::snprintf(buf, sizeof buf, "hidden=%d;decay=%g", hp.hidden, hp.decay); break;
    }
    return buf;
}

std::vector<double> complexity_key(LearnerKind kind, const Hyperparameters& hp) {
    switch (kind) {
    case LearnerKind::logistic: return {};
    case LearnerKind::tree: return {-hp.complexity};
    case LearnerKind::random_forest: return {static_cast<double>(hp.n_trees), static_cast<double>(hp.mtry)};
    case LearnerKind::boosting:
        return {static_cast<double>(hp.n_trees), static_cast<double>(hp.depth), hp.shrinkage};
    case LearnerKind::svm: return {hp.cost, hp.gamma};
    case LearnerKind::neural_net: return {static_cast<double>(hp.hidden), -hp.decay};
    }
    return {};
}

FittedModel fit(LearnerKind kind, const Dataset& data, const Hyperparameters& hp, std::uint64_t seed,
                const LearnerOptions& options) {
    data.validate();
    if (!data.has_both_classes()) throw FitError(std::string(to_string(kind)) + ": training data has a single class");
    validate(kind, hp, data.cols());
    FittedModel model;
    model.kind = kind;
    model.hp = hp;
    model.seed = seed;
    model.n_features = data.cols();
    switch (kind) {
    case LearnerKind::logistic: model.params = fit_logistic(data, options.logistic); break;
    case LearnerKind::tree: model.params = fit_tree(data, hp.complexity, options.tree); break;
    case LearnerKind::random_forest:
        model.params = fit_forest(data, hp.n_trees, hp.mtry, seed, options.forest);
        break;
    case LearnerKind::boosting:
        model.params = fit_boosting(data, hp.n_trees, hp.depth, hp.shrinkage, options.boosting);
        break;
    case LearnerKind::svm: model.params = fit_svm(data, hp.cost, hp.gamma, options.svm); break;
    case LearnerKind::neural_net:
        model.params = fit_neural_net(data, hp.hidden, hp.decay, seed, options.neural_net);
        break;
    }
    return model;
}

namespace {

void check_columns(const FittedModel& model, const Eigen::MatrixXd& X) {
    if (static_cast<std::size_t>(X.cols()) != model.n_features)
        throw ValidationError("predict: expected " + std::to_string(model.n_features) + " columns, got " +
                              std::to_string(X.cols()));
}

} // namespace

Eigen::VectorXd predict_proba(const FittedModel& model, const Eigen::MatrixXd& X) {
    check_columns(model, X);
    return std::visit(
        [&](const auto& m) -> Eigen::VectorXd {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LogisticModel>) return logistic_proba(m, X);
            else if constexpr (std::is_same_v<T, TreeModel>) return tree_proba(m, X);
            else if constexpr (std::is_same_v<T, ForestModel>) return forest_proba(m, X);
            else if constexpr (std::is_same_v<T, BoostingModel>) return boosting_proba(m, X);
            else if constexpr (std::is_same_v<T, SvmModel>) {
                const Eigen::VectorXd d = svm_decision(m, X);
                Eigen::VectorXd out(d.size());
                for (Eigen::Index i = 0; i < d.size(); ++i) out[i] = d[i] >= 0.0 ? 1.0 : 0.0;
                return out;
            } else return neural_net_proba(m, X);
        },
        model.params);
}

std::vector<int> predict_class(const FittedModel& model, const Eigen::MatrixXd& X) {
    const Eigen::VectorXd p = predict_proba(model, X);
    std::vector<int> out(static_cast<std::size_t>(p.size()));
    for (Eigen::Index i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = p[i] >= 0.5 ? 1 : 0;
    return out;
}

} // namespace mtrack
