#pragma once

#include "mtrack/dataset.hpp"
#include "mtrack/learners/logistic.hpp"
#include "mtrack/learners/neural_net.hpp"
#include "mtrack/learners/svm.hpp"
#include "mtrack/learners/tree_models.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mtrack {

enum class LearnerKind { logistic, tree, random_forest, boosting, svm, neural_net };

inline constexpr std::array<LearnerKind, 6> kAllLearners = {LearnerKind::logistic, LearnerKind::tree,
                                                             LearnerKind::random_forest, LearnerKind::boosting,
                                                             LearnerKind::svm, LearnerKind::neural_net};

std::string_view to_string(LearnerKind kind);
LearnerKind parse_learner_kind(std::string_view name); // throws ValidationError

// One setting; only the fields relevant to the kind are read.
struct Hyperparameters {
    double complexity = 0.01; // tree: cost-complexity cp
    int n_trees = 500;        // forest, boosting
    int mtry = 3;             // forest: candidate predictors per split
    int depth = 1;            // boosting: maximum tree depth
    double shrinkage = 0.1;   // boosting
    double cost = 1.0;        // svm: C
    double gamma = 0.1;       // svm: radial kernel exp(-gamma |u - v|^2)
    int hidden = 3;           // neural net: hidden units
    double decay = 0.0;       // neural net: weight decay

    bool operator==(const Hyperparameters&) const = default;
};

struct HyperparameterSpec {
    LearnerKind kind = LearnerKind::logistic;
    std::vector<Hyperparameters> grid;
};

HyperparameterSpec default_spec(LearnerKind kind, std::size_t n_features);
void validate(LearnerKind kind, const Hyperparameters& hp, std::size_t n_features);
void validate(const HyperparameterSpec& spec, std::size_t n_features);
std::string describe(LearnerKind kind, const Hyperparameters& hp);

// Lexicographic model complexity; smaller is simpler. Used by the tuning tie rule.
std::vector<double> complexity_key(LearnerKind kind, const Hyperparameters& hp);

struct LearnerOptions {
    LogisticOptions logistic;
    TreeOptions tree;
    ForestOptions forest;
    BoostingOptions boosting;
    SvmOptions svm;
    NeuralNetOptions neural_net;
};

struct FittedModel {
    LearnerKind kind = LearnerKind::logistic;
    Hyperparameters hp;
    std::uint64_t seed = 0;
    int fold_id = -1;
    std::size_t n_features = 0;
    std::variant<LogisticModel, TreeModel, ForestModel, BoostingModel, SvmModel, NeuralNetModel> params;
};

// Deterministic in (data, hp, seed). Throws FitError for single-class data or
// solver failure; ValidationError for invalid hyperparameters.
FittedModel fit(LearnerKind kind, const Dataset& data, const Hyperparameters& hp, std::uint64_t seed,
                const LearnerOptions& options = {});

// P(Y = 1 | x) on raw (unstandardized) rows; the model applies its own
// standardization. The SVM has no calibrated probability and returns its hard
// 0/1 decision instead.
Eigen::VectorXd predict_proba(const FittedModel& model, const Eigen::MatrixXd& X);

// Class labels: probability >= 0.5, or SVM decision value >= 0, is class 1.
std::vector<int> predict_class(const FittedModel& model, const Eigen::MatrixXd& X);

} // namespace mtrack
