#pragma once

#include "mtrack/dataset.hpp"
#include "mtrack/learners.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mtrack {

// Outer K-fold partition stratified by label, plus the parameters of the
// inner subsampling loop. Everything is reproducible from `seed`.
struct CvPlan {
    int folds = 10;
    int inner_reps = 500;
    double train_frac = 0.75;
    std::uint64_t seed = 0;
    std::vector<int> labels;
    std::vector<int> fold_of; // per row, in [0, folds)

    std::size_t rows() const { return labels.size(); }
    std::vector<std::size_t> train_rows(int fold) const;
    std::vector<std::size_t> validation_rows(int fold) const;
};

// Throws ValidationError when n < 2K or a class has fewer than K members.
CvPlan make_cv_plan(std::span<const int> labels, int folds = 10, int inner_reps = 500, double train_frac = 0.75,
                    std::uint64_t seed = 0);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Label-stratified subsample of `rows` (the outer-training rows of `fold`);
// rep r of fold k is the same split on every call.
Split inner_split(const CvPlan& plan, std::span<const std::size_t> rows, int fold, int rep);

struct Confusion {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
    std::size_t total() const { return tp + tn + fp + fn; }
};

// Sensitivity and specificity are NaN when the corresponding class is absent.
struct Metrics {
    double accuracy = 0;
    double sensitivity = 0;
    double specificity = 0;
    int positive_class = 1;
};

Confusion confusion(std::span<const int> predictions, std::span<const int> labels, int positive_class = 1);
Metrics metrics_from(const Confusion& c, int positive_class = 1);
// Throws ValidationError on empty or unequal inputs, or on non-binary labels.
Metrics confusion_metrics(std::span<const int> predictions, std::span<const int> labels, int positive_class = 1);

struct EvaluationOptions {
    LearnerOptions learner;
    int workers = 1;
    double max_failure_rate = 0.10; // inner fits a setting may fail before it is disqualified
};

struct SettingScore {
    Hyperparameters hp;
    double mean_accuracy = 0;
    double standard_error = 0;
    std::size_t failures = 0;
    bool disqualified = false;
};

struct TuningResult {
    Hyperparameters chosen;
    std::size_t chosen_index = 0;
    std::vector<SettingScore> scores;
    std::vector<std::string> diagnostics;
};

// Mean accuracy of every grid setting over the plan's inner splits of
// `train_rows`, then the least complex setting within one standard error of
// the best. `data` rows outside `train_rows` are never read.
TuningResult tune_inner(LearnerKind kind, const HyperparameterSpec& spec, const Dataset& data,
                        std::span<const std::size_t> train_rows, const CvPlan& plan, int fold,
                        const EvaluationOptions& options = {});

// Builds the design over all rows with any data-dependent preprocessing fitted
// on `train_rows` only.
using DesignBuilder = std::function<Dataset(std::span<const std::size_t> train_rows)>;

struct FoldResult {
    int fold = 0;
    Hyperparameters chosen;
    std::vector<SettingScore> scores;
    std::vector<std::size_t> validation_rows;
    Dataset validation; // the fold's design restricted to validation rows
    FittedModel model;
    std::vector<int> predictions;
    Metrics metrics;
    std::vector<std::string> diagnostics;
};

struct CvResult {
    LearnerKind kind = LearnerKind::logistic;
    Confusion pooled;
    Metrics metrics;
    std::vector<FoldResult> folds;
    std::vector<int> oof_predictions; // per row of the plan
};

// Fit errors are rethrown as FitError naming the fold.
CvResult nested_cv(LearnerKind kind, const DesignBuilder& design, const HyperparameterSpec& spec,
                   const CvPlan& plan, const EvaluationOptions& options = {});
CvResult nested_cv(LearnerKind kind, const Dataset& data, const HyperparameterSpec& spec, const CvPlan& plan,
                   const EvaluationOptions& options = {});

struct FeatureImportance {
    std::string feature;
    double mean_drop = 0;
    double sd_drop = 0;
    int rank = 0; // 1 = largest mean drop; constant columns rank last
};

struct ImportanceReport {
    double baseline_accuracy = 0;
    int n_perm = 0;
    std::vector<FeatureImportance> features; // in column order
};

// Permutes one column at a time n_perm times and reports the accuracy drop.
ImportanceReport permutation_importance(const FittedModel& model, const Dataset& data, int n_perm = 500,
                                        std::uint64_t seed = 0, int workers = 1);

// Same on held-out data: each fold's model scores its own validation rows, and
// accuracy is pooled over folds per permutation.
ImportanceReport permutation_importance(const CvResult& cv, int n_perm = 500, std::uint64_t seed = 0,
                                        int workers = 1);

} // namespace mtrack
