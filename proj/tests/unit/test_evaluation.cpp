#include "mtrack/error.hpp"
#include "mtrack/evaluation.hpp"
#include "mtrack/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace mtrack;

namespace {

std::vector<int> alternating(std::size_t n) {
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % 2);
    return y;
}

// y = 1 iff x1 > 0; x2 noise; x3 constant.
Dataset threshold_data(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    d.X.resize(static_cast<Eigen::Index>(n), 3);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        d.X(r, 0) = rng.normal();
        d.X(r, 1) = rng.normal();
        d.X(r, 2) = 1.0;
        d.y.push_back(d.X(r, 0) > 0);
    }
    d.feature_names = {"x1", "x2", "x3"};
    d.binary_features = {false, false, false};
    return d;
}

Dataset noise_data(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    auto d = threshold_data(n, seed);
    for (auto& y : d.y) y = rng.bernoulli(0.5);
    return d;
}

HyperparameterSpec tree_spec() { return default_spec(LearnerKind::tree, 3); }

} // namespace

TEST(CvPlan, BalancedFolds) {
    const auto y = alternating(100);
    const auto plan = make_cv_plan(y, 10, 5, 0.75, 1);
    ASSERT_EQ(plan.fold_of.size(), 100u);
    for (int k = 0; k < 10; ++k) {
        const auto v = plan.validation_rows(k);
        ASSERT_EQ(v.size(), 10u) << k;
        EXPECT_EQ(std::count_if(v.begin(), v.end(), [&](std::size_t i) { return y[i] == 1; }), 5) << k;
        EXPECT_EQ(plan.train_rows(k).size(), 90u);
    }
}

TEST(CvPlan, UnevenSizesDifferByAtMostOne) {
    for (std::size_t n : {101u, 117u, 250u}) {
        std::vector<int> y(n);
        Rng rng(n);
        for (auto& v : y) v = rng.bernoulli(0.3);
        y[0] = 0;
        for (int i = 1; i <= 10; ++i) y[static_cast<std::size_t>(i)] = 1;
        const auto plan = make_cv_plan(y, 10, 5, 0.75, 2);
        std::set<std::size_t> seen;
        std::size_t lo = n, hi = 0;
        for (int k = 0; k < 10; ++k) {
            const auto v = plan.validation_rows(k);
            lo = std::min(lo, v.size());
            hi = std::max(hi, v.size());
            seen.insert(v.begin(), v.end());
        }
        EXPECT_LE(hi - lo, 1u) << n;
        EXPECT_EQ(seen.size(), n);
    }
}

TEST(CvPlan, DeterministicPerSeed) {
    const auto y = alternating(60);
    EXPECT_EQ(make_cv_plan(y, 5, 5, 0.75, 3).fold_of, make_cv_plan(y, 5, 5, 0.75, 3).fold_of);
    EXPECT_NE(make_cv_plan(y, 5, 5, 0.75, 3).fold_of, make_cv_plan(y, 5, 5, 0.75, 4).fold_of);
}

TEST(CvPlan, RejectsTooFewRows) {
    EXPECT_THROW(make_cv_plan(alternating(19), 10), ValidationError);
    std::vector<int> y(50, 0);
    for (int i = 0; i < 9; ++i) y[static_cast<std::size_t>(i)] = 1;
    EXPECT_THROW(make_cv_plan(y, 10), ValidationError);
}

TEST(InnerSplit, StratifiedDisjointAndRepeatable) {
    const auto y = alternating(200);
    const auto plan = make_cv_plan(y, 10, 20, 0.75, 5);
    const auto rows = plan.train_rows(3);
    const std::set<std::size_t> allowed(rows.begin(), rows.end());
    for (int rep = 0; rep < 20; ++rep) {
        const auto s = inner_split(plan, rows, 3, rep);
        EXPECT_EQ(s.train.size() + s.test.size(), rows.size());
        EXPECT_NEAR(static_cast<double>(s.train.size()), 0.75 * rows.size(), 1.0);
        std::set<std::size_t> all(s.train.begin(), s.train.end());
        for (auto i : s.test) EXPECT_TRUE(all.insert(i).second);
        EXPECT_EQ(all, allowed);
        const auto ones = std::count_if(s.train.begin(), s.train.end(), [&](std::size_t i) { return y[i] == 1; });
        EXPECT_NEAR(static_cast<double>(ones), 0.75 * 90, 1.0);
        const auto again = inner_split(plan, rows, 3, rep);
        EXPECT_EQ(again.train, s.train);
        EXPECT_EQ(again.test, s.test);
    }
    EXPECT_NE(inner_split(plan, rows, 3, 0).train, inner_split(plan, rows, 3, 1).train);
}

TEST(Metrics, HandComputed) {
    const std::vector<int> labels = {1, 1, 0, 0};
    const auto m = confusion_metrics(std::vector<int>{1, 0, 0, 0}, labels);
    EXPECT_DOUBLE_EQ(m.accuracy, 0.75);
    EXPECT_DOUBLE_EQ(m.sensitivity, 0.5);
    EXPECT_DOUBLE_EQ(m.specificity, 1.0);
    const auto always = confusion_metrics(std::vector<int>{1, 1, 1, 1}, labels);
    EXPECT_DOUBLE_EQ(always.accuracy, 0.5);
    EXPECT_DOUBLE_EQ(always.sensitivity, 1.0);
    EXPECT_DOUBLE_EQ(always.specificity, 0.0);
}

TEST(Metrics, RelabelSwapsSensitivityAndSpecificity) {
    Rng rng(6);
    std::vector<int> p(300), y(300);
    for (std::size_t i = 0; i < 300; ++i) {
        y[i] = rng.bernoulli(0.4);
        p[i] = rng.bernoulli(0.7) ? y[i] : 1 - y[i];
    }
    const auto a = confusion_metrics(p, y, 1);
    const auto b = confusion_metrics(p, y, 0);
    EXPECT_EQ(a.accuracy, b.accuracy);
    EXPECT_EQ(a.sensitivity, b.specificity);
    EXPECT_EQ(a.specificity, b.sensitivity);
    const auto c = confusion(p, y);
    EXPECT_EQ(c.total(), 300u);
}

TEST(Metrics, AbsentClassAndBadInput) {
    const auto m = confusion_metrics(std::vector<int>{1, 0}, std::vector<int>{1, 1});
    EXPECT_TRUE(std::isnan(m.specificity));
    EXPECT_DOUBLE_EQ(m.sensitivity, 0.5);
    EXPECT_THROW(confusion_metrics(std::vector<int>{}, std::vector<int>{}), ValidationError);
    EXPECT_THROW(confusion_metrics(std::vector<int>{1}, std::vector<int>{1, 0}), ValidationError);
    EXPECT_THROW(confusion_metrics(std::vector<int>{2}, std::vector<int>{1}), ValidationError);
}

TEST(Tuning, SingleSettingReturned) {
    const auto d = threshold_data(100, 7);
    const auto plan = make_cv_plan(d.y, 5, 10, 0.75, 7);
    HyperparameterSpec spec{LearnerKind::tree, {}};
    Hyperparameters hp;
    hp.complexity = 0.123;
    spec.grid.push_back(hp);
    const auto r = tune_inner(LearnerKind::tree, spec, d, plan.train_rows(0), plan, 0);
    EXPECT_EQ(r.chosen, hp);
    EXPECT_EQ(r.chosen_index, 0u);
}

TEST(Tuning, NeverReadsValidationRows) {
    const auto d = noise_data(200, 8);
    const auto plan = make_cv_plan(d.y, 5, 20, 0.75, 8);
    const auto train = plan.train_rows(2);
    auto probed = d;
    for (auto i : plan.validation_rows(2)) {
        probed.X.row(static_cast<Eigen::Index>(i)).setConstant(1e6);
        probed.y[i] = 1 - probed.y[i];
    }
    const auto a = tune_inner(LearnerKind::tree, tree_spec(), d, train, plan, 2);
    const auto b = tune_inner(LearnerKind::tree, tree_spec(), probed, train, plan, 2);
    ASSERT_EQ(a.scores.size(), b.scores.size());
    for (std::size_t s = 0; s < a.scores.size(); ++s)
        EXPECT_EQ(a.scores[s].mean_accuracy, b.scores[s].mean_accuracy);
    EXPECT_EQ(a.chosen, b.chosen);
}

TEST(Tuning, OneStandardErrorRule) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto d = seed % 2 ? noise_data(150, seed) : threshold_data(150, seed);
        const auto plan = make_cv_plan(d.y, 5, 20, 0.75, seed);
        const auto r = tune_inner(LearnerKind::tree, tree_spec(), d, plan.train_rows(0), plan, 0);
        std::size_t best = 0;
        for (std::size_t s = 1; s < r.scores.size(); ++s)
            if (r.scores[s].mean_accuracy > r.scores[best].mean_accuracy) best = s;
        const double floor = r.scores[best].mean_accuracy - r.scores[best].standard_error;
        EXPECT_GE(r.scores[r.chosen_index].mean_accuracy, floor);
        // no simpler (larger cp) setting is also within one standard error
        for (const auto& s : r.scores)
            if (s.hp.complexity > r.chosen.complexity) EXPECT_LT(s.mean_accuracy, floor);
    }
}

TEST(NestedCv, ThresholdDataWithTree) {
    const auto d = threshold_data(300, 9);
    const auto plan = make_cv_plan(d.y, 10, 10, 0.75, 9);
    const auto cv = nested_cv(LearnerKind::tree, d, tree_spec(), plan);
    EXPECT_GE(cv.metrics.accuracy, 0.95);
    EXPECT_EQ(cv.pooled.total(), 300u);
    ASSERT_EQ(cv.oof_predictions.size(), 300u);
    std::vector<int> covered(300, 0);
    for (const auto& f : cv.folds) {
        EXPECT_EQ(f.validation.rows(), f.validation_rows.size());
        for (std::size_t i = 0; i < f.validation_rows.size(); ++i) {
            ++covered[f.validation_rows[i]];
            EXPECT_EQ(cv.oof_predictions[f.validation_rows[i]], f.predictions[i]);
        }
    }
    EXPECT_TRUE(std::all_of(covered.begin(), covered.end(), [](int c) { return c == 1; }));
}

TEST(NestedCv, WorkerCountDoesNotChangeResults) {
    const auto d = noise_data(120, 10);
    const auto plan = make_cv_plan(d.y, 5, 10, 0.75, 10);
    EvaluationOptions one, four;
    four.workers = 4;
    auto spec = default_spec(LearnerKind::random_forest, 3);
    for (auto& hp : spec.grid) hp.n_trees = 50;
    const auto a = nested_cv(LearnerKind::random_forest, d, spec, plan, one);
    const auto b = nested_cv(LearnerKind::random_forest, d, spec, plan, four);
    EXPECT_EQ(a.oof_predictions, b.oof_predictions);
    for (std::size_t k = 0; k < a.folds.size(); ++k) EXPECT_EQ(a.folds[k].chosen, b.folds[k].chosen);
}

TEST(NestedCv, BuilderSeesOnlyOuterTrainingRows) {
    const auto d = threshold_data(100, 11);
    const auto plan = make_cv_plan(d.y, 5, 5, 0.75, 11);
    std::vector<std::size_t> sizes;
    DesignBuilder builder = [&](std::span<const std::size_t> rows) {
        sizes.push_back(rows.size());
        return d;
    };
    nested_cv(LearnerKind::logistic, builder, default_spec(LearnerKind::logistic, 3), plan);
    ASSERT_EQ(sizes.size(), 5u);
    for (auto s : sizes) EXPECT_EQ(s, 80u);
}

TEST(NestedCv, FitFailureNamesFold) {
    auto d = threshold_data(100, 12);
    const auto plan = make_cv_plan(d.y, 5, 5, 0.75, 12);
    HyperparameterSpec spec{LearnerKind::svm, {}};
    Hyperparameters hp;
    spec.grid.push_back(hp);
    EvaluationOptions opts;
    opts.learner.svm.max_iter = 1;
    try {
        nested_cv(LearnerKind::svm, d, spec, plan, opts);
        FAIL() << "expected FitError";
    } catch (const FitError& e) {
        EXPECT_NE(std::string(e.what()).find("fold"), std::string::npos);
    }
}

TEST(Importance, ConstantAndUnusedFeatures) {
    const auto d = threshold_data(300, 13);
    Hyperparameters hp;
    const auto model = fit(LearnerKind::tree, d, hp, 1);
    const auto rep = permutation_importance(model, d, 50, 2);
    ASSERT_EQ(rep.features.size(), 3u);
    EXPECT_EQ(rep.n_perm, 50);
    EXPECT_EQ(rep.features[0].rank, 1);
    EXPECT_GT(rep.features[0].mean_drop, 0.3);
    EXPECT_GT(rep.features[0].sd_drop, 0.0);
    EXPECT_EQ(rep.features[2].mean_drop, 0.0);
    EXPECT_EQ(rep.features[2].sd_drop, 0.0);
    EXPECT_EQ(rep.features[2].rank, 3);
    if (!std::get<TreeModel>(model.params).tree.features_used(3)[1])
        EXPECT_EQ(rep.features[1].mean_drop, 0.0);
}

TEST(Importance, OutOfFoldAndDeterministic) {
    const auto d = threshold_data(200, 14);
    const auto plan = make_cv_plan(d.y, 5, 5, 0.75, 14);
    const auto cv = nested_cv(LearnerKind::logistic, d, default_spec(LearnerKind::logistic, 3), plan);
    const auto a = permutation_importance(cv, 40, 3, 1);
    const auto b = permutation_importance(cv, 40, 3, 3);
    EXPECT_EQ(a.baseline_accuracy, cv.metrics.accuracy);
    EXPECT_EQ(a.features[0].rank, 1);
    EXPECT_EQ(a.features[2].rank, 3);
    for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_EQ(a.features[j].mean_drop, b.features[j].mean_drop);
        EXPECT_EQ(a.features[j].sd_drop, b.features[j].sd_drop);
    }
}
