#include "mtrack/evaluation.hpp"

#include "mtrack/error.hpp"
#include "mtrack/parallel.hpp"
#include "mtrack/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace mtrack {

std::vector<std::size_t> CvPlan::train_rows(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] != fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> CvPlan::validation_rows(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] == fold) out.push_back(i);
    return out;
}

CvPlan make_cv_plan(std::span<const int> labels, int folds, int inner_reps, double train_frac, std::uint64_t seed) {
    if (folds < 2) throw ValidationError("cv plan: need at least 2 folds");
    if (inner_reps < 1) throw ValidationError("cv plan: inner_reps must be >= 1");
    if (!(train_frac > 0.0 && train_frac < 1.0)) throw ValidationError("cv plan: train_frac must lie in (0, 1)");
    const std::size_t n = labels.size();
    const auto k = static_cast<std::size_t>(folds);
    if (n < 2 * k) throw ValidationError("cv plan: " + std::to_string(n) + " rows is fewer than 2K");
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw ValidationError("cv plan: labels must be 0 or 1");
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    for (int c = 0; c < 2; ++c)
        if (by_class[static_cast<std::size_t>(c)].size() < k)
            throw ValidationError("cv plan: class " + std::to_string(c) + " has fewer than K members");

    CvPlan plan;
    plan.folds = folds;
    plan.inner_reps = inner_reps;
    plan.train_frac = train_frac;
    plan.seed = seed;
    plan.labels.assign(labels.begin(), labels.end());
    plan.fold_of.assign(n, 0);
    // Deal each shuffled class round-robin, continuing where the previous class stopped.
    std::size_t next = 0;
    for (int c = 0; c < 2; ++c) {
        auto& members = by_class[static_cast<std::size_t>(c)];
        Rng rng(derive_seed(seed, "outer_folds", c));
        rng.shuffle(std::span<std::size_t>(members));
        for (std::size_t idx : members) {
            plan.fold_of[idx] = static_cast<int>(next % k);
            ++next;
        }
    }
    return plan;
}

Split inner_split(const CvPlan& plan, std::span<const std::size_t> rows, int fold, int rep) {
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t r : rows) by_class[static_cast<std::size_t>(plan.labels.at(r))].push_back(r);
    Split split;
    for (int c = 0; c < 2; ++c) {
        auto& members = by_class[static_cast<std::size_t>(c)];
        Rng rng(derive_seed(plan.seed, "inner_split", fold, rep, c));
        rng.shuffle(std::span<std::size_t>(members));
        auto take = static_cast<std::size_t>(std::floor(plan.train_frac * static_cast<double>(members.size()) + 0.5));
        if (members.size() >= 2) take = std::clamp<std::size_t>(take, 1, members.size() - 1);
        split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
        split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

Confusion confusion(std::span<const int> predictions, std::span<const int> labels, int positive_class) {
    if (predictions.size() != labels.size()) throw ValidationError("confusion: length mismatch");
    Confusion c;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if ((labels[i] != 0 && labels[i] != 1) || (predictions[i] != 0 && predictions[i] != 1))
            throw ValidationError("confusion: values must be 0 or 1");
        const bool actual = labels[i] == positive_class;
        const bool predicted = predictions[i] == positive_class;
        if (actual && predicted) ++c.tp;
        else if (actual) ++c.fn;
        else if (predicted) ++c.fp;
        else ++c.tn;
    }
    return c;
}

Metrics metrics_from(const Confusion& c, int positive_class) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    Metrics m;
    m.positive_class = positive_class;
    m.accuracy = c.total() ? static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total()) : nan;
    m.sensitivity = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : nan;
    m.specificity = c.tn + c.fp ? static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp) : nan;
    return m;
}

Metrics confusion_metrics(std::span<const int> predictions, std::span<const int> labels, int positive_class) {
    if (labels.empty()) throw ValidationError("confusion_metrics: empty input");
    return metrics_from(confusion(predictions, labels, positive_class), positive_class);
}

namespace {

double accuracy_of(std::span<const int> predicted, std::span<const int> labels) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i];
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::vector<int> classes_from(const Eigen::VectorXd& p) {
    std::vector<int> out(static_cast<std::size_t>(p.size()));
    for (Eigen::Index i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = p[i] >= 0.5 ? 1 : 0;
    return out;
}

bool key_less(const std::vector<double>& a, const std::vector<double>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

} // namespace

TuningResult tune_inner(LearnerKind kind, const HyperparameterSpec& spec, const Dataset& data,
                        std::span<const std::size_t> train_rows, const CvPlan& plan, int fold,
                        const EvaluationOptions& options) {
    validate(spec, data.cols());
    if (spec.kind != kind) throw ValidationError("tune_inner: grid is for a different learner");
    const std::size_t settings = spec.grid.size();
    TuningResult result;
    if (settings == 1) {
        result.chosen = spec.grid.front();
        result.scores.push_back({spec.grid.front(), std::numeric_limits<double>::quiet_NaN(),
                                 std::numeric_limits<double>::quiet_NaN(), 0, false});
        return result;
    }

    // Boosting settings that differ only in tree count share one fit.
    std::vector<std::size_t> leader(settings);
    std::iota(leader.begin(), leader.end(), std::size_t{0});
    std::vector<Hyperparameters> fit_hp = spec.grid;
    if (kind == LearnerKind::boosting) {
        std::map<std::pair<int, double>, std::size_t> first;
        for (std::size_t s = 0; s < settings; ++s) {
            const auto key = std::make_pair(spec.grid[s].depth, spec.grid[s].shrinkage);
            auto [it, inserted] = first.emplace(key, s);
            leader[s] = it->second;
            fit_hp[it->second].n_trees = std::max(fit_hp[it->second].n_trees, spec.grid[s].n_trees);
        }
    }

    const auto reps = static_cast<std::size_t>(plan.inner_reps);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::vector<double>> acc(reps, std::vector<double>(settings, nan));
    parallel_for(reps, options.workers, [&](std::size_t r) {
        const Split split = inner_split(plan, train_rows, fold, static_cast<int>(r));
        const Dataset train = data.subset(split.train);
        const Dataset test = data.subset(split.test);
        for (std::size_t s = 0; s < settings; ++s) {
            if (leader[s] != s) continue;
            try {
                const auto seed = derive_seed(plan.seed, "inner_fit", fold, r, s);
                const FittedModel m = fit(kind, train, fit_hp[s], seed, options.learner);
                if (kind == LearnerKind::boosting) {
                    const auto& bm = std::get<BoostingModel>(m.params);
                    for (std::size_t t = 0; t < settings; ++t)
                        if (leader[t] == s) {
                            const auto stages = static_cast<std::size_t>(spec.grid[t].n_trees);
                            acc[r][t] = accuracy_of(classes_from(boosting_proba(bm, test.X, stages)), test.y);
                        }
                } else {
                    acc[r][s] = accuracy_of(predict_class(m, test.X), test.y);
                }
            } catch (const Error&) {
                // counted as a failure below
            }
        }
    });

    result.scores.resize(settings);
    for (std::size_t s = 0; s < settings; ++s) {
        SettingScore& sc = result.scores[s];
        sc.hp = spec.grid[s];
        double sum = 0, sq = 0;
        std::size_t ok = 0;
        for (std::size_t r = 0; r < reps; ++r) {
            if (std::isnan(acc[r][s])) {
                ++sc.failures;
                continue;
            }
            sum += acc[r][s];
            ++ok;
        }
        sc.mean_accuracy = ok ? sum / static_cast<double>(ok) : nan;
        for (std::size_t r = 0; r < reps; ++r)
            if (!std::isnan(acc[r][s])) sq += (acc[r][s] - sc.mean_accuracy) * (acc[r][s] - sc.mean_accuracy);
        sc.standard_error = ok > 1 ? std::sqrt(sq / static_cast<double>(ok - 1) / static_cast<double>(ok)) : 0.0;
        sc.disqualified = ok == 0 || static_cast<double>(sc.failures) > options.max_failure_rate * static_cast<double>(reps);
        if (sc.disqualified)
            result.diagnostics.push_back(describe(kind, sc.hp) + ": failed on " + std::to_string(sc.failures) + " of " +
                                         std::to_string(reps) + " inner splits, disqualified");
    }

    std::size_t best = settings;
    for (std::size_t s = 0; s < settings; ++s)
        if (!result.scores[s].disqualified &&
            (best == settings || result.scores[s].mean_accuracy > result.scores[best].mean_accuracy))
            best = s;
    if (best == settings)
        throw FitError(std::string(to_string(kind)) + ": every grid setting was disqualified in fold " +
                       std::to_string(fold));
    const double floor = result.scores[best].mean_accuracy - result.scores[best].standard_error;
    std::size_t chosen = best;
    for (std::size_t s = 0; s < settings; ++s) {
        const auto& sc = result.scores[s];
        if (sc.disqualified || sc.mean_accuracy < floor) continue;
        if (key_less(complexity_key(kind, sc.hp), complexity_key(kind, result.scores[chosen].hp))) chosen = s;
    }
    result.chosen_index = chosen;
    result.chosen = spec.grid[chosen];
    return result;
}

CvResult nested_cv(LearnerKind kind, const DesignBuilder& design, const HyperparameterSpec& spec,
                   const CvPlan& plan, const EvaluationOptions& options) {
    CvResult result;
    result.kind = kind;
    result.oof_predictions.assign(plan.rows(), -1);
    for (int k = 0; k < plan.folds; ++k) {
        const auto train = plan.train_rows(k);
        const auto val = plan.validation_rows(k);
        FoldResult fr;
        fr.fold = k;
        fr.validation_rows = val;
        try {
            const Dataset full = design(train);
            if (full.rows() != plan.rows()) throw ValidationError("design has a different row count than the plan");
            for (std::size_t i = 0; i < full.rows(); ++i)
                if (full.y[i] != plan.labels[i]) throw ValidationError("design labels differ from the plan");
            TuningResult tuned = tune_inner(kind, spec, full, train, plan, k, options);
            fr.chosen = tuned.chosen;
            fr.scores = std::move(tuned.scores);
            fr.diagnostics = std::move(tuned.diagnostics);
            fr.model = fit(kind, full.subset(train), fr.chosen, derive_seed(plan.seed, "outer_fit", k), options.learner);
            fr.model.fold_id = k;
            fr.validation = full.subset(val);
        } catch (const ValidationError&) {
            throw;
        } catch (const Error& e) {
            throw FitError("fold " + std::to_string(k) + ": " + e.what());
        }
        fr.predictions = predict_class(fr.model, fr.validation.X);
        fr.metrics = metrics_from(confusion(fr.predictions, fr.validation.y));
        for (std::size_t i = 0; i < val.size(); ++i) result.oof_predictions[val[i]] = fr.predictions[i];
        result.folds.push_back(std::move(fr));
    }
    result.pooled = confusion(result.oof_predictions, plan.labels);
    result.metrics = metrics_from(result.pooled);
    return result;
}

CvResult nested_cv(LearnerKind kind, const Dataset& data, const HyperparameterSpec& spec, const CvPlan& plan,
                   const EvaluationOptions& options) {
    return nested_cv(kind, [&](std::span<const std::size_t>) { return data; }, spec, plan, options);
}

namespace {

void finish_report(ImportanceReport& report, const std::vector<std::vector<double>>& drops,
                   const std::vector<bool>& constant) {
    const std::size_t p = drops.size();
    for (std::size_t j = 0; j < p; ++j) {
        auto& f = report.features[j];
        const auto& d = drops[j];
        const double n = static_cast<double>(d.size());
        f.mean_drop = std::accumulate(d.begin(), d.end(), 0.0) / n;
        double sq = 0;
        for (double v : d) sq += (v - f.mean_drop) * (v - f.mean_drop);
        f.sd_drop = d.size() > 1 ? std::sqrt(sq / (n - 1)) : 0.0;
    }
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (constant[a] != constant[b]) return !constant[a];
        if (constant[a]) return false;
        return report.features[a].mean_drop > report.features[b].mean_drop;
    });
    for (std::size_t r = 0; r < p; ++r) report.features[order[r]].rank = static_cast<int>(r + 1);
}

bool column_constant(const Eigen::MatrixXd& X, Eigen::Index j) {
    return X.rows() == 0 || X.col(j).maxCoeff() == X.col(j).minCoeff();
}

} // namespace

ImportanceReport permutation_importance(const FittedModel& model, const Dataset& data, int n_perm,
                                        std::uint64_t seed, int workers) {
    if (n_perm < 1) throw ValidationError("importance: n_perm must be >= 1");
    if (data.rows() == 0) throw ValidationError("importance: empty data");
    const std::size_t p = data.cols();
    ImportanceReport report;
    report.n_perm = n_perm;
    report.baseline_accuracy = accuracy_of(predict_class(model, data.X), data.y);
    report.features.resize(p);
    std::vector<bool> constant(p);
    for (std::size_t j = 0; j < p; ++j) {
        report.features[j].feature = j < data.feature_names.size() ? data.feature_names[j] : "x" + std::to_string(j);
        constant[j] = column_constant(data.X, static_cast<Eigen::Index>(j));
    }
    const auto reps = static_cast<std::size_t>(n_perm);
    std::vector<std::vector<double>> drops(p, std::vector<double>(reps));
    parallel_for(p * reps, workers, [&](std::size_t item) {
        const std::size_t j = item / reps, r = item % reps;
        Eigen::MatrixXd X = data.X;
        const auto col = static_cast<Eigen::Index>(j);
        std::vector<double> values(X.col(col).data(), X.col(col).data() + X.rows());
        Rng rng(derive_seed(seed, "permute", j, r));
        rng.shuffle(std::span<double>(values));
        for (Eigen::Index i = 0; i < X.rows(); ++i) X(i, col) = values[static_cast<std::size_t>(i)];
        drops[j][r] = report.baseline_accuracy - accuracy_of(predict_class(model, X), data.y);
    });
    finish_report(report, drops, constant);
    return report;
}

ImportanceReport permutation_importance(const CvResult& cv, int n_perm, std::uint64_t seed, int workers) {
    if (n_perm < 1) throw ValidationError("importance: n_perm must be >= 1");
    if (cv.folds.empty()) throw ValidationError("importance: no folds");
    const Dataset& first = cv.folds.front().validation;
    const std::size_t p = first.cols();
    std::size_t total = 0, hits = 0;
    for (const auto& f : cv.folds) {
        total += f.validation.rows();
        for (std::size_t i = 0; i < f.predictions.size(); ++i) hits += f.predictions[i] == f.validation.y[i];
    }
    ImportanceReport report;
    report.n_perm = n_perm;
    report.baseline_accuracy = static_cast<double>(hits) / static_cast<double>(total);
    report.features.resize(p);
    std::vector<bool> constant(p, true);
    for (std::size_t j = 0; j < p; ++j) {
        report.features[j].feature = j < first.feature_names.size() ? first.feature_names[j] : "x" + std::to_string(j);
        const auto col = static_cast<Eigen::Index>(j);
        bool seen = false;
        double value = 0;
        for (const auto& f : cv.folds) {
            if (f.validation.rows() == 0) continue;
            if (!column_constant(f.validation.X, col) || (seen && f.validation.X(0, col) != value)) {
                constant[j] = false;
                break;
            }
            seen = true;
            value = f.validation.X(0, col);
        }
    }
    const auto reps = static_cast<std::size_t>(n_perm);
    std::vector<std::vector<double>> drops(p, std::vector<double>(reps));
    parallel_for(p * reps, workers, [&](std::size_t item) {
        const std::size_t j = item / reps, r = item % reps;
        const auto col = static_cast<Eigen::Index>(j);
        std::size_t correct = 0;
        for (const auto& f : cv.folds) {
            Eigen::MatrixXd X = f.validation.X;
            std::vector<double> values(X.col(col).data(), X.col(col).data() + X.rows());
            Rng rng(derive_seed(seed, "permute", j, r, f.fold));
            rng.shuffle(std::span<double>(values));
            for (Eigen::Index i = 0; i < X.rows(); ++i) X(i, col) = values[static_cast<std::size_t>(i)];
            const auto pred = predict_class(f.model, X);
            for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == f.validation.y[i];
        }
        drops[j][r] = report.baseline_accuracy - static_cast<double>(correct) / static_cast<double>(total);
    });
    finish_report(report, drops, constant);
    return report;
}

} // namespace mtrack
