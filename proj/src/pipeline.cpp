#include "mtrack/pipeline.hpp"

#include "mtrack/csv.hpp"
#include "mtrack/error.hpp"
#include "mtrack/parallel.hpp"
#include "mtrack/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace mtrack {

const QuestionTable* TableSet::find(const std::string& question, double threshold_ms) const {
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
        if (thresholds[t] != threshold_ms) continue;
        for (const auto& table : tables[t])
            if (table.question_id == question) return &table;
    }
    return nullptr;
}

std::vector<std::string> TableSet::questions() const {
    std::vector<std::string> out;
    for (const auto& per : tables)
        for (const auto& t : per)
            if (std::find(out.begin(), out.end(), t.question_id) == out.end()) out.push_back(t.question_id);
    return out;
}

TableSet build_tables(const std::vector<MeasureRow>& measures, const std::vector<MetadataRow>& metadata,
                      const std::vector<double>& thresholds) {
    TableSet set;
    set.thresholds = thresholds;
    for (double thr : thresholds) set.tables.push_back(build_question_tables(measures, metadata, thr));
    return set;
}

std::string Cell::model_label() const { return std::string(to_string(features)) + ":" + std::string(to_string(learner)); }

std::string Cell::id() const {
    return question + "/" + std::string(to_string(personalization)) + "/" + model_label() + "/" +
           csv::format_double(threshold_ms);
}

std::vector<Cell> enumerate_cells(const RunConfig& config, const TableSet& tables) {
    std::vector<Cell> cells;
    std::vector<FeatureSet> feature_sets = {FeatureSet::full};
    if (config.response_time_only) feature_sets.push_back(FeatureSet::response_time_only);
    for (const auto& q : tables.questions())
        for (double thr : config.thresholds)
            for (auto p : config.personalization)
                for (auto f : feature_sets)
                    for (auto l : config.learners) cells.push_back({q, config.manipulation_for(q), p, f, l, thr});
    return cells;
}

CvPlan plan_for(const RunConfig& config, const QuestionTable& table) {
    return make_cv_plan(table.labels, config.outer_folds, config.inner_reps, config.train_frac,
                        derive_seed(config.seed, "plan", table.question_id));
}

namespace {

CvResult run_cv(const RunConfig& config, const QuestionTable& table, const Cell& cell) {
    const CvPlan plan = plan_for(config, table);
    const std::size_t p = design_feature_names(cell.features).size();
    const HyperparameterSpec spec = config.spec_for(cell.learner, p);
    EvaluationOptions options;
    options.learner = config.learner_options;
    options.workers = 1;
    const DesignBuilder design = design_builder(table, cell.personalization, config.leakage, cell.features);
    return nested_cv(cell.learner, design, spec, plan, options);
}

const QuestionTable& table_for(const TableSet& tables, const Cell& cell) {
    const QuestionTable* t = tables.find(cell.question, cell.threshold_ms);
    if (!t) throw ValidationError("no data for question " + cell.question);
    return *t;
}

} // namespace

CellOutcome run_cell(const RunConfig& config, const TableSet& tables, const Cell& cell, bool keep_cv) {
    CellOutcome out;
    out.cell = cell;
    try {
        CvResult cv = run_cv(config, table_for(tables, cell), cell);
        out.metrics = cv.metrics;
        out.ok = true;
        if (keep_cv) out.cv = std::move(cv);
    } catch (const Error& e) {
        out.error = e.what();
    }
    return out;
}

std::vector<CellOutcome> run_cells(const RunConfig& config, const TableSet& tables, const std::vector<Cell>& cells,
                                   bool keep_cv) {
    std::vector<CellOutcome> out(cells.size());
    parallel_for(cells.size(), config.workers,
                 [&](std::size_t i) { out[i] = run_cell(config, tables, cells[i], keep_cv); });
    return out;
}

std::string format_report_csv(const std::vector<CellOutcome>& outcomes) {
    std::string out = kReportHeader + "\n";
    for (const auto& o : outcomes) {
        if (!o.ok) continue;
        const auto& c = o.cell;
        out += csv::join({c.question, c.manipulation, std::string(to_string(c.personalization)), c.model_label(),
                          csv::format_double(c.threshold_ms), csv::format_double(o.metrics.accuracy),
                          csv::format_double(o.metrics.sensitivity), csv::format_double(o.metrics.specificity)});
        out += '\n';
    }
    return out;
}

std::string format_folds_csv(const std::vector<CellOutcome>& outcomes) {
    std::string out = "cell,fold,hyperparameters,n_validation,accuracy,sensitivity,specificity\n";
    for (const auto& o : outcomes) {
        if (!o.ok || !o.cv) continue;
        for (const auto& f : o.cv->folds) {
            out += csv::join({o.cell.id(), std::to_string(f.fold), describe(o.cell.learner, f.chosen),
                              std::to_string(f.validation_rows.size()), csv::format_double(f.metrics.accuracy),
                              csv::format_double(f.metrics.sensitivity), csv::format_double(f.metrics.specificity)});
            out += '\n';
        }
    }
    return out;
}

std::vector<std::size_t> best_per_question(const std::vector<CellOutcome>& outcomes) {
    std::vector<std::string> order;
    std::map<std::string, std::size_t> best;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        if (!o.ok || std::isnan(o.metrics.accuracy)) continue;
        auto it = best.find(o.cell.question);
        if (it == best.end()) {
            order.push_back(o.cell.question);
            best.emplace(o.cell.question, i);
        } else if (o.metrics.accuracy > outcomes[it->second].metrics.accuracy) {
            it->second = i;
        }
    }
    std::vector<std::size_t> out;
    for (const auto& q : order) out.push_back(best[q]);
    return out;
}

std::string format_best_csv(const std::vector<CellOutcome>& outcomes) {
    std::string out = kReportHeader + "\n";
    for (std::size_t i : best_per_question(outcomes)) {
        const auto& o = outcomes[i];
        const auto& c = o.cell;
        out += csv::join({c.question, c.manipulation, std::string(to_string(c.personalization)), c.model_label(),
                          csv::format_double(c.threshold_ms), csv::format_double(o.metrics.accuracy),
                          csv::format_double(o.metrics.sensitivity), csv::format_double(o.metrics.specificity)});
        out += '\n';
    }
    return out;
}

ImportanceResult cell_importance(const RunConfig& config, const TableSet& tables, const Cell& cell) {
    const QuestionTable& table = table_for(tables, cell);
    const CvResult cv = run_cv(config, table, cell);
    return {cell, permutation_importance(cv, config.importance_permutations,
                                         derive_seed(config.seed, "importance", cell.question), config.workers)};
}

std::string format_importance_csv(const std::vector<ImportanceResult>& results) {
    std::string out = kImportanceHeader + "\n";
    for (const auto& r : results)
        for (const auto& f : r.report.features) {
            out += csv::join({r.cell.question, r.cell.model_label(), f.feature, csv::format_double(f.mean_drop),
                              csv::format_double(f.sd_drop), std::to_string(f.rank)});
            out += '\n';
        }
    return out;
}

} // namespace mtrack
