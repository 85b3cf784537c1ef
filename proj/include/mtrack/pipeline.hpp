#pragma once

#include "mtrack/analysis.hpp"
#include "mtrack/config.hpp"
#include "mtrack/evaluation.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace mtrack {

// Question tables for every configured threshold.
struct TableSet {
    std::vector<double> thresholds;
    std::vector<std::vector<QuestionTable>> tables; // [threshold][question]

    const QuestionTable* find(const std::string& question, double threshold_ms) const;
    std::vector<std::string> questions() const;
};

TableSet build_tables(const std::vector<MeasureRow>& measures, const std::vector<MetadataRow>& metadata,
                      const std::vector<double>& thresholds);

inline const std::string kReportHeader =
    "question,manipulation,personalization,model,threshold_hovers_ms,accuracy,sensitivity,specificity";
inline const std::string kImportanceHeader = "question,model,feature,mean_drop,sd_drop,rank";

struct Cell {
    std::string question;
    std::string manipulation;
    Personalization personalization = Personalization::none;
    FeatureSet features = FeatureSet::full;
    LearnerKind learner = LearnerKind::logistic;
    double threshold_ms = 0;

    std::string model_label() const; // e.g. full:logistic, rt_only:svm
    std::string id() const;
};

// question x threshold x personalization x feature set x learner.
std::vector<Cell> enumerate_cells(const RunConfig& config, const TableSet& tables);

struct CellOutcome {
    Cell cell;
    bool ok = false;
    std::string error;
    Metrics metrics;
    std::optional<CvResult> cv; // kept when requested
};

// All learners of one question share the outer plan.
CvPlan plan_for(const RunConfig& config, const QuestionTable& table);

CellOutcome run_cell(const RunConfig& config, const TableSet& tables, const Cell& cell, bool keep_cv = false);
// Cells run in parallel over config.workers; results keep the cell order.
std::vector<CellOutcome> run_cells(const RunConfig& config, const TableSet& tables, const std::vector<Cell>& cells,
                                   bool keep_cv = false);

std::string format_report_csv(const std::vector<CellOutcome>& outcomes);
// Per-fold detail: chosen setting and fold metrics.
std::string format_folds_csv(const std::vector<CellOutcome>& outcomes);
// Index of the highest-accuracy successful cell per question; ties keep the earlier cell.
std::vector<std::size_t> best_per_question(const std::vector<CellOutcome>& outcomes);
std::string format_best_csv(const std::vector<CellOutcome>& outcomes);

struct ImportanceResult {
    Cell cell;
    ImportanceReport report;
};

// Reruns the cell's nested cross-validation and permutes its out-of-fold data.
ImportanceResult cell_importance(const RunConfig& config, const TableSet& tables, const Cell& cell);
std::string format_importance_csv(const std::vector<ImportanceResult>& results);

} // namespace mtrack
