#pragma once

#include "mtrack/features.hpp"
#include "mtrack/ols.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mtrack {

// Measures of one question aligned to the analysis rows (one row per
// respondent). Missing records are NaN rows with answer position 0.
struct QuestionBlock {
    std::string question_id;
    int n_options = 0;
    std::vector<int> answer_positions; // 1-based, 0 = missing
    Eigen::MatrixXd values;            // rows x kMeasureCount

    Eigen::Index rows() const { return values.rows(); }
};

// The R baseline questions for the same rows as the target block.
struct BaselinePanel {
    std::vector<QuestionBlock> questions;
};

struct CorrectionData {
    QuestionBlock target;
    BaselinePanel panel;
};

enum class CorrectionMode { baseline, baseline_position };

// Per-question position regression: one fit per measure.
struct PositionCorrection {
    std::string question_id;
    int n_options = 0;
    std::vector<OlsFit> fits;
};

struct CorrectionModel {
    CorrectionMode mode = CorrectionMode::baseline;
    std::vector<std::size_t> train_index;
    std::string target_id;
    std::vector<std::string> baseline_ids;

    // baseline: per measure, target on intercept + one slope per baseline question.
    Eigen::MatrixXd imputation_means; // baselines x measures, from train_index
    std::vector<OlsFit> baseline_fits;

    // baseline_position: position fits for the target and each baseline, then
    // per measure the target residual on the mean baseline residual.
    PositionCorrection target_position;
    std::vector<PositionCorrection> baseline_positions;
    Eigen::VectorXd mean_residual_imputation; // per measure
    std::vector<OlsFit> person_fits;

    std::vector<std::string> diagnostics;
};

CorrectionModel fit_baseline_correction(const QuestionBlock& target, const BaselinePanel& panel,
                                        std::span<const std::size_t> train_index);

// Residuals (|index| x measures) for every requested row, in or out of train_index.
Eigen::MatrixXd apply_baseline_correction(const CorrectionModel& model, const QuestionBlock& target,
                                          const BaselinePanel& panel, std::span<const std::size_t> index);

// Dummy coding with the last option as reference. Rows with a missing answer
// or missing measures are skipped during fitting.
PositionCorrection fit_position_correction(const QuestionBlock& block, std::span<const std::size_t> train_index,
                                           std::vector<std::string>& diagnostics);

// NaN for rows that cannot be corrected (missing position or measures).
Eigen::MatrixXd position_residuals(const PositionCorrection& correction, const QuestionBlock& block,
                                   std::span<const std::size_t> index);

CorrectionModel fit_two_step(const CorrectionData& data, std::span<const std::size_t> train_index);
Eigen::MatrixXd apply_two_step(const CorrectionModel& model, const CorrectionData& data,
                               std::span<const std::size_t> index);
Eigen::MatrixXd fit_and_apply_two_step(const CorrectionData& data, std::span<const std::size_t> train_index,
                                       std::span<const std::size_t> index);

CorrectionModel fit_correction(CorrectionMode mode, const CorrectionData& data,
                               std::span<const std::size_t> train_index);
Eigen::MatrixXd apply_correction(const CorrectionModel& model, const CorrectionData& data,
                                 std::span<const std::size_t> index);

// measure,term,coefficient
std::string write_coefficients_csv(const CorrectionModel& model);

std::vector<std::size_t> all_rows(std::size_t n);

} // namespace mtrack
