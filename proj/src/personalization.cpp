#include "mtrack/personalization.hpp"

#include "mtrack/csv.hpp"
#include "mtrack/error.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace mtrack {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_rows(const QuestionBlock& block, Eigen::Index rows, std::span<const std::size_t> index) {
    if (block.values.rows() != rows)
        throw ValidationError("question " + block.question_id + " is not aligned with the target rows");
    if (block.values.cols() != static_cast<Eigen::Index>(kMeasureCount))
        throw ValidationError("question " + block.question_id + " does not carry all measures");
    for (auto i : index)
        if (static_cast<Eigen::Index>(i) >= rows) throw ValidationError("row index out of range");
}

void check_target_complete(const QuestionBlock& target, std::span<const std::size_t> index) {
    for (auto i : index)
        for (Eigen::Index j = 0; j < target.values.cols(); ++j)
            if (!std::isfinite(target.values(static_cast<Eigen::Index>(i), j)))
                throw ValidationError("target question " + target.question_id + " has missing measures");
}

std::string measure_name(std::size_t j) { return std::string(kMeasureNames[j]); }

void check_panel_matches(const CorrectionModel& model, const BaselinePanel& panel) {
    if (panel.questions.size() != model.baseline_ids.size())
        throw ValidationError("baseline panel does not match the fitted correction");
    for (std::size_t r = 0; r < panel.questions.size(); ++r)
        if (panel.questions[r].question_id != model.baseline_ids[r])
            throw ValidationError("baseline question " + model.baseline_ids[r] + " missing at apply time");
}

} // namespace

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

CorrectionModel fit_baseline_correction(const QuestionBlock& target, const BaselinePanel& panel,
                                        std::span<const std::size_t> train_index) {
    const Eigen::Index n = target.rows();
    const std::size_t R = panel.questions.size();
    check_rows(target, n, train_index);
    check_target_complete(target, train_index);
    for (const auto& q : panel.questions) check_rows(q, n, train_index);

    CorrectionModel model;
    model.mode = CorrectionMode::baseline;
    model.train_index.assign(train_index.begin(), train_index.end());
    model.target_id = target.question_id;
    for (const auto& q : panel.questions) model.baseline_ids.push_back(q.question_id);

    const auto m = static_cast<Eigen::Index>(train_index.size());
    const auto measures = static_cast<Eigen::Index>(kMeasureCount);
    model.imputation_means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(R), measures);
    std::size_t imputed = 0;
    for (std::size_t r = 0; r < R; ++r) {
        for (Eigen::Index j = 0; j < measures; ++j) {
            double sum = 0;
            std::size_t count = 0;
            for (auto i : train_index) {
                const double v = panel.questions[r].values(static_cast<Eigen::Index>(i), j);
                if (std::isfinite(v)) {
                    sum += v;
                    ++count;
                } else if (j == 0) {
                    ++imputed;
                }
            }
            model.imputation_means(static_cast<Eigen::Index>(r), j) = count ? sum / static_cast<double>(count) : 0.0;
        }
    }
    if (imputed)
        model.diagnostics.push_back("imputed " + std::to_string(imputed) +
                                    " missing baseline records with training column means");

    std::vector<std::string> names;
    for (const auto& id : model.baseline_ids) names.push_back("baseline:" + id);

    for (Eigen::Index j = 0; j < measures; ++j) {
        Eigen::MatrixXd X(m, static_cast<Eigen::Index>(R));
        Eigen::VectorXd y(m);
        for (Eigen::Index k = 0; k < m; ++k) {
            const auto i = static_cast<Eigen::Index>(train_index[static_cast<std::size_t>(k)]);
            y[k] = target.values(i, j);
            for (std::size_t r = 0; r < R; ++r) {
                const double v = panel.questions[r].values(i, j);
                X(k, static_cast<Eigen::Index>(r)) =
                    std::isfinite(v) ? v : model.imputation_means(static_cast<Eigen::Index>(r), j);
            }
        }
        model.baseline_fits.push_back(
            fit_ols(X, y, names, model.diagnostics, "baseline correction of " + measure_name(static_cast<std::size_t>(j))));
    }
    return model;
}

Eigen::MatrixXd apply_baseline_correction(const CorrectionModel& model, const QuestionBlock& target,
                                          const BaselinePanel& panel, std::span<const std::size_t> index) {
    if (model.mode != CorrectionMode::baseline || model.baseline_fits.size() != kMeasureCount)
        throw ValidationError("correction model is not a fitted baseline correction");
    const Eigen::Index n = target.rows();
    check_rows(target, n, index);
    check_target_complete(target, index);
    check_panel_matches(model, panel);
    for (const auto& q : panel.questions) check_rows(q, n, index);

    const std::size_t R = panel.questions.size();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(index.size()), static_cast<Eigen::Index>(kMeasureCount));
    Eigen::RowVectorXd regressors(static_cast<Eigen::Index>(R));
    for (std::size_t k = 0; k < index.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(index[k]);
        for (std::size_t j = 0; j < kMeasureCount; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            for (std::size_t r = 0; r < R; ++r) {
                const double v = panel.questions[r].values(i, jj);
                regressors[static_cast<Eigen::Index>(r)] =
                    std::isfinite(v) ? v : model.imputation_means(static_cast<Eigen::Index>(r), jj);
            }
            out(static_cast<Eigen::Index>(k), jj) = target.values(i, jj) - model.baseline_fits[j].fitted_row(regressors);
        }
    }
    return out;
}

namespace {

Eigen::RowVectorXd position_dummies(int position, int n_options) {
    Eigen::RowVectorXd d = Eigen::RowVectorXd::Zero(std::max(0, n_options - 1));
    if (position >= 1 && position < n_options) d[position - 1] = 1.0;
    return d;
}

bool row_usable(const QuestionBlock& block, Eigen::Index i) {
    if (block.answer_positions[static_cast<std::size_t>(i)] < 1) return false;
    for (Eigen::Index j = 0; j < block.values.cols(); ++j)
        if (!std::isfinite(block.values(i, j))) return false;
    return true;
}

} // namespace

PositionCorrection fit_position_correction(const QuestionBlock& block, std::span<const std::size_t> train_index,
                                           std::vector<std::string>& diagnostics) {
    check_rows(block, block.rows(), train_index);
    if (block.answer_positions.size() != static_cast<std::size_t>(block.rows()))
        throw ValidationError("question " + block.question_id + " lacks answer positions");
    if (block.n_options < 1) throw ValidationError("question " + block.question_id + " has no options");

    PositionCorrection pc;
    pc.question_id = block.question_id;
    pc.n_options = block.n_options;

    std::vector<Eigen::Index> rows;
    for (auto i : train_index)
        if (row_usable(block, static_cast<Eigen::Index>(i))) rows.push_back(static_cast<Eigen::Index>(i));

    const int dummies = block.n_options - 1;
    std::vector<std::string> names;
    for (int m = 1; m <= dummies; ++m) names.push_back("position:" + std::to_string(m));

    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), dummies);
    for (std::size_t k = 0; k < rows.size(); ++k)
        X.row(static_cast<Eigen::Index>(k)) =
            position_dummies(block.answer_positions[static_cast<std::size_t>(rows[k])], block.n_options);
    for (int m = 1; m <= dummies; ++m)
        if (rows.empty() || X.col(m - 1).maxCoeff() == 0.0)
            diagnostics.push_back(block.question_id + ": answer position " + std::to_string(m) +
                                  " has no occupants; its dummy is dropped");

    for (std::size_t j = 0; j < kMeasureCount; ++j) {
        Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t k = 0; k < rows.size(); ++k)
            y[static_cast<Eigen::Index>(k)] = block.values(rows[k], static_cast<Eigen::Index>(j));
        std::vector<std::string> local;
        pc.fits.push_back(fit_ols(X, y, names, local,
                                  "position correction of " + measure_name(j) + " in " + block.question_id));
        // Empty-level drops are already reported once per question above.
        for (auto& d : local)
            if (d.find("dropped constant regressor") == std::string::npos) diagnostics.push_back(std::move(d));
    }
    return pc;
}

Eigen::MatrixXd position_residuals(const PositionCorrection& correction, const QuestionBlock& block,
                                   std::span<const std::size_t> index) {
    check_rows(block, block.rows(), index);
    if (correction.question_id != block.question_id || correction.n_options != block.n_options)
        throw ValidationError("position correction does not match question " + block.question_id);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(index.size()), static_cast<Eigen::Index>(kMeasureCount));
    for (std::size_t k = 0; k < index.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(index[k]);
        if (!row_usable(block, i)) {
            out.row(static_cast<Eigen::Index>(k)).setConstant(kNaN);
            continue;
        }
        const auto d = position_dummies(block.answer_positions[static_cast<std::size_t>(i)], block.n_options);
        for (std::size_t j = 0; j < kMeasureCount; ++j)
            out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
                block.values(i, static_cast<Eigen::Index>(j)) - correction.fits[j].fitted_row(d);
    }
    return out;
}

namespace {

// Mean over available baseline residuals per row; NaN when none are available.
Eigen::MatrixXd mean_baseline_residual(const CorrectionModel& model, const BaselinePanel& panel,
                                       std::span<const std::size_t> index) {
    const auto rows = static_cast<Eigen::Index>(index.size());
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(kMeasureCount));
    Eigen::MatrixXd count = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(kMeasureCount));
    for (std::size_t r = 0; r < panel.questions.size(); ++r) {
        const Eigen::MatrixXd w = position_residuals(model.baseline_positions[r], panel.questions[r], index);
        for (Eigen::Index k = 0; k < rows; ++k)
            for (Eigen::Index j = 0; j < w.cols(); ++j)
                if (std::isfinite(w(k, j))) {
                    sum(k, j) += w(k, j);
                    count(k, j) += 1.0;
                }
    }
    Eigen::MatrixXd mean(rows, static_cast<Eigen::Index>(kMeasureCount));
    for (Eigen::Index k = 0; k < rows; ++k)
        for (Eigen::Index j = 0; j < mean.cols(); ++j)
            mean(k, j) = count(k, j) > 0 ? sum(k, j) / count(k, j) : kNaN;
    return mean;
}

} // namespace

CorrectionModel fit_two_step(const CorrectionData& data, std::span<const std::size_t> train_index) {
    const Eigen::Index n = data.target.rows();
    check_rows(data.target, n, train_index);
    check_target_complete(data.target, train_index);
    for (const auto& q : data.panel.questions) check_rows(q, n, train_index);

    CorrectionModel model;
    model.mode = CorrectionMode::baseline_position;
    model.train_index.assign(train_index.begin(), train_index.end());
    model.target_id = data.target.question_id;
    for (const auto& q : data.panel.questions) model.baseline_ids.push_back(q.question_id);

    model.target_position = fit_position_correction(data.target, train_index, model.diagnostics);
    for (const auto& q : data.panel.questions)
        model.baseline_positions.push_back(fit_position_correction(q, train_index, model.diagnostics));

    const Eigen::MatrixXd w_target = position_residuals(model.target_position, data.target, train_index);
    Eigen::MatrixXd w_bar = mean_baseline_residual(model, data.panel, train_index);

    const auto m = static_cast<Eigen::Index>(train_index.size());
    model.mean_residual_imputation = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kMeasureCount));
    std::size_t imputed = 0;
    for (Eigen::Index j = 0; j < w_bar.cols(); ++j) {
        double sum = 0;
        double count = 0;
        for (Eigen::Index k = 0; k < m; ++k)
            if (std::isfinite(w_bar(k, j))) {
                sum += w_bar(k, j);
                count += 1;
            }
        model.mean_residual_imputation[j] = count > 0 ? sum / count : 0.0;
        for (Eigen::Index k = 0; k < m; ++k)
            if (!std::isfinite(w_bar(k, j))) {
                w_bar(k, j) = model.mean_residual_imputation[j];
                if (j == 0) ++imputed;
            }
    }
    if (imputed)
        model.diagnostics.push_back("imputed mean baseline residual for " + std::to_string(imputed) +
                                    " respondents without usable baseline records");

    for (std::size_t j = 0; j < kMeasureCount; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        Eigen::MatrixXd X = w_bar.col(jj);
        Eigen::VectorXd y = w_target.col(jj);
        model.person_fits.push_back(
            fit_ols(X, y, {"mean_baseline_residual"}, model.diagnostics, "person correction of " + measure_name(j)));
    }
    return model;
}

Eigen::MatrixXd apply_two_step(const CorrectionModel& model, const CorrectionData& data,
                               std::span<const std::size_t> index) {
    if (model.mode != CorrectionMode::baseline_position || model.person_fits.size() != kMeasureCount)
        throw ValidationError("correction model is not a fitted two-step correction");
    const Eigen::Index n = data.target.rows();
    check_rows(data.target, n, index);
    check_target_complete(data.target, index);
    check_panel_matches(model, data.panel);
    for (const auto& q : data.panel.questions) check_rows(q, n, index);

    const Eigen::MatrixXd w_target = position_residuals(model.target_position, data.target, index);
    Eigen::MatrixXd w_bar = mean_baseline_residual(model, data.panel, index);
    Eigen::MatrixXd out(w_target.rows(), w_target.cols());
    for (Eigen::Index k = 0; k < out.rows(); ++k)
        for (Eigen::Index j = 0; j < out.cols(); ++j) {
            double wb = w_bar(k, j);
            if (!std::isfinite(wb)) wb = model.mean_residual_imputation[j];
            Eigen::RowVectorXd reg(1);
            reg[0] = wb;
            out(k, j) = w_target(k, j) - model.person_fits[static_cast<std::size_t>(j)].fitted_row(reg);
        }
    return out;
}

Eigen::MatrixXd fit_and_apply_two_step(const CorrectionData& data, std::span<const std::size_t> train_index,
                                       std::span<const std::size_t> index) {
    return apply_two_step(fit_two_step(data, train_index), data, index);
}

CorrectionModel fit_correction(CorrectionMode mode, const CorrectionData& data,
                               std::span<const std::size_t> train_index) {
    if (mode == CorrectionMode::baseline) return fit_baseline_correction(data.target, data.panel, train_index);
    return fit_two_step(data, train_index);
}

Eigen::MatrixXd apply_correction(const CorrectionModel& model, const CorrectionData& data,
                                 std::span<const std::size_t> index) {
    if (model.mode == CorrectionMode::baseline)
        return apply_baseline_correction(model, data.target, data.panel, index);
    return apply_two_step(model, data, index);
}

std::string write_coefficients_csv(const CorrectionModel& model) {
    std::ostringstream os;
    os << "measure,term,coefficient\n";
    auto dump = [&](const std::string& measure, const std::string& prefix, const OlsFit& fit) {
        for (std::size_t t = 0; t < fit.terms.size(); ++t)
            os << measure << ',' << prefix << fit.terms[t] << ','
               << (fit.retained[t] ? csv::format_double(fit.coefficients[static_cast<Eigen::Index>(t)]) : "NA") << '\n';
    };
    for (std::size_t j = 0; j < kMeasureCount; ++j) {
        const std::string name = measure_name(j);
        if (model.mode == CorrectionMode::baseline) {
            dump(name, "", model.baseline_fits[j]);
        } else {
            dump(name, model.target_position.question_id + ":", model.target_position.fits[j]);
            for (const auto& bp : model.baseline_positions) dump(name, bp.question_id + ":", bp.fits[j]);
            dump(name, "person:", model.person_fits[j]);
        }
    }
    return os.str();
}

} // namespace mtrack
