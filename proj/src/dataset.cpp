#include "mtrack/dataset.hpp"

#include "mtrack/error.hpp"

#include <cmath>

namespace mtrack {

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& X, std::span<const std::size_t> rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
    return out;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.X = select_rows(X, rows);
    out.y.reserve(rows.size());
    for (auto r : rows) out.y.push_back(y[r]);
    out.feature_names = feature_names;
    out.binary_features = binary_features;
    return out;
}

Dataset Dataset::select_columns(std::span<const std::size_t> columns) const {
    Dataset out;
    out.X.resize(X.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        out.X.col(static_cast<Eigen::Index>(c)) = X.col(static_cast<Eigen::Index>(columns[c]));
        out.feature_names.push_back(feature_names[columns[c]]);
        out.binary_features.push_back(binary_features[columns[c]]);
    }
    out.y = y;
    return out;
}

void Dataset::validate() const {
    if (y.size() != rows()) throw ValidationError("dataset: label count does not match rows");
    if (feature_names.size() != cols() || binary_features.size() != cols())
        throw ValidationError("dataset: feature metadata does not match columns");
    if (!X.allFinite()) throw ValidationError("dataset: non-finite entries");
    for (int label : y)
        if (label != 0 && label != 1) throw ValidationError("dataset: labels must be 0 or 1");
}

bool Dataset::has_both_classes() const {
    bool zero = false, one = false;
    for (int label : y) (label == 1 ? one : zero) = true;
    return zero && one;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X, const std::vector<bool>& binary) {
    Standardizer s = identity(X.cols());
    const double n = static_cast<double>(X.rows());
    if (X.rows() < 2) return s;
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        if (binary[static_cast<std::size_t>(c)]) continue;
        const double mean = X.col(c).mean();
        const double var = (X.col(c).array() - mean).square().sum() / (n - 1.0);
        s.mean[c] = mean;
        s.scale[c] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return s;
}

Standardizer Standardizer::identity(Eigen::Index cols) {
    return {Eigen::VectorXd::Zero(cols), Eigen::VectorXd::Ones(cols)};
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
    if (X.cols() != mean.size()) throw ValidationError("standardizer: column mismatch");
    return (X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

} // namespace mtrack
