#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mtrack {

// Design matrix with binary labels (1 = difficult).
struct Dataset {
    Eigen::MatrixXd X;
    std::vector<int> y;
    std::vector<std::string> feature_names;
    std::vector<bool> binary_features; // indicator columns are never standardized

    std::size_t rows() const { return static_cast<std::size_t>(X.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(X.cols()); }

    Dataset subset(std::span<const std::size_t> rows) const;
    Dataset select_columns(std::span<const std::size_t> columns) const;

    // Throws ValidationError: shape mismatch, non-finite entries, labels outside {0, 1}.
    void validate() const;
    bool has_both_classes() const;
};

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& X, std::span<const std::size_t> rows);

struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    static Standardizer fit(const Eigen::MatrixXd& X, const std::vector<bool>& binary);
    static Standardizer identity(Eigen::Index cols);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

} // namespace mtrack
