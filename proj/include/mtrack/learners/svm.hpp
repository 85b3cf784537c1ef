#pragma once

#include "mtrack/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace mtrack {

struct SvmOptions {
    double tolerance = 1e-3;       // KKT violation at which SMO stops
    std::int64_t max_iter = 0;     // 0 = max(10'000'000, 100 n)
};

// Soft-margin classifier with radial kernel exp(-gamma |u - v|^2) on
// standardized features. Classifies by the sign of the decision value; a
// decision value of exactly 0 is assigned to class 1.
struct SvmModel {
    Standardizer standardizer;
    double gamma = 0.1;
    double cost = 1.0;
    Eigen::MatrixXd support_vectors; // standardized
    Eigen::VectorXd dual_coef;       // alpha_i * y_i
    double rho = 0.0;
    std::int64_t iterations = 0;
};

// Throws FitError when SMO exceeds its iteration cap.
SvmModel fit_svm(const Dataset& data, double cost, double gamma, const SvmOptions& options = {});
Eigen::VectorXd svm_decision(const SvmModel& model, const Eigen::MatrixXd& X);

} // namespace mtrack
