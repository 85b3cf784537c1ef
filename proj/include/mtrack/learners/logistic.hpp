#pragma once

#include "mtrack/dataset.hpp"

#include <Eigen/Dense>

namespace mtrack {

struct LogisticOptions {
    int max_iter = 50;
    double tolerance = 1e-8; // relative deviance change
};

// log(p / (1 - p)) = b0 + b . z on standardized predictors z.
struct LogisticModel {
    Standardizer standardizer;
    Eigen::VectorXd coefficients;    // intercept first
    Eigen::VectorXd standard_errors; // from the inverse Fisher information
    int iterations = 0;
    double deviance = 0.0;
};

// Unpenalized maximum likelihood by iteratively reweighted least squares.
// Throws FitError when the deviance has not settled within max_iter.
LogisticModel fit_logistic(const Dataset& data, const LogisticOptions& options = {});

Eigen::VectorXd logistic_proba(const LogisticModel& model, const Eigen::MatrixXd& X);

} // namespace mtrack
