#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace mtrack {

// Least-squares fit of y on an intercept plus regressor columns. Constant
// columns are dropped; remaining rank deficiency is resolved by the
// minimum-norm solution of a complete orthogonal decomposition.
struct OlsFit {
    std::vector<std::string> terms; // "intercept" first, then one per regressor column
    Eigen::VectorXd coefficients;   // dropped terms carry 0
    std::vector<bool> retained;
    Eigen::Index rank = 0;

    // `regressors` excludes the intercept, in term order.
    double fitted_row(const Eigen::Ref<const Eigen::RowVectorXd>& regressors) const;
    Eigen::VectorXd fitted(const Eigen::MatrixXd& regressors) const;
    double coefficient(const std::string& term) const;
};

// Throws UnderdeterminedError when rows < retained parameters.
OlsFit fit_ols(const Eigen::MatrixXd& regressors, const Eigen::VectorXd& y, const std::vector<std::string>& names,
               std::vector<std::string>& diagnostics, const std::string& context);

} // namespace mtrack
