#include "mtrack/ols.hpp"

#include "mtrack/error.hpp"

#include <algorithm>

namespace mtrack {

double OlsFit::fitted_row(const Eigen::Ref<const Eigen::RowVectorXd>& regressors) const {
    double v = coefficients[0];
    for (Eigen::Index c = 0; c < regressors.size(); ++c)
        if (retained[c + 1]) v += coefficients[c + 1] * regressors[c];
    return v;
}

Eigen::VectorXd OlsFit::fitted(const Eigen::MatrixXd& regressors) const {
    Eigen::VectorXd out(regressors.rows());
    for (Eigen::Index r = 0; r < regressors.rows(); ++r) out[r] = fitted_row(regressors.row(r));
    return out;
}

double OlsFit::coefficient(const std::string& term) const {
    for (std::size_t i = 0; i < terms.size(); ++i)
        if (terms[i] == term) return coefficients[static_cast<Eigen::Index>(i)];
    return 0.0;
}

OlsFit fit_ols(const Eigen::MatrixXd& regressors, const Eigen::VectorXd& y, const std::vector<std::string>& names,
               std::vector<std::string>& diagnostics, const std::string& context) {
    const Eigen::Index n = regressors.rows();
    const Eigen::Index q = regressors.cols();
    OlsFit fit;
    fit.terms.push_back("intercept");
    fit.terms.insert(fit.terms.end(), names.begin(), names.end());
    fit.retained.assign(static_cast<std::size_t>(q + 1), true);
    fit.coefficients = Eigen::VectorXd::Zero(q + 1);

    std::vector<Eigen::Index> kept;
    for (Eigen::Index c = 0; c < q; ++c) {
        // residual-valued regressors come out of a fit with rounding noise
        const bool constant =
            n == 0 || regressors.col(c).maxCoeff() - regressors.col(c).minCoeff() <=
                          1e-9 * std::max(1.0, regressors.col(c).cwiseAbs().maxCoeff());
        if (constant) {
            fit.retained[static_cast<std::size_t>(c + 1)] = false;
            diagnostics.push_back(context + ": dropped constant regressor '" + names[static_cast<std::size_t>(c)] + "'");
        } else {
            kept.push_back(c);
        }
    }
    const Eigen::Index params = static_cast<Eigen::Index>(kept.size()) + 1;
    if (n < params)
        throw UnderdeterminedError(context + ": underdetermined correction (" + std::to_string(n) + " rows, " +
                                   std::to_string(params) + " parameters)");

    Eigen::MatrixXd design(n, params);
    design.col(0).setOnes();
    for (std::size_t k = 0; k < kept.size(); ++k) design.col(static_cast<Eigen::Index>(k) + 1) = regressors.col(kept[k]);

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
    const Eigen::VectorXd beta = cod.solve(y);
    fit.rank = cod.rank();
    if (fit.rank < params)
        diagnostics.push_back(context + ": rank-deficient design (rank " + std::to_string(fit.rank) + " of " +
                              std::to_string(params) + "), minimum-norm coefficients used");
    fit.coefficients[0] = beta[0];
    for (std::size_t k = 0; k < kept.size(); ++k) fit.coefficients[kept[k] + 1] = beta[static_cast<Eigen::Index>(k) + 1];
    return fit;
}

} // namespace mtrack
