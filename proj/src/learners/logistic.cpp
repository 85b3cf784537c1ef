#include "mtrack/learners/logistic.hpp"

#include "mtrack/error.hpp"

#include <cmath>

namespace mtrack {

namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Keeps the linear predictor inside the range where weights stay representable.
constexpr double kEtaLimit = 30.0;

} // namespace

LogisticModel fit_logistic(const Dataset& data, const LogisticOptions& options) {
    const Eigen::Index n = data.X.rows();
    const Eigen::Index p = data.X.cols();
    LogisticModel model;
    model.standardizer = Standardizer::fit(data.X, data.binary_features);
    Eigen::MatrixXd Z(n, p + 1);
    Z.col(0).setOnes();
    Z.rightCols(p) = model.standardizer.apply(data.X);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = data.y[static_cast<std::size_t>(i)];

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
    const double rate = y.mean();
    beta[0] = std::log(rate / (1.0 - rate));

    auto deviance_of = [&](const Eigen::VectorXd& eta) {
        double dev = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double e = std::clamp(eta[i], -kEtaLimit, kEtaLimit);
            // -2 log-likelihood, computed through softplus for stability.
            const double softplus = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
            dev += 2.0 * (softplus - y[i] * e);
        }
        return dev;
    };

    Eigen::VectorXd eta = Z * beta;
    double dev = deviance_of(eta);
    bool converged = false;
    Eigen::MatrixXd info(p + 1, p + 1);
    for (int it = 1; it <= options.max_iter; ++it) {
        Eigen::VectorXd w(n), z(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double e = std::clamp(eta[i], -kEtaLimit, kEtaLimit);
            const double mu = sigmoid(e);
            const double wi = std::max(mu * (1.0 - mu), 1e-12);
            w[i] = wi;
            z[i] = e + (y[i] - mu) / wi;
        }
        info = Z.transpose() * w.asDiagonal() * Z;
        const Eigen::VectorXd rhs = Z.transpose() * (w.asDiagonal() * z);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        Eigen::VectorXd next;
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) next = ldlt.solve(rhs);
        else next = info.completeOrthogonalDecomposition().solve(rhs);
        if (!next.allFinite()) throw FitError("logistic: IRLS produced non-finite coefficients");

        Eigen::VectorXd next_eta = Z * next;
        double next_dev = deviance_of(next_eta);
        // Step halving when the deviance increases (as in glm.fit).
        for (int half = 0; half < 30 && next_dev > dev + 1e-12 * std::abs(dev); ++half) {
            next = 0.5 * (next + beta);
            next_eta = Z * next;
            next_dev = deviance_of(next_eta);
        }
        beta = next;
        eta = next_eta;
        model.iterations = it;
        const double change = std::abs(next_dev - dev) / (std::abs(next_dev) + 0.1);
        dev = next_dev;
        if (change < options.tolerance) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw FitError("logistic: IRLS did not converge in " + std::to_string(options.max_iter) +
                       " iterations (deviance " + std::to_string(dev) + ")");

    model.coefficients = beta;
    model.deviance = dev;
    {
        Eigen::VectorXd w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mu = sigmoid(std::clamp(eta[i], -kEtaLimit, kEtaLimit));
            w[i] = mu * (1.0 - mu);
        }
        info = Z.transpose() * w.asDiagonal() * Z;
        const Eigen::MatrixXd cov = info.completeOrthogonalDecomposition().pseudoInverse();
        model.standard_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    }
    return model;
}

Eigen::VectorXd logistic_proba(const LogisticModel& model, const Eigen::MatrixXd& X) {
    const Eigen::MatrixXd Z = model.standardizer.apply(X);
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double eta = model.coefficients[0] + Z.row(i).dot(model.coefficients.tail(Z.cols()));
        out[i] = sigmoid(eta);
    }
    return out;
}

} // namespace mtrack
