#include "mtrack/learners/svm.hpp"

#include "mtrack/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace mtrack {

namespace {

constexpr double kTau = 1e-12;

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double gamma) {
    const Eigen::VectorXd a2 = A.rowwise().squaredNorm();
    const Eigen::VectorXd b2 = B.rowwise().squaredNorm();
    Eigen::MatrixXd K = -2.0 * (A * B.transpose());
    K.colwise() += a2;
    K.rowwise() += b2.transpose();
    return (-gamma * K.array().max(0.0)).exp().matrix();
}

} // namespace

SvmModel fit_svm(const Dataset& data, double cost, double gamma, const SvmOptions& options) {
    if (!(cost > 0.0) || !(gamma > 0.0)) throw ValidationError("svm: cost and gamma must be positive");
    const Eigen::Index n = data.X.rows();
    SvmModel model;
    model.gamma = gamma;
    model.cost = cost;
    model.standardizer = Standardizer::fit(data.X, data.binary_features);
    const Eigen::MatrixXd Z = model.standardizer.apply(data.X);

    std::vector<double> y(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = data.y[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;

    // Q_ij = y_i y_j K_ij
    Eigen::MatrixXd Q = rbf_kernel(Z, Z, gamma);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) Q(i, j) *= y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)];

    std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
    std::vector<double> G(static_cast<std::size_t>(n), -1.0);
    const double C = cost;
    auto upper = [&](Eigen::Index t) { return alpha[static_cast<std::size_t>(t)] >= C; };
    auto lower = [&](Eigen::Index t) { return alpha[static_cast<std::size_t>(t)] <= 0.0; };

    const std::int64_t cap = options.max_iter > 0 ? options.max_iter : std::max<std::int64_t>(10'000'000, 100 * n);
    std::int64_t iter = 0;
    for (;; ++iter) {
        if (iter >= cap) throw FitError("svm: SMO did not converge within " + std::to_string(cap) + " iterations");
        // Working set selection using second-order information.
        double gmax = -std::numeric_limits<double>::infinity();
        Eigen::Index i = -1;
        for (Eigen::Index t = 0; t < n; ++t) {
            const auto ts = static_cast<std::size_t>(t);
            if (y[ts] > 0) {
                if (!upper(t) && -G[ts] >= gmax) { gmax = -G[ts]; i = t; }
            } else {
                if (!lower(t) && G[ts] >= gmax) { gmax = G[ts]; i = t; }
            }
        }
        double gmax2 = -std::numeric_limits<double>::infinity();
        Eigen::Index j = -1;
        double obj_min = std::numeric_limits<double>::infinity();
        if (i >= 0) {
            const auto is = static_cast<std::size_t>(i);
            for (Eigen::Index t = 0; t < n; ++t) {
                const auto ts = static_cast<std::size_t>(t);
                if (y[ts] > 0) {
                    if (lower(t)) continue;
                    const double diff = gmax + G[ts];
                    gmax2 = std::max(gmax2, G[ts]);
                    if (diff > 0) {
                        const double quad = Q(i, i) + Q(t, t) - 2.0 * y[is] * Q(t, i);
                        const double obj = -(diff * diff) / (quad > 0 ? quad : kTau);
                        if (obj <= obj_min) { obj_min = obj; j = t; }
                    }
                } else {
                    if (upper(t)) continue;
                    const double diff = gmax - G[ts];
                    gmax2 = std::max(gmax2, -G[ts]);
                    if (diff > 0) {
                        const double quad = Q(i, i) + Q(t, t) + 2.0 * y[is] * Q(t, i);
                        const double obj = -(diff * diff) / (quad > 0 ? quad : kTau);
                        if (obj <= obj_min) { obj_min = obj; j = t; }
                    }
                }
            }
        }
        if (i < 0 || j < 0 || gmax + gmax2 < options.tolerance) break;

        const auto is = static_cast<std::size_t>(i);
        const auto js = static_cast<std::size_t>(j);
        const double old_ai = alpha[is];
        const double old_aj = alpha[js];
        if (y[is] != y[js]) {
            double quad = Q(i, i) + Q(j, j) + 2.0 * Q(i, j);
            if (quad <= 0) quad = kTau;
            const double delta = (-G[is] - G[js]) / quad;
            const double diff = alpha[is] - alpha[js];
            alpha[is] += delta;
            alpha[js] += delta;
            if (diff > 0) {
                if (alpha[js] < 0) { alpha[js] = 0; alpha[is] = diff; }
            } else {
                if (alpha[is] < 0) { alpha[is] = 0; alpha[js] = -diff; }
            }
            if (diff > 0) {
                if (alpha[is] > C) { alpha[is] = C; alpha[js] = C - diff; }
            } else {
                if (alpha[js] > C) { alpha[js] = C; alpha[is] = C + diff; }
            }
        } else {
            double quad = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
            if (quad <= 0) quad = kTau;
            const double delta = (G[is] - G[js]) / quad;
            const double sum = alpha[is] + alpha[js];
            alpha[is] -= delta;
            alpha[js] += delta;
            if (sum > C) {
                if (alpha[is] > C) { alpha[is] = C; alpha[js] = sum - C; }
            } else {
                if (alpha[js] < 0) { alpha[js] = 0; alpha[is] = sum; }
            }
            if (sum > C) {
                if (alpha[js] > C) { alpha[js] = C; alpha[is] = sum - C; }
            } else {
                if (alpha[is] < 0) { alpha[is] = 0; alpha[js] = sum; }
            }
        }
        const double dai = alpha[is] - old_ai;
        const double daj = alpha[js] - old_aj;
        for (Eigen::Index t = 0; t < n; ++t) G[static_cast<std::size_t>(t)] += Q(t, i) * dai + Q(t, j) * daj;
    }
    model.iterations = iter;

    // Offset from free vectors, or the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0;
    int free = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        const auto ts = static_cast<std::size_t>(t);
        const double yg = y[ts] * G[ts];
        if (upper(t)) {
            if (y[ts] < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (lower(t)) {
            if (y[ts] > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++free;
            sum_free += yg;
        }
    }
    model.rho = free > 0 ? sum_free / free : 0.5 * (ub + lb);

    std::vector<Eigen::Index> sv;
    for (Eigen::Index t = 0; t < n; ++t)
        if (alpha[static_cast<std::size_t>(t)] > 0.0) sv.push_back(t);
    model.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), Z.cols());
    model.dual_coef.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t k = 0; k < sv.size(); ++k) {
        model.support_vectors.row(static_cast<Eigen::Index>(k)) = Z.row(sv[k]);
        model.dual_coef[static_cast<Eigen::Index>(k)] = alpha[static_cast<std::size_t>(sv[k])] * y[static_cast<std::size_t>(sv[k])];
    }
    return model;
}

Eigen::VectorXd svm_decision(const SvmModel& model, const Eigen::MatrixXd& X) {
    const Eigen::MatrixXd Z = model.standardizer.apply(X);
    if (model.support_vectors.rows() == 0) return Eigen::VectorXd::Constant(X.rows(), -model.rho);
    const Eigen::MatrixXd K = rbf_kernel(Z, model.support_vectors, model.gamma);
    return (K * model.dual_coef).array() - model.rho;
}

} // namespace mtrack
