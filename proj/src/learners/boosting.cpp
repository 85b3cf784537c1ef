#include "mtrack/learners/tree_models.hpp"

#include "mtrack/error.hpp"

#include <cmath>
#include <numeric>

namespace mtrack {

namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double log_loss(double f, double y) {
    const double softplus = f > 0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f));
    return softplus - y * f;
}

constexpr double kStepLimit = 30.0;

// Minimizes sum_i log_loss(F_i + g, y_i) over g by safeguarded Newton.
double line_search(const std::vector<double>& F, const std::vector<double>& y, const std::vector<std::size_t>& rows) {
    auto loss = [&](double g) {
        double s = 0;
        for (auto i : rows) s += log_loss(F[i] + g, y[i]);
        return s;
    };
    double g = 0.0;
    double current = loss(g);
    for (int it = 0; it < 100; ++it) {
        double grad = 0, hess = 0;
        for (auto i : rows) {
            const double p = sigmoid(F[i] + g);
            grad += p - y[i];
            hess += p * (1.0 - p);
        }
        if (hess <= 1e-300) break;
        double step = -grad / hess;
        double next = std::clamp(g + step, -kStepLimit, kStepLimit);
        // near the optimum loss differences drop to rounding level
        const double slack = 1e-13 * (1.0 + std::abs(current));
        double next_loss = loss(next);
        for (int half = 0; half < 60 && next_loss > current + slack; ++half) {
            step *= 0.5;
            next = std::clamp(g + step, -kStepLimit, kStepLimit);
            next_loss = loss(next);
        }
        if (next_loss > current + slack) break;
        const double moved = std::abs(next - g);
        g = next;
        current = next_loss;
        if (moved < 1e-12 * (1.0 + std::abs(g))) break;
    }
    return g;
}

} // namespace

BoostingModel fit_boosting(const Dataset& data, int n_trees, int depth, double shrinkage,
                           const BoostingOptions& options) {
    if (n_trees < 1 || depth < 1 || !(shrinkage > 0.0 && shrinkage <= 1.0))
        throw ValidationError("boosting: invalid hyperparameters");
    const std::size_t n = data.rows();
    std::vector<double> y(data.y.begin(), data.y.end());
    const double rate = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

    BoostingModel model;
    model.shrinkage = shrinkage;
    model.initial = std::log(rate / (1.0 - rate));
    std::vector<double> F(n, model.initial);
    std::vector<double> residual(n);
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});

    cart::GrowOptions grow;
    grow.criterion = cart::Criterion::squared_error;
    grow.max_depth = depth;
    grow.min_leaf = options.min_leaf;
    grow.min_split = 2 * options.min_leaf;

    const cart::Presorted sorted = cart::presort(data.X);
    std::vector<int> leaf_of(n);
    for (int m = 0; m < n_trees; ++m) {
        for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - sigmoid(F[i]);
        cart::Tree tree = cart::grow(data.X, residual, rows, grow, nullptr, &sorted);
        std::vector<std::vector<std::size_t>> members(tree.nodes.size());
        for (std::size_t i = 0; i < n; ++i) {
            leaf_of[i] = tree.leaf_index(data.X.row(static_cast<Eigen::Index>(i)));
            members[static_cast<std::size_t>(leaf_of[i])].push_back(i);
        }
        for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
            if (!tree.nodes[id].is_leaf()) continue;
            tree.nodes[id].value = members[id].empty() ? 0.0 : shrinkage * line_search(F, y, members[id]);
        }
        for (std::size_t i = 0; i < n; ++i) F[i] += tree.nodes[static_cast<std::size_t>(leaf_of[i])].value;
        model.trees.push_back(std::move(tree));
    }
    return model;
}

Eigen::VectorXd boosting_proba(const BoostingModel& model, const Eigen::MatrixXd& X, std::size_t stages) {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = sigmoid(model.decision(X.row(i), stages));
    return out;
}

std::vector<double> boosting_loss_path(const BoostingModel& model, const Dataset& data) {
    const std::size_t n = data.rows();
    std::vector<double> F(n, model.initial);
    std::vector<double> path;
    auto mean_loss = [&] {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) s += log_loss(F[i], data.y[i]);
        return s / static_cast<double>(n);
    };
    path.push_back(mean_loss());
    for (const auto& tree : model.trees) {
        for (std::size_t i = 0; i < n; ++i) F[i] += tree.predict(data.X.row(static_cast<Eigen::Index>(i)));
        path.push_back(mean_loss());
    }
    return path;
}

} // namespace mtrack
