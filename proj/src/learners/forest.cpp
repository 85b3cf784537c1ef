#include "mtrack/learners/tree_models.hpp"

#include "mtrack/error.hpp"
#include "mtrack/rng.hpp"

#include <numeric>

namespace mtrack {

namespace {

std::vector<double> label_targets(const Dataset& data) {
    return {data.y.begin(), data.y.end()};
}

} // namespace

TreeModel fit_tree(const Dataset& data, double cp, const TreeOptions& options) {
    const auto target = label_targets(data);
    const auto samples = std::vector<std::size_t>(data.rows());
    std::vector<std::size_t> rows(data.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    cart::GrowOptions grow;
    grow.criterion = cart::Criterion::gini;
    grow.min_split = options.min_split;
    grow.min_leaf = options.min_leaf;
    grow.max_depth = options.max_depth;
    TreeModel model{cart::grow(data.X, target, rows, grow)};
    cart::prune(model.tree, cp);
    return model;
}

Eigen::VectorXd tree_proba(const TreeModel& model, const Eigen::MatrixXd& X) {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = model.tree.predict(X.row(i));
    return out;
}

ForestModel fit_forest(const Dataset& data, int n_trees, int mtry, std::uint64_t seed, const ForestOptions& options) {
    if (n_trees < 1) throw ValidationError("random forest: need at least one tree");
    const auto target = label_targets(data);
    const std::size_t n = data.rows();
    cart::GrowOptions grow;
    grow.criterion = cart::Criterion::gini;
    grow.min_split = options.min_split;
    grow.min_leaf = options.min_leaf;
    grow.max_depth = options.max_depth;
    grow.mtry = mtry;

    ForestModel model;
    model.trees.reserve(static_cast<std::size_t>(n_trees));
    const cart::Presorted sorted = cart::presort(data.X);
    std::vector<std::size_t> samples(n);
    for (int b = 0; b < n_trees; ++b) {
        Rng rng(derive_seed(seed, "tree", static_cast<std::uint64_t>(b)));
        if (options.bootstrap) {
            for (auto& s : samples) s = rng.below(n);
        } else {
            std::iota(samples.begin(), samples.end(), std::size_t{0});
        }
        model.trees.push_back(cart::grow(data.X, target, samples, grow, &rng, &sorted));
    }
    return model;
}

Eigen::VectorXd forest_proba(const ForestModel& model, const Eigen::MatrixXd& X) {
    Eigen::VectorXd out(X.rows());
    const double B = static_cast<double>(model.trees.size());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        int votes = 0;
        const auto row = X.row(i);
        for (const auto& tree : model.trees) votes += tree.predict(row) >= 0.5;
        out[i] = votes / B;
    }
    return out;
}

} // namespace mtrack
