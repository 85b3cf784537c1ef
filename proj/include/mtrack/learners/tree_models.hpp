#pragma once

#include "mtrack/dataset.hpp"
#include "mtrack/learners/cart.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace mtrack {

struct TreeOptions {
    int min_split = 20;
    int min_leaf = 7;
    int max_depth = 30;
};

// Gini-grown tree, cost-complexity pruned at `cp`; leaves hold class-1 fractions.
struct TreeModel {
    cart::Tree tree;
};

TreeModel fit_tree(const Dataset& data, double cp, const TreeOptions& options = {});
Eigen::VectorXd tree_proba(const TreeModel& model, const Eigen::MatrixXd& X);

struct ForestOptions {
    bool bootstrap = true;
    int min_split = 2;
    int min_leaf = 1;
    int max_depth = 1000;
};

// Unpruned Gini trees on bootstrap draws with `mtry` candidate features per
// split; each tree casts its leaf majority (ties vote 1).
struct ForestModel {
    std::vector<cart::Tree> trees;
};

ForestModel fit_forest(const Dataset& data, int n_trees, int mtry, std::uint64_t seed,
                       const ForestOptions& options = {});
Eigen::VectorXd forest_proba(const ForestModel& model, const Eigen::MatrixXd& X);

struct BoostingOptions {
    int min_leaf = 10;
};

// Binomial-deviance gradient boosting: each tree is a least-squares fit to the
// pseudo-residuals y - p, its leaves then set to the exact log-loss line-search
// step and scaled by the shrinkage. Leaf values stored already shrunk.
struct BoostingModel {
    double initial = 0.0; // log-odds of the training class rate
    double shrinkage = 0.1;
    std::vector<cart::Tree> trees;

    template <typename Row>
    double decision(const Row& x, std::size_t stages) const {
        double f = initial;
        const std::size_t m = std::min(stages, trees.size());
        for (std::size_t t = 0; t < m; ++t) f += trees[t].predict(x);
        return f;
    }
};

BoostingModel fit_boosting(const Dataset& data, int n_trees, int depth, double shrinkage,
                           const BoostingOptions& options = {});
// Probabilities after the first `stages` trees (all trees by default).
Eigen::VectorXd boosting_proba(const BoostingModel& model, const Eigen::MatrixXd& X,
                               std::size_t stages = static_cast<std::size_t>(-1));
// Mean training log-loss after each stage 0..trees.
std::vector<double> boosting_loss_path(const BoostingModel& model, const Dataset& data);

} // namespace mtrack
