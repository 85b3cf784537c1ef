#pragma once

#include "mtrack/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mtrack::cart {

enum class Criterion { gini, squared_error };

struct Node {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double count = 0.0; // training samples reaching the node (with multiplicity)
    double sum = 0.0;   // sum of targets; class-1 count for gini trees
    double value = 0.0; // prediction: class-1 fraction, mean target, or boosting step

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<Node> nodes; // nodes[0] is the root

    template <typename Row>
    int leaf_index(const Row& x) const {
        int id = 0;
        while (!nodes[static_cast<std::size_t>(id)].is_leaf()) {
            const Node& n = nodes[static_cast<std::size_t>(id)];
            id = x[n.feature] <= n.threshold ? n.left : n.right;
        }
        return id;
    }

    template <typename Row>
    double predict(const Row& x) const {
        return nodes[static_cast<std::size_t>(leaf_index(x))].value;
    }

    std::size_t leaf_count() const;
    int depth() const;
    std::vector<bool> features_used(std::size_t p) const;
};

struct GrowOptions {
    Criterion criterion = Criterion::gini;
    int min_split = 20; // smallest node that may be split
    int min_leaf = 7;   // smallest admissible child
    int max_depth = 30; // root has depth 0
    int mtry = 0;       // candidate features per split; 0 = all
};

// Rows of X sorted by each column (ties by row index). Reusable across trees
// grown on the same matrix.
struct Presorted {
    std::vector<std::vector<std::uint32_t>> order; // [feature][rank] -> row
};
Presorted presort(const Eigen::MatrixXd& X);

// Grows a binary tree on the given samples (row indices into X, duplicates
// allowed for bootstrap draws). Splits maximize impurity decrease; ties go to
// the lowest feature index, then the smallest split point. Thresholds sit
// midway between consecutive distinct values, and x <= threshold goes left.
// `rng` is required when 0 < mtry < p.
Tree grow(const Eigen::MatrixXd& X, std::span<const double> target, std::span<const std::size_t> samples,
          const GrowOptions& options, Rng* rng = nullptr, const Presorted* presorted = nullptr);

// Weakest-link cost-complexity pruning on misclassification risk: collapses
// subtrees whose per-leaf risk reduction is below cp times the root risk.
// For gini trees only; cp <= 0 leaves the tree unchanged.
void prune(Tree& tree, double cp);

} // namespace mtrack::cart
