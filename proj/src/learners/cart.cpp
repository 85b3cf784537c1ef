#include "mtrack/learners/cart.hpp"

#include "mtrack/error.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>

namespace mtrack::cart {

std::size_t Tree::leaf_count() const {
    std::size_t leaves = 0;
    for (const auto& n : nodes) leaves += n.is_leaf();
    return leaves;
}

int Tree::depth() const {
    std::function<int(int)> rec = [&](int id) -> int {
        const Node& n = nodes[static_cast<std::size_t>(id)];
        if (n.is_leaf()) return 0;
        return 1 + std::max(rec(n.left), rec(n.right));
    };
    return nodes.empty() ? 0 : rec(0);
}

std::vector<bool> Tree::features_used(std::size_t p) const {
    std::vector<bool> used(p, false);
    for (const auto& n : nodes)
        if (!n.is_leaf()) used[static_cast<std::size_t>(n.feature)] = true;
    return used;
}

namespace {

struct Frame {
    int node;
    std::size_t begin;
    std::size_t end;
    int depth;
};

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

double impurity_total(Criterion c, double n, double s) {
    // Scaled node impurity: n * Gini for class counts, or the part of the sum of
    // squares that depends on the partition (-(s^2)/n) for regression.
    if (c == Criterion::gini) return n > 0 ? 2.0 * s * (n - s) / n : 0.0;
    return n > 0 ? -s * s / n : 0.0;
}

} // namespace

Presorted presort(const Eigen::MatrixXd& X) {
    Presorted out;
    const auto n = static_cast<std::uint32_t>(X.rows());
    out.order.assign(static_cast<std::size_t>(X.cols()), std::vector<std::uint32_t>(n));
    for (Eigen::Index f = 0; f < X.cols(); ++f) {
        auto& o = out.order[static_cast<std::size_t>(f)];
        std::iota(o.begin(), o.end(), 0u);
        const auto col = X.col(f);
        std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
    }
    return out;
}

Tree grow(const Eigen::MatrixXd& X, std::span<const double> target, std::span<const std::size_t> samples,
          const GrowOptions& options, Rng* rng, const Presorted* presorted) {
    const std::size_t N = samples.size();
    const auto p = static_cast<std::size_t>(X.cols());
    if (N == 0) throw FitError("tree: no training samples");
    const bool subsample_features = options.mtry > 0 && static_cast<std::size_t>(options.mtry) < p;
    if (subsample_features && rng == nullptr) throw FitError("tree: feature subsampling requires an rng");

    // Per-feature sample positions sorted by value; node ranges stay contiguous
    // in each array because partitioning is stable.
    std::vector<std::vector<std::uint32_t>> order(p, std::vector<std::uint32_t>(N));
    if (presorted) {
        // bucket sample positions by row, then read rows off in presorted order
        const auto rows = static_cast<std::size_t>(X.rows());
        std::vector<std::uint32_t> start(rows + 1, 0), positions(N);
        for (std::size_t i = 0; i < N; ++i) ++start[samples[i] + 1];
        for (std::size_t r = 0; r < rows; ++r) start[r + 1] += start[r];
        std::vector<std::uint32_t> fill(start.begin(), start.end() - 1);
        for (std::size_t i = 0; i < N; ++i) positions[fill[samples[i]]++] = static_cast<std::uint32_t>(i);
        for (std::size_t f = 0; f < p; ++f) {
            auto& o = order[f];
            std::size_t k = 0;
            for (std::uint32_t r : presorted->order[f])
                for (std::uint32_t q = start[r]; q < start[r + 1]; ++q) o[k++] = positions[q];
        }
    } else {
        for (std::size_t f = 0; f < p; ++f) {
            auto& o = order[f];
            std::iota(o.begin(), o.end(), 0u);
            const auto col = X.col(static_cast<Eigen::Index>(f));
            std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) {
                return col[static_cast<Eigen::Index>(samples[a])] < col[static_cast<Eigen::Index>(samples[b])];
            });
        }
    }
    std::vector<double> t(N);
    for (std::size_t i = 0; i < N; ++i) t[i] = target[samples[i]];

    Tree tree;
    tree.nodes.reserve(2 * N / static_cast<std::size_t>(std::max(1, options.min_leaf)) + 1);
    std::vector<char> goes_left(N);
    std::vector<std::uint32_t> buffer(N);
    std::vector<std::size_t> features(p);
    std::iota(features.begin(), features.end(), std::size_t{0});

    auto make_node = [&](std::size_t b, std::size_t e) {
        Node node;
        node.count = static_cast<double>(e - b);
        double s = 0;
        for (std::size_t k = b; k < e; ++k) s += t[order[0][k]];
        node.sum = s;
        node.value = s / node.count;
        tree.nodes.push_back(node);
        return static_cast<int>(tree.nodes.size() - 1);
    };

    std::vector<Frame> stack;
    stack.push_back({make_node(0, N), 0, N, 0});
    while (!stack.empty()) {
        const Frame fr = stack.back();
        stack.pop_back();
        const std::size_t n = fr.end - fr.begin;
        const double node_n = static_cast<double>(n);
        const double node_s = tree.nodes[static_cast<std::size_t>(fr.node)].sum;
        const double parent = impurity_total(options.criterion, node_n, node_s);
        if (fr.depth >= options.max_depth || n < static_cast<std::size_t>(options.min_split) ||
            n < 2 * static_cast<std::size_t>(std::max(1, options.min_leaf)))
            continue;
        if (options.criterion == Criterion::gini && parent <= 0.0) continue;

        std::vector<std::size_t> candidates;
        if (subsample_features) {
            std::vector<std::size_t> pool = features;
            for (int k = 0; k < options.mtry; ++k) {
                const std::size_t j = static_cast<std::size_t>(k) + rng->below(p - static_cast<std::size_t>(k));
                std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
            }
            candidates.assign(pool.begin(), pool.begin() + options.mtry);
            std::sort(candidates.begin(), candidates.end());
        } else {
            candidates = features;
        }

        Split best;
        const double min_gain = 1e-12 * std::max(1.0, std::abs(parent));
        const auto min_leaf = static_cast<std::size_t>(std::max(1, options.min_leaf));
        for (std::size_t f : candidates) {
            const auto& o = order[f];
            const auto col = X.col(static_cast<Eigen::Index>(f));
            double left_s = 0;
            for (std::size_t k = fr.begin; k + 1 < fr.end; ++k) {
                left_s += t[o[k]];
                const std::size_t left_n = k + 1 - fr.begin;
                const double v = col[static_cast<Eigen::Index>(samples[o[k]])];
                const double v_next = col[static_cast<Eigen::Index>(samples[o[k + 1]])];
                if (!(v < v_next)) continue;
                if (left_n < min_leaf || n - left_n < min_leaf) continue;
                const double ln = static_cast<double>(left_n);
                const double rn = node_n - ln;
                const double gain = parent - impurity_total(options.criterion, ln, left_s) -
                                    impurity_total(options.criterion, rn, node_s - left_s);
                if (gain > best.gain && gain > min_gain) {
                    best.gain = gain;
                    best.feature = static_cast<int>(f);
                    double mid = 0.5 * (v + v_next);
                    if (!(mid < v_next)) mid = v;
                    best.threshold = mid;
                }
            }
        }
        if (best.feature < 0) continue;

        const auto split_col = X.col(best.feature);
        for (std::size_t k = fr.begin; k < fr.end; ++k) {
            const std::uint32_t s = order[0][k];
            goes_left[s] = split_col[static_cast<Eigen::Index>(samples[s])] <= best.threshold;
        }
        std::size_t mid = fr.begin;
        for (std::size_t f = 0; f < p; ++f) {
            auto& o = order[f];
            std::size_t l = fr.begin, r = 0;
            for (std::size_t k = fr.begin; k < fr.end; ++k) {
                if (goes_left[o[k]]) o[l++] = o[k];
                else buffer[r++] = o[k];
            }
            std::copy(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(r), o.begin() + static_cast<std::ptrdiff_t>(l));
            mid = l;
        }
        const int left = make_node(fr.begin, mid);
        const int right = make_node(mid, fr.end);
        Node& node = tree.nodes[static_cast<std::size_t>(fr.node)];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left = left;
        node.right = right;
        stack.push_back({right, mid, fr.end, fr.depth + 1});
        stack.push_back({left, fr.begin, mid, fr.depth + 1});
    }
    return tree;
}

namespace {

double risk(const Node& n) { return std::min(n.sum, n.count - n.sum); }

void compact(Tree& tree) {
    Tree out;
    std::function<int(int)> copy = [&](int id) -> int {
        const Node& src = tree.nodes[static_cast<std::size_t>(id)];
        const int dst = static_cast<int>(out.nodes.size());
        out.nodes.push_back(src);
        if (!src.is_leaf()) {
            const int l = copy(src.left);
            const int r = copy(src.right);
            out.nodes[static_cast<std::size_t>(dst)].left = l;
            out.nodes[static_cast<std::size_t>(dst)].right = r;
        } else {
            out.nodes[static_cast<std::size_t>(dst)].left = -1;
            out.nodes[static_cast<std::size_t>(dst)].right = -1;
        }
        return dst;
    };
    if (!tree.nodes.empty()) copy(0);
    tree = std::move(out);
}

} // namespace

void prune(Tree& tree, double cp) {
    if (cp <= 0.0 || tree.nodes.empty()) return;
    const double root_risk = risk(tree.nodes[0]);
    if (root_risk <= 0.0) return;
    const double alpha_limit = cp * root_risk;

    for (;;) {
        std::vector<double> subtree_risk(tree.nodes.size(), 0.0);
        std::vector<double> leaves(tree.nodes.size(), 0.0);
        std::function<void(int)> accumulate = [&](int id) {
            const Node& n = tree.nodes[static_cast<std::size_t>(id)];
            if (n.is_leaf()) {
                subtree_risk[static_cast<std::size_t>(id)] = risk(n);
                leaves[static_cast<std::size_t>(id)] = 1;
                return;
            }
            accumulate(n.left);
            accumulate(n.right);
            subtree_risk[static_cast<std::size_t>(id)] =
                subtree_risk[static_cast<std::size_t>(n.left)] + subtree_risk[static_cast<std::size_t>(n.right)];
            leaves[static_cast<std::size_t>(id)] =
                leaves[static_cast<std::size_t>(n.left)] + leaves[static_cast<std::size_t>(n.right)];
        };
        accumulate(0);

        int weakest = -1;
        double weakest_g = std::numeric_limits<double>::infinity();
        std::function<void(int)> scan = [&](int id) {
            const Node& n = tree.nodes[static_cast<std::size_t>(id)];
            if (n.is_leaf()) return;
            const double g = (risk(n) - subtree_risk[static_cast<std::size_t>(id)]) /
                             (leaves[static_cast<std::size_t>(id)] - 1.0);
            if (g < weakest_g) {
                weakest_g = g;
                weakest = id;
            }
            scan(n.left);
            scan(n.right);
        };
        scan(0);
        if (weakest < 0 || !(weakest_g < alpha_limit)) break;
        Node& w = tree.nodes[static_cast<std::size_t>(weakest)];
        w.feature = -1;
    }
    compact(tree);
}

} // namespace mtrack::cart
