// Random forest of Gini-split decision trees: bootstrap resampling per tree,
// sqrt(d) feature candidates per split, majority vote across trees.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "spcd/model.hpp"
#include "spcd/rng.hpp"

namespace spcd {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf: fraction of class-1 samples
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    double leaf_value(const std::vector<double>& row) const {
        int i = 0;
        while (nodes[i].feature >= 0)
            i = row[nodes[i].feature] < nodes[i].threshold ? nodes[i].left : nodes[i].right;
        return nodes[i].value;
    }
};

struct RandomForest {
    std::vector<DecisionTree> trees;

    // Fraction of trees whose leaf majority is class 1.
    double score(const std::vector<double>& row) const {
        if (trees.empty()) throw std::runtime_error("random forest: no trees");
        std::size_t votes = 0;
        for (const auto& t : trees) votes += t.leaf_value(row) >= 0.5 ? 1 : 0;
        return static_cast<double>(votes) / static_cast<double>(trees.size());
    }
};

namespace detail {

struct TreeBuilder {
    const std::vector<std::vector<double>>& x;
    const std::vector<int>& y;
    int max_depth;
    int min_leaf;
    int mtry;
    Rng& rng;
    std::vector<int> feature_pool;
    DecisionTree tree;

    static double gini(std::size_t pos, std::size_t n) {
        double p = static_cast<double>(pos) / static_cast<double>(n);
        return 2.0 * p * (1.0 - p);
    }

    int build(std::vector<std::size_t>& idx, int depth) {
        std::size_t n = idx.size();
        std::size_t pos = 0;
        for (std::size_t i : idx) pos += static_cast<std::size_t>(y[i]);

        int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        tree.nodes[node_id].value = static_cast<double>(pos) / static_cast<double>(n);

        bool can_split = pos != 0 && pos != n && n >= 2 * static_cast<std::size_t>(min_leaf) &&
                         (max_depth == 0 || depth < max_depth);
        if (!can_split) return node_id;

        // Sample mtry distinct candidate features.
        for (int j = 0; j < mtry; ++j) {
            std::size_t pick = j + rng.next_below(feature_pool.size() - j);
            std::swap(feature_pool[j], feature_pool[pick]);
        }

        double parent = gini(pos, n);
        double best_gain = 1e-12;
        int best_feature = -1;
        double best_threshold = 0.0;
        std::vector<std::pair<double, int>> col(n);
        for (int j = 0; j < mtry; ++j) {
            int f = feature_pool[j];
            for (std::size_t i = 0; i < n; ++i) col[i] = {x[idx[i]][f], y[idx[i]]};
            std::sort(col.begin(), col.end());
            std::size_t left_pos = 0;
            for (std::size_t i = 1; i < n; ++i) {
                left_pos += static_cast<std::size_t>(col[i - 1].second);
                if (col[i].first == col[i - 1].first) continue;
                if (i < static_cast<std::size_t>(min_leaf) ||
                    n - i < static_cast<std::size_t>(min_leaf))
                    continue;
                double wl = static_cast<double>(i) / static_cast<double>(n);
                double gain = parent - wl * gini(left_pos, i) -
                              (1.0 - wl) * gini(pos - left_pos, n - i);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = f;
                    best_threshold = 0.5 * (col[i - 1].first + col[i].first);
                }
            }
        }
        if (best_feature < 0) return node_id;

        std::vector<std::size_t> li, ri;
        for (std::size_t i : idx)
            (x[i][best_feature] < best_threshold ? li : ri).push_back(i);
        if (li.empty() || ri.empty()) return node_id;  // threshold degenerate under ties

        tree.nodes[node_id].feature = best_feature;
        tree.nodes[node_id].threshold = best_threshold;
        int l = build(li, depth + 1);
        int r = build(ri, depth + 1);
        tree.nodes[node_id].left = l;
        tree.nodes[node_id].right = r;
        return node_id;
    }
};

}  // namespace detail

inline RandomForest train_random_forest(const std::vector<std::vector<double>>& x,
                                        const std::vector<int>& y, const ModelParams& params) {
    std::size_t n = x.size();
    int d = static_cast<int>(x[0].size());
    int mtry = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(d)))));

    RandomForest forest;
    forest.trees.reserve(static_cast<std::size_t>(params.rf_trees));
    for (int t = 0; t < params.rf_trees; ++t) {
        Rng rng(derive_seed(params.seed, "rf_tree", static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> boot(n);
        for (std::size_t i = 0; i < n; ++i) boot[i] = rng.next_below(n);
        detail::TreeBuilder builder{x, y, params.rf_max_depth, params.rf_min_leaf,
                                    mtry, rng, {}, {}};
        builder.feature_pool.resize(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) builder.feature_pool[static_cast<std::size_t>(j)] = j;
        builder.build(boot, 0);
        forest.trees.push_back(std::move(builder.tree));
    }
    return forest;
}

}  // namespace spcd
