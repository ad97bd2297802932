#pragma once

// Weighted CART-style trees and forests. The column generation loop refits
// these against dual weights, and ensemble extraction harvests their leaves,
// so split behaviour has to be fully deterministic: candidate thresholds are
// midpoints between consecutive distinct values carrying positive weight,
// ties resolve to the smallest feature index then smallest threshold, and
// leaf labels break ties toward the smallest class id.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "rulegen/common.hpp"
#include "rulegen/dataio.hpp"
#include "rulegen/rules.hpp"

namespace rulegen {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::unique_ptr<TreeNode> left;   // feature <= threshold
    std::unique_ptr<TreeNode> right;  // feature > threshold
    int label = 0;
    std::vector<double> class_weights;  // weighted histogram at this node

    bool is_leaf() const { return feature < 0; }
};

struct TreeConfig {
    int max_depth = 3;
    int features_per_split = 0;  // <= 0 means all features
};

namespace detail {

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;  // scale-invariant impurity decrease
};

inline double total_s2_minus(const std::vector<double>& hist,
                             const std::vector<double>& left_hist, int K) {
    double s = 0.0;
    for (int k = 0; k < K; ++k) {
        const double w = hist[k] - left_hist[k];
        s += w * w;
    }
    return s;
}

// Weighted Gini decrease for one feature via a single sorted sweep.
// Maintaining W_L and S_L = sum_k w_{Lk}^2 incrementally gives the decrease
//   gain = (S_L/W_L + S_R/W_R - S/W) / W
// which is invariant under rescaling all weights.
inline void scan_feature(const Dataset& ds, const std::vector<int>& rows,
                         const std::vector<double>& weights, int feature, int K,
                         double total_w, double total_s2,
                         const std::vector<double>& hist, SplitChoice& best) {
    thread_local std::vector<std::pair<double, int>> order;  // (value, row)
    order.clear();
    for (const int r : rows) {
        if (weights[r] > 0.0) order.emplace_back(ds.x(r, feature), r);
    }
    if (order.size() < 2) return;
    std::sort(order.begin(), order.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (order.front().first == order.back().first) return;

    thread_local std::vector<double> left_hist;
    left_hist.assign(K, 0.0);
    double wl = 0.0, sl2 = 0.0;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const auto [value, row] = order[i];
        const double w = weights[row];
        const int k = ds.labels[row];
        sl2 += w * (2.0 * left_hist[k] + w);
        left_hist[k] += w;
        wl += w;
        const double next_value = order[i + 1].first;
        if (next_value == value) continue;
        const double wr = total_w - wl;
        const double sr2 = total_s2_minus(hist, left_hist, K);
        const double gain = (sl2 / wl + sr2 / wr - total_s2 / total_w) / total_w;
        if (gain > best.gain && gain > 1e-12) {
            best.found = true;
            best.feature = feature;
            best.threshold = 0.5 * (value + next_value);
            best.gain = gain;
        }
    }
}

}  // namespace detail

class TreeBuilder {
public:
    TreeBuilder(const Dataset& ds, const std::vector<double>& weights,
                const TreeConfig& cfg, Rng* rng)
        : ds_(ds), weights_(weights), cfg_(cfg), rng_(rng) {
        if (static_cast<int>(weights.size()) != ds.n_rows) {
            throw ArgumentError("fit_tree: weight count does not match rows");
        }
        double total = 0.0;
        for (const double w : weights) {
            if (w < 0.0) throw ArgumentError("fit_tree: negative sample weight");
            total += w;
        }
        if (total <= 0.0) throw ArgumentError("fit_tree: all sample weights are zero");
        if (cfg.max_depth < 0) throw ArgumentError("fit_tree: negative max depth");
    }

    std::unique_ptr<TreeNode> build() {
        std::vector<int> rows(ds_.n_rows);
        for (int i = 0; i < ds_.n_rows; ++i) rows[i] = i;
        return grow(rows, 0);
    }

private:
    const Dataset& ds_;
    const std::vector<double>& weights_;
    const TreeConfig& cfg_;
    Rng* rng_;
    std::vector<int> feature_scratch_;

    std::unique_ptr<TreeNode> grow(const std::vector<int>& rows, int depth) {
        const int K = ds_.class_count;
        auto node = std::make_unique<TreeNode>();
        node->class_weights.assign(K, 0.0);
        double total_w = 0.0;
        for (const int r : rows) {
            node->class_weights[ds_.labels[r]] += weights_[r];
            total_w += weights_[r];
        }
        node->label = argmax_label(node->class_weights);

        int positive_classes = 0;
        double total_s2 = 0.0;
        for (const double w : node->class_weights) {
            if (w > 0.0) ++positive_classes;
            total_s2 += w * w;
        }
        if (depth >= cfg_.max_depth || positive_classes <= 1) return node;

        detail::SplitChoice best;
        for (const int f : candidate_features()) {
            detail::scan_feature(ds_, rows, weights_, f, K, total_w, total_s2,
                                 node->class_weights, best);
        }
        if (!best.found) return node;

        std::vector<int> left_rows, right_rows;
        for (const int r : rows) {
            if (ds_.x(r, best.feature) <= best.threshold) left_rows.push_back(r);
            else right_rows.push_back(r);
        }
        node->feature = best.feature;
        node->threshold = best.threshold;
        node->left = grow(left_rows, depth + 1);
        node->right = grow(right_rows, depth + 1);
        return node;
    }

    // All features, or a distinct random subset in draw order (preorder node
    // visitation keeps the stream reproducible).
    std::vector<int> candidate_features() {
        const int p = ds_.n_features;
        std::vector<int> all(p);
        for (int i = 0; i < p; ++i) all[i] = i;
        const int take = cfg_.features_per_split;
        if (take <= 0 || take >= p || rng_ == nullptr) return all;
        std::vector<int> picked;
        picked.reserve(take);
        for (int i = 0; i < take; ++i) {
            const std::size_t j = i + rng_->bounded(p - i);
            std::swap(all[i], all[j]);
            picked.push_back(all[i]);
        }
        return picked;
    }

    static int argmax_label(const std::vector<double>& hist) {
        int best = 0;
        for (int k = 1; k < static_cast<int>(hist.size()); ++k) {
            if (hist[k] > hist[best]) best = k;
        }
        return best;
    }
};

inline std::unique_ptr<TreeNode> fit_tree(const Dataset& ds,
                                          const std::vector<double>& weights,
                                          const TreeConfig& cfg = {},
                                          Rng* rng = nullptr) {
    return TreeBuilder(ds, weights, cfg, rng).build();
}

inline int tree_predict(const TreeNode& root, std::span<const double> sample) {
    const TreeNode* node = &root;
    while (!node->is_leaf()) {
        if (static_cast<std::size_t>(node->feature) >= sample.size()) {
            throw IndexError("tree_predict: sample narrower than training data");
        }
        node = sample[node->feature] <= node->threshold ? node->left.get()
                                                        : node->right.get();
    }
    return node->label;
}

// Flattens root-to-leaf paths into canonical rules. Every sample lands in
// exactly one leaf, so the returned rules partition the feature space.
inline std::vector<Rule> leaves_to_rules(const TreeNode& root, RuleCostPolicy policy) {
    std::vector<Rule> rules;
    std::vector<Condition> path;
    auto walk = [&](auto&& self, const TreeNode& node) -> void {
        if (node.is_leaf()) {
            Rule r;
            r.conditions = path;
            r.label = node.label;
            r = canonicalize(r);
            r.cost = rule_cost(r, policy);
            rules.push_back(std::move(r));
            return;
        }
        path.push_back({node.feature, CondOp::LE, node.threshold});
        self(self, *node.left);
        path.back() = {node.feature, CondOp::GT, node.threshold};
        self(self, *node.right);
        path.pop_back();
    };
    walk(walk, root);
    return rules;
}

// ===== forests =====

struct ForestConfig {
    int n_trees = 100;
    int max_depth = 3;
    int features_per_split = 0;  // <= 0 means all features
    bool bootstrap = true;
    std::uint64_t seed = 13;
};

struct Forest {
    std::vector<std::unique_ptr<TreeNode>> trees;
    ForestConfig config;
    int class_count = 0;
};

inline Forest fit_forest(const Dataset& ds, const ForestConfig& cfg) {
    if (cfg.n_trees <= 0) throw ArgumentError("fit_forest: need at least one tree");
    Forest forest;
    forest.config = cfg;
    forest.class_count = ds.class_count;
    forest.trees.reserve(cfg.n_trees);
    TreeConfig tree_cfg;
    tree_cfg.max_depth = cfg.max_depth;
    tree_cfg.features_per_split = cfg.features_per_split;
    for (int t = 0; t < cfg.n_trees; ++t) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
        std::vector<double> weights;
        if (cfg.bootstrap) {
            weights.assign(ds.n_rows, 0.0);
            for (int i = 0; i < ds.n_rows; ++i) {
                weights[rng.bounded(static_cast<std::size_t>(ds.n_rows))] += 1.0;
            }
        } else {
            weights.assign(ds.n_rows, 1.0);
        }
        forest.trees.push_back(fit_tree(ds, weights, tree_cfg, &rng));
    }
    return forest;
}

// Majority vote; ties resolve to the smallest class id.
inline int forest_predict(const Forest& forest, std::span<const double> sample) {
    std::vector<int> votes(forest.class_count, 0);
    for (const auto& tree : forest.trees) ++votes[tree_predict(*tree, sample)];
    int best = 0;
    for (int k = 1; k < forest.class_count; ++k) {
        if (votes[k] > votes[best]) best = k;
    }
    return best;
}

}  // namespace rulegen
