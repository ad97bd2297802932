#pragma once

// Group fairness: LP rows that bound hinge-loss gaps between groups, and the
// prediction-based unfairness metrics they relax.
//
// DMC bounds, per class, the gap between group-conditional mean hinge slacks;
// ODM bounds the gap between overall group mean hinge slacks. Each unordered
// group pair contributes two rows (one per direction), so the row counts are
// 2*K*G*(G-1)/2 and 2*G*(G-1)/2 before empty-cell skips.

#include <cmath>
#include <string>
#include <vector>

#include "rulegen/common.hpp"
#include "rulegen/dataio.hpp"
#include "rulegen/lp.hpp"

namespace rulegen {

enum class FairnessMetric { DMC, ODM };

struct FairnessSpec {
    FairnessMetric metric = FairnessMetric::DMC;
    double epsilon = 0.05;
};

inline std::string fairness_metric_name(FairnessMetric m) {
    return m == FairnessMetric::DMC ? "dmc" : "odm";
}

namespace detail {

inline void require_groups(const Dataset& ds, const char* where) {
    if (!ds.has_groups()) {
        throw ArgumentError(std::string(where) + ": dataset has no group column");
    }
    if (ds.group_count() < 2) {
        throw ArgumentError(std::string(where) + ": need at least two groups");
    }
}

// Both directed rows for one cell pair: mean(v over a) - mean(v over b) <= eps
// and the reverse.
inline void emit_pair_rows(const std::vector<int>& cell_a, const std::vector<int>& cell_b,
                           double epsilon, std::vector<SlackConstraint>& out) {
    SlackConstraint fwd;
    fwd.rhs = epsilon;
    const double wa = 1.0 / cell_a.size();
    const double wb = 1.0 / cell_b.size();
    for (const int i : cell_a) fwd.coeffs.emplace_back(i, wa);
    for (const int i : cell_b) fwd.coeffs.emplace_back(i, -wb);
    SlackConstraint rev;
    rev.rhs = epsilon;
    rev.coeffs.reserve(fwd.coeffs.size());
    for (const auto& [i, c] : fwd.coeffs) rev.coeffs.emplace_back(i, -c);
    out.push_back(std::move(fwd));
    out.push_back(std::move(rev));
}

}  // namespace detail

inline std::vector<SlackConstraint> build_dmc_rows(const Dataset& ds, double epsilon) {
    detail::require_groups(ds, "build_dmc_rows");
    if (epsilon < 0.0) throw ArgumentError("build_dmc_rows: negative epsilon");
    const int K = ds.class_count;
    const int G = ds.group_count();
    std::vector<std::vector<std::vector<int>>> cells(K, std::vector<std::vector<int>>(G));
    for (int i = 0; i < ds.n_rows; ++i) cells[ds.labels[i]][ds.groups[i]].push_back(i);
    std::vector<SlackConstraint> rows;
    for (int k = 0; k < K; ++k) {
        for (int g = 0; g < G; ++g) {
            for (int h = g + 1; h < G; ++h) {
                if (cells[k][g].empty() || cells[k][h].empty()) {
                    log_warn("build_dmc_rows: class " + std::to_string(k) + " pair (" +
                             std::to_string(g) + "," + std::to_string(h) +
                             ") has an empty cell; pair skipped");
                    continue;
                }
                detail::emit_pair_rows(cells[k][g], cells[k][h], epsilon, rows);
            }
        }
    }
    return rows;
}

inline std::vector<SlackConstraint> build_odm_rows(const Dataset& ds, double epsilon) {
    detail::require_groups(ds, "build_odm_rows");
    if (epsilon < 0.0) throw ArgumentError("build_odm_rows: negative epsilon");
    const int G = ds.group_count();
    std::vector<std::vector<int>> cells(G);
    for (int i = 0; i < ds.n_rows; ++i) cells[ds.groups[i]].push_back(i);
    std::vector<SlackConstraint> rows;
    for (int g = 0; g < G; ++g) {
        for (int h = g + 1; h < G; ++h) {
            if (cells[g].empty() || cells[h].empty()) {
                log_warn("build_odm_rows: group pair (" + std::to_string(g) + "," +
                         std::to_string(h) + ") has an empty cell; pair skipped");
                continue;
            }
            detail::emit_pair_rows(cells[g], cells[h], epsilon, rows);
        }
    }
    return rows;
}

inline std::vector<SlackConstraint> build_fairness_rows(const Dataset& ds,
                                                        const FairnessSpec& spec) {
    return spec.metric == FairnessMetric::DMC ? build_dmc_rows(ds, spec.epsilon)
                                              : build_odm_rows(ds, spec.epsilon);
}

// ===== prediction-based metrics =====

// Sum over classes of the largest pairwise gap in group-conditional
// misclassification rates. Empty cells are excluded from their class's max.
inline double unfairness_dmc(const std::vector<int>& predictions,
                             const std::vector<int>& labels,
                             const std::vector<int>& groups, int class_count,
                             int group_count) {
    if (predictions.size() != labels.size() || labels.size() != groups.size()) {
        throw ArgumentError("unfairness_dmc: size mismatch");
    }
    if (group_count < 2) throw ArgumentError("unfairness_dmc: need at least two groups");
    const int K = class_count;
    const int G = group_count;
    std::vector<double> wrong(static_cast<std::size_t>(K) * G, 0.0);
    std::vector<double> count(static_cast<std::size_t>(K) * G, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::size_t cell = static_cast<std::size_t>(labels[i]) * G + groups[i];
        count[cell] += 1.0;
        if (predictions[i] != labels[i]) wrong[cell] += 1.0;
    }
    double total = 0.0;
    for (int k = 0; k < K; ++k) {
        double worst = 0.0;
        for (int g = 0; g < G; ++g) {
            const std::size_t cg = static_cast<std::size_t>(k) * G + g;
            if (count[cg] == 0.0) continue;
            for (int h = g + 1; h < G; ++h) {
                const std::size_t ch = static_cast<std::size_t>(k) * G + h;
                if (count[ch] == 0.0) continue;
                const double gap = std::fabs(wrong[cg] / count[cg] - wrong[ch] / count[ch]);
                worst = std::max(worst, gap);
            }
        }
        total += worst;
    }
    return total;
}

// Largest pairwise gap in overall group misclassification rates. An empty
// group has no rate, so it is an error here.
inline double unfairness_odm(const std::vector<int>& predictions,
                             const std::vector<int>& labels,
                             const std::vector<int>& groups, int group_count) {
    if (predictions.size() != labels.size() || labels.size() != groups.size()) {
        throw ArgumentError("unfairness_odm: size mismatch");
    }
    if (group_count < 2) throw ArgumentError("unfairness_odm: need at least two groups");
    std::vector<double> wrong(group_count, 0.0);
    std::vector<double> count(group_count, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        count[groups[i]] += 1.0;
        if (predictions[i] != labels[i]) wrong[groups[i]] += 1.0;
    }
    for (int g = 0; g < group_count; ++g) {
        if (count[g] == 0.0) {
            throw ArgumentError("unfairness_odm: group " + std::to_string(g) +
                                " has no samples");
        }
    }
    double worst = 0.0;
    for (int g = 0; g < group_count; ++g) {
        for (int h = g + 1; h < group_count; ++h) {
            worst = std::max(worst, std::fabs(wrong[g] / count[g] - wrong[h] / count[h]));
        }
    }
    return worst;
}

}  // namespace rulegen
