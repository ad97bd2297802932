#pragma once

// Rule extraction from tree ensembles: harvest every leaf as a candidate
// rule, deduplicate, then solve the master LP once over the whole pool. The
// LP keeps the few leaves worth their cost and zeroes the rest.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rulegen/common.hpp"
#include "rulegen/dataio.hpp"
#include "rulegen/fairness.hpp"
#include "rulegen/lp.hpp"
#include "rulegen/rug.hpp"
#include "rulegen/rules.hpp"
#include "rulegen/wtree.hpp"

namespace rulegen {

struct RuxConfig {
    double lambda = 1.0;
    RuleCostPolicy cost_policy = RuleCostPolicy::Length;
    int n_trees = 100;
    int max_depth = 3;
    int features_per_split = 0;  // <= 0 resolves to round(sqrt(p))
    bool bootstrap = true;
    std::uint64_t seed = 13;
    std::optional<FairnessSpec> fairness;
};

struct RulePool {
    std::vector<Rule> rules;  // deduplicated canonical rules
    int source_leaves = 0;    // leaves before deduplication
};

inline RulePool harvest_pool(const Forest& forest, RuleCostPolicy policy) {
    RulePool pool;
    detail::PoolState state;
    for (const auto& tree : forest.trees) {
        for (auto& rule : leaves_to_rules(*tree, policy)) {
            ++pool.source_leaves;
            state.admit(std::move(rule));
        }
    }
    pool.rules = std::move(state.rules);
    return pool;
}

// Single master solve over a fixed pool; shared by the forest path and the
// external-pool path.
inline RuleModel fit_rux_on_pool(const Dataset& ds, const std::vector<Rule>& pool_rules,
                                 double lambda,
                                 const std::optional<FairnessSpec>& fairness = {}) {
    if (ds.n_rows <= 0) throw ArgumentError("fit_rux: empty dataset");
    if (pool_rules.empty()) throw ArgumentError("fit_rux: empty rule pool");
    if (lambda < 0.0) throw ArgumentError("fit_rux: lambda must be nonnegative");
    for (const auto& r : pool_rules) {
        if (r.label < 0 || r.label >= ds.class_count) {
            throw ArgumentError("fit_rux: pool rule labels a class outside the dataset");
        }
        if (r.cost < 0.0) throw ArgumentError("fit_rux: negative rule cost in pool");
    }
    std::vector<SlackConstraint> fairness_rows;
    if (fairness) fairness_rows = build_fairness_rows(ds, *fairness);

    std::vector<double> costs;
    costs.reserve(pool_rules.size());
    for (const auto& r : pool_rules) costs.push_back(r.cost);
    const LpModel master = build_rmp(ahat_columns(pool_rules, ds), costs, lambda,
                                     ds.n_rows, fairness_rows);
    SimplexSolver solver(master);
    const LpSolution sol = solver.solve();
    if (sol.status != LpStatus::Optimal) {
        throw SolverError("fit_rux: master solve returned non-optimal status");
    }

    RuleModel model;
    model.class_count = ds.class_count;
    model.class_order = ds.class_order;
    model.fallback_class = detail::majority_class(ds);
    model.positive_class = ds.positive_class;
    model.objective = sol.objective;
    model.pool_size = static_cast<int>(pool_rules.size());
    FitLogEntry entry;
    entry.objective = sol.objective;
    entry.pool_size = model.pool_size;
    model.fit_log.push_back(entry);
    const auto rule_weights = solver.tagged_values(
        sol, LpColumn::Tag::RuleWeight, static_cast<int>(pool_rules.size()));
    for (std::size_t j = 0; j < pool_rules.size(); ++j) {
        if (rule_weights[j] > kActiveWeightFloor) {
            Rule r = pool_rules[j];
            r.weight = rule_weights[j];
            model.rules.push_back(std::move(r));
        }
    }
    return model;
}

inline RuleModel fit_rux(const Dataset& ds, const Forest& forest,
                         const RuxConfig& cfg) {
    const RulePool pool = harvest_pool(forest, cfg.cost_policy);
    return fit_rux_on_pool(ds, pool.rules, cfg.lambda, cfg.fairness);
}

inline RuleModel fit_rux(const Dataset& ds, const RuxConfig& cfg) {
    ForestConfig fc;
    fc.n_trees = cfg.n_trees;
    fc.max_depth = cfg.max_depth;
    fc.features_per_split = cfg.features_per_split;
    if (fc.features_per_split <= 0) {
        int p = 1;
        while ((p + 1) * (p + 1) <= ds.n_features) ++p;
        fc.features_per_split = p;
    }
    fc.bootstrap = cfg.bootstrap;
    fc.seed = cfg.seed;
    const Forest forest = fit_forest(ds, fc);
    return fit_rux(ds, forest, cfg);
}

}  // namespace rulegen
