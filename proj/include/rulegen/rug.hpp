#pragma once

// Rule learning by column generation. The restricted master holds the rules
// found so far; each round solves it, refits a tree against the covering-row
// duals, and admits leaves whose reduced cost clears the improving threshold.
// An exhaustive enumerator and an exact pricing routine over the same rule
// family back the optimality tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rulegen/common.hpp"
#include "rulegen/dataio.hpp"
#include "rulegen/fairness.hpp"
#include "rulegen/lp.hpp"
#include "rulegen/rules.hpp"
#include "rulegen/wtree.hpp"

namespace rulegen {

struct CgConfig {
    double lambda = 1.0;
    int max_depth = 3;
    int max_iterations = 15;
    RuleCostPolicy cost_policy = RuleCostPolicy::Unit;
    double improving_threshold = 1e-6;  // admit columns with rc < -threshold
    std::optional<FairnessSpec> fairness;
    std::uint64_t seed = 13;
};

// Grid used by the CLI tuner.
inline const std::vector<double> kLambdaGrid = {0.1, 1.0, 10.0};
inline const std::vector<int> kDepthGrid = {3, 5, 10};
inline const std::vector<int> kIterationGrid = {5, 15, 30};

struct FitLogEntry {
    int iteration = 0;
    double objective = 0.0;
    int columns_added = 0;
    int pool_size = 0;
    double min_reduced_cost = 0.0;
};

struct RuleModel {
    std::vector<Rule> rules;  // active rules, LP weights attached
    int class_count = 0;
    std::vector<std::string> class_order;
    int fallback_class = 0;  // majority training class, ties to smallest id
    int positive_class = -1;
    double objective = 0.0;  // final master objective
    int pool_size = 0;       // rule columns in the final master
    std::vector<FitLogEntry> fit_log;
};

inline constexpr double kActiveWeightFloor = 1e-10;

namespace detail {

inline int majority_class(const Dataset& ds) {
    std::vector<int> counts(ds.class_count, 0);
    for (const int y : ds.labels) ++counts[y];
    int best = 0;
    for (int k = 1; k < ds.class_count; ++k) {
        if (counts[k] > counts[best]) best = k;
    }
    return best;
}

inline void validate_fit_inputs(const Dataset& ds, const CgConfig& cfg) {
    if (ds.n_rows <= 0) throw ArgumentError("fit: empty dataset");
    if (ds.class_count < 2) throw ArgumentError("fit: need at least two classes");
    if (cfg.lambda < 0.0) throw ArgumentError("fit: lambda must be nonnegative");
    if (cfg.max_iterations < 0) throw ArgumentError("fit: negative iteration limit");
    if (cfg.improving_threshold < 0.0) {
        throw ArgumentError("fit: negative improving threshold");
    }
}

struct PoolState {
    std::vector<Rule> rules;
    std::set<RuleKey> keys;

    // Returns true when the canonical rule is new.
    bool admit(Rule rule) {
        auto key = rule_key(rule);
        if (!keys.insert(std::move(key)).second) return false;
        rules.push_back(std::move(rule));
        return true;
    }
};

inline LpColumn rule_column(const Rule& rule, const SparseColumn& ahat_col,
                            double lambda, int pool_index) {
    LpColumn col;
    col.obj = lambda * rule.cost;
    col.entries = ahat_col;
    col.tag = LpColumn::Tag::RuleWeight;
    col.tag_index = pool_index;
    return col;
}

// `weights` must be pool-indexed (see SimplexSolver::tagged_values): columns
// added during generation sit after the hinge block in the solver's layout,
// so sol.primal order and pool order diverge once any column is appended.
inline RuleModel extract_model(const Dataset& ds, const PoolState& pool,
                               const LpSolution& sol,
                               const std::vector<double>& weights,
                               std::vector<FitLogEntry> fit_log) {
    RuleModel model;
    model.class_count = ds.class_count;
    model.class_order = ds.class_order;
    model.fallback_class = majority_class(ds);
    model.positive_class = ds.positive_class;
    model.objective = sol.objective;
    model.pool_size = static_cast<int>(pool.rules.size());
    model.fit_log = std::move(fit_log);
    for (std::size_t j = 0; j < pool.rules.size(); ++j) {
        if (weights[j] > kActiveWeightFloor) {
            Rule r = pool.rules[j];
            r.weight = weights[j];
            model.rules.push_back(std::move(r));
        }
    }
    return model;
}

}  // namespace detail

// ===== tree-priced column generation =====

inline RuleModel fit_rug(const Dataset& ds, const CgConfig& cfg) {
    detail::validate_fit_inputs(ds, cfg);
    const int n = ds.n_rows;

    std::vector<SlackConstraint> fairness_rows;
    if (cfg.fairness) fairness_rows = build_fairness_rows(ds, *cfg.fairness);

    // Initial pool: leaves of one unit-weight tree.
    detail::PoolState pool;
    {
        const std::vector<double> unit(n, 1.0);
        TreeConfig tc{cfg.max_depth, 0};
        const auto tree = fit_tree(ds, unit, tc);
        for (auto& rule : leaves_to_rules(*tree, cfg.cost_policy)) {
            pool.admit(std::move(rule));
        }
    }

    std::vector<double> costs;
    for (const auto& r : pool.rules) costs.push_back(r.cost);
    LpModel master =
        build_rmp(ahat_columns(pool.rules, ds), costs, cfg.lambda, n, fairness_rows);
    SimplexSolver solver(master);

    std::vector<FitLogEntry> fit_log;
    LpSolution sol = solver.solve();
    if (sol.status != LpStatus::Optimal) {
        throw SolverError("fit_rug: master solve returned non-optimal status");
    }

    for (int t = 0;; ++t) {
        FitLogEntry entry;
        entry.iteration = t;
        entry.objective = sol.objective;
        entry.pool_size = static_cast<int>(pool.rules.size());
        if (t >= cfg.max_iterations) {
            fit_log.push_back(entry);
            break;
        }

        const std::vector<double>& duals = sol.duals;
        double dual_mass = 0.0;
        for (int i = 0; i < n; ++i) dual_mass = std::max(dual_mass, duals[i]);
        if (dual_mass <= 1e-12) {
            // Zero covering duals price every rule at lambda*cost >= 0.
            fit_log.push_back(entry);
            break;
        }

        std::vector<double> weights(duals.begin(), duals.begin() + n);
        for (double& w : weights) w = std::max(w, 0.0);
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
        TreeConfig tc{cfg.max_depth, 0};
        const auto tree = fit_tree(ds, weights, tc, &rng);

        std::vector<Rule> admitted;
        double min_rc = std::numeric_limits<double>::infinity();
        for (auto& rule : leaves_to_rules(*tree, cfg.cost_policy)) {
            const auto cols = ahat_columns({rule}, ds);
            const double rc = reduced_cost(rule.cost, cfg.lambda, cols[0], duals);
            min_rc = std::min(min_rc, rc);
            if (rc < -cfg.improving_threshold && pool.admit(rule)) {
                admitted.push_back(std::move(rule));
            }
        }
        entry.columns_added = static_cast<int>(admitted.size());
        entry.min_reduced_cost = std::isfinite(min_rc) ? min_rc : 0.0;
        entry.pool_size = static_cast<int>(pool.rules.size());
        fit_log.push_back(entry);
        log_debug("cg iteration " + std::to_string(t) + ": objective " +
                  std::to_string(sol.objective) + ", added " +
                  std::to_string(admitted.size()));
        if (admitted.empty()) break;

        std::vector<LpColumn> new_cols;
        const auto ahat_new = ahat_columns(admitted, ds);
        const int base = static_cast<int>(pool.rules.size() - admitted.size());
        for (std::size_t j = 0; j < admitted.size(); ++j) {
            new_cols.push_back(detail::rule_column(admitted[j], ahat_new[j], cfg.lambda,
                                                   base + static_cast<int>(j)));
        }
        solver.add_columns(new_cols);
        sol = solver.solve();
        if (sol.status != LpStatus::Optimal) {
            throw SolverError("fit_rug: master solve returned non-optimal status");
        }
    }
    const auto rule_weights = solver.tagged_values(
        sol, LpColumn::Tag::RuleWeight, static_cast<int>(pool.rules.size()));
    return detail::extract_model(ds, pool, sol, rule_weights, std::move(fit_log));
}

// ===== exhaustive rule family =====

namespace detail {

struct IntervalChoice {
    // 0 = unconstrained, 1 = LE t, 2 = GT t, 3 = GT t1 & LE t2 with t1 < t2
    int kind = 0;
    double lo = 0.0;  // GT threshold
    double hi = 0.0;  // LE threshold
    int conditions() const { return kind == 0 ? 0 : (kind == 3 ? 2 : 1); }
};

// Counts canonical condition sets with at most max_conditions conditions,
// one interval choice per feature, without building them.
inline double count_condition_sets(const std::vector<std::vector<double>>& thresholds,
                                   int max_conditions) {
    std::vector<double> ways(max_conditions + 1, 0.0);
    ways[0] = 1.0;
    for (const auto& t : thresholds) {
        const double nt = static_cast<double>(t.size());
        std::vector<double> next(max_conditions + 1, 0.0);
        for (int c = 0; c <= max_conditions; ++c) {
            if (ways[c] == 0.0) continue;
            next[c] += ways[c];  // skip feature
            if (c + 1 <= max_conditions) next[c + 1] += ways[c] * 2.0 * nt;  // LE or GT
            if (c + 2 <= max_conditions) {
                next[c + 2] += ways[c] * nt * (nt - 1.0) / 2.0;  // bounded interval
            }
            if (next[c] > 1e18) next[c] = 1e18;  // saturate, guard compares anyway
        }
        ways.swap(next);
    }
    double total = 0.0;
    for (const double w : ways) total = std::min(1e18, total + w);
    return total;
}

// Visits every interval-choice combination in deterministic order: features
// ascending; per feature unconstrained, LE by threshold, GT by threshold,
// then bounded intervals by (lo, hi).
template <class Fn>
void enumerate_regions(const std::vector<std::vector<double>>& thresholds,
                       int max_conditions, std::vector<Condition>& conditions,
                       std::size_t feature, Fn&& fn) {
    if (feature == thresholds.size()) {
        fn(conditions);
        return;
    }
    const int f = static_cast<int>(feature);
    const auto& t = thresholds[feature];
    const int room = max_conditions - static_cast<int>(conditions.size());
    enumerate_regions(thresholds, max_conditions, conditions, feature + 1, fn);
    if (room >= 1) {
        for (const double th : t) {
            conditions.push_back({f, CondOp::LE, th});
            enumerate_regions(thresholds, max_conditions, conditions, feature + 1, fn);
            conditions.pop_back();
        }
        for (const double th : t) {
            conditions.push_back({f, CondOp::GT, th});
            enumerate_regions(thresholds, max_conditions, conditions, feature + 1, fn);
            conditions.pop_back();
        }
    }
    if (room >= 2) {
        for (std::size_t a = 0; a < t.size(); ++a) {
            for (std::size_t b = a + 1; b < t.size(); ++b) {
                conditions.push_back({f, CondOp::GT, t[a]});
                conditions.push_back({f, CondOp::LE, t[b]});
                enumerate_regions(thresholds, max_conditions, conditions, feature + 1, fn);
                conditions.pop_back();
                conditions.pop_back();
            }
        }
    }
}

inline std::vector<std::vector<double>> all_split_candidates(const Dataset& ds) {
    std::vector<std::vector<double>> thresholds(ds.n_features);
    for (int f = 0; f < ds.n_features; ++f) {
        thresholds[f] = feature_split_candidates(ds, f);
    }
    return thresholds;
}

}  // namespace detail

inline constexpr double kEnumerationGuard = 1e7;

// Every canonical rule with at most max_conditions conditions whose
// thresholds are split candidates of the dataset, crossed with every class
// label. Intended for small benches; refuses to build more than the guard.
inline std::vector<Rule> enumerate_rules_exact(const Dataset& ds, int max_conditions,
                                               RuleCostPolicy policy) {
    if (ds.n_rows <= 0) throw ArgumentError("enumerate_rules_exact: empty dataset");
    if (max_conditions < 0) throw ArgumentError("enumerate_rules_exact: negative budget");
    const auto thresholds = detail::all_split_candidates(ds);
    const double projected =
        detail::count_condition_sets(thresholds, max_conditions) * ds.class_count;
    if (projected > kEnumerationGuard) {
        throw SizeError("enumerate_rules_exact: projected " + std::to_string(projected) +
                        " rules exceeds guard of " + std::to_string(kEnumerationGuard));
    }
    std::vector<Rule> rules;
    rules.reserve(static_cast<std::size_t>(projected));
    std::vector<Condition> conditions;
    detail::enumerate_regions(
        thresholds, max_conditions, conditions, 0, [&](const std::vector<Condition>& c) {
            for (int label = 0; label < ds.class_count; ++label) {
                Rule r;
                r.conditions = c;
                r.label = label;
                r.cost = rule_cost(r, policy);
                rules.push_back(std::move(r));
            }
        });
    return rules;
}

struct PricedRule {
    Rule rule;
    double reduced_cost = std::numeric_limits<double>::infinity();
    bool found = false;
};

// Exact pricing: scans the same family as enumerate_rules_exact and returns
// the minimum-reduced-cost rule under the given covering duals. Ties keep
// the first rule in enumeration order.
inline PricedRule solve_psp_exact(const Dataset& ds, const std::vector<double>& duals,
                                  double lambda, RuleCostPolicy policy,
                                  int max_conditions) {
    if (ds.n_rows <= 0) throw ArgumentError("solve_psp_exact: empty dataset");
    if (static_cast<int>(duals.size()) < ds.n_rows) {
        throw ArgumentError("solve_psp_exact: dual vector shorter than sample count");
    }
    const auto thresholds = detail::all_split_candidates(ds);
    const double projected =
        detail::count_condition_sets(thresholds, max_conditions) * ds.class_count;
    if (projected > kEnumerationGuard) {
        throw SizeError("solve_psp_exact: projected scan exceeds enumeration guard");
    }
    const int K = ds.class_count;
    PricedRule best;
    std::vector<Condition> conditions;
    std::vector<double> class_mass(K);
    detail::enumerate_regions(
        thresholds, max_conditions, conditions, 0, [&](const std::vector<Condition>& c) {
            std::fill(class_mass.begin(), class_mass.end(), 0.0);
            Rule probe;
            probe.conditions = c;
            double total = 0.0;
            for (int i = 0; i < ds.n_rows; ++i) {
                if (!covers(probe, ds.row(i))) continue;
                class_mass[ds.labels[i]] += duals[i];
                total += duals[i];
            }
            for (int label = 0; label < K; ++label) {
                Rule r;
                r.conditions = c;
                r.label = label;
                r.cost = rule_cost(r, policy);
                const double coverage_term =
                    class_mass[label] - (total - class_mass[label]) / (K - 1);
                const double rc = lambda * r.cost - coverage_term;
                if (rc < best.reduced_cost) {
                    best.rule = std::move(r);
                    best.reduced_cost = rc;
                    best.found = true;
                }
            }
        });
    return best;
}

// Column generation with exact pricing: optimal over the enumerable family
// once it stops, because the final duals price every rule nonnegatively.
inline RuleModel fit_rug_exact(const Dataset& ds, const CgConfig& cfg,
                               int max_conditions) {
    detail::validate_fit_inputs(ds, cfg);
    const int n = ds.n_rows;
    std::vector<SlackConstraint> fairness_rows;
    if (cfg.fairness) fairness_rows = build_fairness_rows(ds, *cfg.fairness);

    detail::PoolState pool;
    {
        Rule fallback_rule;  // always-true rule keeps the initial pool nonempty
        fallback_rule.label = detail::majority_class(ds);
        fallback_rule.cost = rule_cost(fallback_rule, cfg.cost_policy);
        pool.admit(std::move(fallback_rule));
    }
    std::vector<double> costs;
    for (const auto& r : pool.rules) costs.push_back(r.cost);
    LpModel master =
        build_rmp(ahat_columns(pool.rules, ds), costs, cfg.lambda, n, fairness_rows);
    SimplexSolver solver(master);

    std::vector<FitLogEntry> fit_log;
    LpSolution sol = solver.solve();
    if (sol.status != LpStatus::Optimal) {
        throw SolverError("fit_rug_exact: master solve returned non-optimal status");
    }
    const int hard_cap = 100000;
    for (int t = 0; t < hard_cap; ++t) {
        const auto priced =
            solve_psp_exact(ds, sol.duals, cfg.lambda, cfg.cost_policy, max_conditions);
        FitLogEntry entry;
        entry.iteration = t;
        entry.objective = sol.objective;
        entry.min_reduced_cost = priced.found ? priced.reduced_cost : 0.0;
        entry.pool_size = static_cast<int>(pool.rules.size());
        if (!priced.found || priced.reduced_cost >= -cfg.improving_threshold ||
            !pool.admit(priced.rule)) {
            fit_log.push_back(entry);
            break;
        }
        entry.columns_added = 1;
        entry.pool_size = static_cast<int>(pool.rules.size());
        fit_log.push_back(entry);
        const Rule& added = pool.rules.back();
        const auto cols = ahat_columns({added}, ds);
        solver.add_columns({detail::rule_column(
            added, cols[0], cfg.lambda, static_cast<int>(pool.rules.size()) - 1)});
        sol = solver.solve();
        if (sol.status != LpStatus::Optimal) {
            throw SolverError("fit_rug_exact: master solve returned non-optimal status");
        }
    }
    const auto rule_weights = solver.tagged_values(
        sol, LpColumn::Tag::RuleWeight, static_cast<int>(pool.rules.size()));
    return detail::extract_model(ds, pool, sol, rule_weights, std::move(fit_log));
}

}  // namespace rulegen
