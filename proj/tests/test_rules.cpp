#include <catch_amalgamated.hpp>

#include "rulegen/rulegen.hpp"
#include "support.hpp"

using namespace rulegen;

namespace {

Rule make_rule(std::vector<Condition> conds, int label) {
    Rule r;
    r.conditions = std::move(conds);
    r.label = label;
    return r;
}

}  // namespace

TEST_CASE("coverage boundary: LE inclusive, GT strict", "[rules]") {
    const Rule le = make_rule({{0, CondOp::LE, 1.0}}, 0);
    const Rule gt = make_rule({{0, CondOp::GT, 1.0}}, 0);
    const std::vector<double> at{1.0}, below{0.5}, above{1.5};
    REQUIRE(covers(le, at));
    REQUIRE(covers(le, below));
    REQUIRE_FALSE(covers(le, above));
    REQUIRE_FALSE(covers(gt, at));
    REQUIRE(covers(gt, above));
    // The two sides partition every sample.
    for (const auto& s : {at, below, above}) {
        REQUIRE((covers(le, s) != covers(gt, s)));
    }
    const Rule empty = make_rule({}, 0);
    REQUIRE(covers(empty, at));
    const Rule bad = make_rule({{3, CondOp::LE, 0.0}}, 0);
    REQUIRE_THROWS_AS(covers(bad, at), IndexError);
}

TEST_CASE("signed coverage fixtures", "[rules]") {
    const Rule r = make_rule({{0, CondOp::LE, 1.0}}, 1);
    const std::vector<double> in{0.5}, out{2.0};
    REQUIRE(ahat(r, in, 1, 2) == Catch::Approx(1.0));
    REQUIRE(ahat(r, in, 0, 2) == Catch::Approx(-1.0));
    REQUIRE(ahat(r, in, 0, 3) == Catch::Approx(-0.5));
    REQUIRE(ahat(r, in, 0, 5) == Catch::Approx(-0.25));
    REQUIRE(ahat(r, out, 1, 2) == 0.0);
    REQUIRE_THROWS_AS(ahat(r, in, 2, 2), IndexError);
    REQUIRE_THROWS_AS(ahat(make_rule({}, 9), in, 0, 2), IndexError);
    REQUIRE_THROWS_AS(ahat(r, in, 0, 1), ArgumentError);
}

TEST_CASE("signed coverage equals kappa times the class-vector product", "[rules]") {
    const std::vector<double> sample{0.0};
    const Rule always = make_rule({}, 0);
    for (const int K : {2, 3, 5}) {
        for (int rule_label = 0; rule_label < K; ++rule_label) {
            Rule r = always;
            r.label = rule_label;
            const auto rv = class_vector(rule_label, K);
            for (int y = 0; y < K; ++y) {
                const auto yv = class_vector(y, K);
                double dot = 0.0;
                for (int k = 0; k < K; ++k) dot += rv[k] * yv[k];
                REQUIRE(ahat(r, sample, y, K) == Catch::Approx(kappa(K) * dot));
            }
        }
    }
}

TEST_CASE("rule cost policies", "[rules]") {
    const Rule r2 = make_rule({{0, CondOp::LE, 1.0}, {1, CondOp::GT, 0.0}}, 0);
    REQUIRE(rule_cost(r2, RuleCostPolicy::Unit) == 1.0);
    REQUIRE(rule_cost(r2, RuleCostPolicy::Length) == 2.0);
    REQUIRE(rule_cost(r2, RuleCostPolicy::OnePlusLength) == 3.0);
    const Rule r0 = make_rule({}, 0);
    REQUIRE(rule_cost(r0, RuleCostPolicy::Length) == 0.0);
}

TEST_CASE("canonicalize merges per-feature bounds", "[rules]") {
    const Rule r = make_rule({{1, CondOp::LE, 5.0},
                              {0, CondOp::GT, 1.0},
                              {1, CondOp::LE, 3.0},
                              {1, CondOp::GT, 0.5},
                              {0, CondOp::GT, 2.0}},
                             1);
    const Rule c = canonicalize(r);
    REQUIRE(c.conditions.size() == 3);
    REQUIRE(c.conditions[0].feature == 0);
    REQUIRE(c.conditions[0].op == CondOp::GT);
    REQUIRE(c.conditions[0].threshold == 2.0);  // max of GT thresholds
    REQUIRE(c.conditions[1].feature == 1);
    REQUIRE(c.conditions[1].op == CondOp::LE);
    REQUIRE(c.conditions[1].threshold == 3.0);  // min of LE thresholds
    REQUIRE(c.conditions[2].feature == 1);
    REQUIRE(c.conditions[2].op == CondOp::GT);
    REQUIRE(c.conditions[2].threshold == 0.5);
    REQUIRE(c.label == 1);
}

TEST_CASE("canonicalize rejects empty intervals, keeps touching ones apart", "[rules]") {
    REQUIRE_THROWS_AS(
        canonicalize(make_rule({{0, CondOp::GT, 2.0}, {0, CondOp::LE, 1.0}}, 0)),
        InfeasibleRuleError);
    REQUIRE_THROWS_AS(
        canonicalize(make_rule({{0, CondOp::GT, 1.0}, {0, CondOp::LE, 1.0}}, 0)),
        InfeasibleRuleError);  // (1, 1] is empty
    REQUIRE_NOTHROW(
        canonicalize(make_rule({{0, CondOp::GT, 1.0}, {0, CondOp::LE, 1.5}}, 0)));
    REQUIRE_THROWS_AS(canonicalize(make_rule({{-1, CondOp::LE, 0.0}}, 0)), IndexError);
}

TEST_CASE("canonicalize is idempotent and preserves coverage", "[rules]") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        Rule r;
        const int n_conds = 1 + static_cast<int>(rng.bounded(4));
        for (int c = 0; c < n_conds; ++c) {
            Condition cond;
            cond.feature = static_cast<int>(rng.bounded(3));
            cond.op = rng.bounded(2) == 0 ? CondOp::LE : CondOp::GT;
            cond.threshold = static_cast<double>(rng.bounded(5)) * 0.5;
            r.conditions.push_back(cond);
        }
        r.label = static_cast<int>(rng.bounded(2));
        Rule c1;
        try {
            c1 = canonicalize(r);
        } catch (const InfeasibleRuleError&) {
            continue;  // contradictory draw; nothing to compare
        }
        const Rule c2 = canonicalize(c1);
        REQUIRE(rule_key(c1) == rule_key(c2));
        for (int trial2 = 0; trial2 < 20; ++trial2) {
            const std::vector<double> sample{
                static_cast<double>(rng.bounded(6)) * 0.5 - 0.5,
                static_cast<double>(rng.bounded(6)) * 0.5 - 0.5,
                static_cast<double>(rng.bounded(6)) * 0.5 - 0.5};
            REQUIRE(covers(r, sample) == covers(c1, sample));
        }
    }
}

TEST_CASE("rule keys deduplicate equivalent condition orders", "[rules]") {
    const Rule a =
        canonicalize(make_rule({{0, CondOp::LE, 1.0}, {1, CondOp::GT, 2.0}}, 1));
    const Rule b =
        canonicalize(make_rule({{1, CondOp::GT, 2.0}, {0, CondOp::LE, 1.0}}, 1));
    REQUIRE(rule_key(a) == rule_key(b));
    Rule c = b;
    c.label = 0;
    REQUIRE(rule_key(a) != rule_key(canonicalize(c)));
}

TEST_CASE("coverage matrix and signed columns agree with covers", "[rules]") {
    const Dataset ds = support::make_synthetic(30, 4, 3, 11);
    std::vector<Rule> rules;
    rules.push_back(make_rule({{0, CondOp::LE, 0.5}}, 0));
    rules.push_back(make_rule({{1, CondOp::GT, 1.5}, {2, CondOp::LE, 0.5}}, 2));
    rules.push_back(make_rule({}, 1));
    const CoverageMatrix cm = coverage_matrix(rules, ds);
    REQUIRE(cm.n_rows == 30);
    REQUIRE(cm.n_rules == 3);
    const auto cols = ahat_columns(rules, ds);
    for (int j = 0; j < 3; ++j) {
        std::size_t seen = 0;
        for (int i = 0; i < ds.n_rows; ++i) {
            const bool cov = covers(rules[j], ds.row(i));
            REQUIRE(cm.at(i, j) == cov);
            if (cov) {
                REQUIRE(seen < cols[j].size());
                REQUIRE(cols[j][seen].first == i);
                REQUIRE(cols[j][seen].second ==
                        Catch::Approx(ahat(rules[j], ds.row(i), ds.labels[i],
                                           ds.class_count)));
                ++seen;
            }
        }
        REQUIRE(seen == cols[j].size());
    }
    Rule bad = make_rule({}, 5);
    REQUIRE_THROWS_AS(ahat_columns({bad}, ds), IndexError);
}

TEST_CASE("rule json round trip", "[rules]") {
    Rule r = make_rule({{2, CondOp::GT, 1.25}, {0, CondOp::LE, 3.5}}, 1);
    r.cost = 2.0;
    r.weight = 0.75;
    nlohmann::ordered_json j;
    to_json(j, r);
    Rule back;
    from_json(j, back);
    REQUIRE(rule_key(canonicalize(back)) == rule_key(canonicalize(r)));
    REQUIRE(back.cost == 2.0);
    REQUIRE(back.weight == 0.75);
    // cost/weight default when absent
    nlohmann::json bare = {{"conditions", nlohmann::json::array()}, {"label", 0}};
    Rule d;
    from_json(bare, d);
    REQUIRE(d.cost == 1.0);
    REQUIRE(d.weight == 0.0);
    nlohmann::json bad_op = {
        {"conditions", {{{"f", 0}, {"op", "eq"}, {"t", 1.0}}}}, {"label", 0}};
    Rule e;
    REQUIRE_THROWS_AS(from_json(bad_op, e), DataError);
}

TEST_CASE("rule formatting names features and classes", "[rules]") {
    const Dataset ds = support::make_separable(2);
    Rule r = make_rule({{0, CondOp::LE, 1.0}, {1, CondOp::GT, 0.5}}, 1);
    const std::string s = format_rule(r, ds.feature_meta, ds.class_order);
    REQUIRE(s == "f0<=1 & f1>0.5 -> b");
    const std::string always = format_rule(make_rule({}, 0), ds.feature_meta, ds.class_order);
    REQUIRE(always == "(always) -> a");
}
