#pragma once

// Rule representation and coverage algebra. A rule is a conjunction of
// axis-aligned threshold conditions plus a predicted class; the signed
// coverage coefficient feeds the LP columns.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rulegen/common.hpp"
#include "rulegen/dataio.hpp"

namespace rulegen {

enum class CondOp { LE, GT };

struct Condition {
    int feature = 0;
    CondOp op = CondOp::LE;
    double threshold = 0.0;
};

struct Rule {
    std::vector<Condition> conditions;  // empty = always true
    int label = 0;
    double cost = 1.0;
    double weight = 0.0;
};

enum class RuleCostPolicy { Unit, Length, OnePlusLength };

inline double rule_cost(const Rule& rule, RuleCostPolicy policy) {
    const double len = static_cast<double>(rule.conditions.size());
    switch (policy) {
        case RuleCostPolicy::Unit: return 1.0;
        case RuleCostPolicy::Length: return len;
        case RuleCostPolicy::OnePlusLength: return 1.0 + len;
    }
    throw ArgumentError("rule_cost: unknown policy");
}

inline bool condition_holds(const Condition& c, std::span<const double> sample) {
    if (c.feature < 0 || static_cast<std::size_t>(c.feature) >= sample.size()) {
        throw IndexError("covers: condition references feature " + std::to_string(c.feature) +
                         " but sample has " + std::to_string(sample.size()) + " features");
    }
    const double v = sample[static_cast<std::size_t>(c.feature)];
    return c.op == CondOp::LE ? v <= c.threshold : v > c.threshold;
}

// LE is inclusive, GT strict, so the two sides of one threshold partition.
inline bool covers(const Rule& rule, std::span<const double> sample) {
    for (const auto& c : rule.conditions) {
        if (!condition_holds(c, sample)) return false;
    }
    return true;
}

// Signed coverage coefficient: 0 when the rule misses the sample, +1 when it
// covers and the labels agree, -1/(K-1) when it covers and they disagree.
// This equals kappa * <rule class vector, sample class vector> for covered
// samples.
inline double ahat(const Rule& rule, std::span<const double> sample, int sample_label,
                   int class_count) {
    if (class_count < 2) throw ArgumentError("ahat: need at least 2 classes");
    if (sample_label < 0 || sample_label >= class_count) {
        throw IndexError("ahat: sample label out of range");
    }
    if (rule.label < 0 || rule.label >= class_count) {
        throw IndexError("ahat: rule label out of range");
    }
    if (!covers(rule, sample)) return 0.0;
    return rule.label == sample_label ? 1.0 : -1.0 / (class_count - 1);
}

// ===== canonical form =====

// Merges conditions per feature into one closed-open interval (lo, hi]:
// LE thresholds keep the minimum, GT thresholds keep the maximum. Rules whose
// interval is empty reject every sample; canonicalize refuses them.
inline Rule canonicalize(const Rule& rule) {
    std::map<int, std::pair<bool, double>> le;  // feature -> (set, min threshold)
    std::map<int, std::pair<bool, double>> gt;  // feature -> (set, max threshold)
    for (const auto& c : rule.conditions) {
        if (c.feature < 0) throw IndexError("canonicalize: negative feature index");
        if (c.op == CondOp::LE) {
            auto& slot = le[c.feature];
            if (!slot.first || c.threshold < slot.second) slot = {true, c.threshold};
        } else {
            auto& slot = gt[c.feature];
            if (!slot.first || c.threshold > slot.second) slot = {true, c.threshold};
        }
    }
    Rule out;
    out.label = rule.label;
    out.cost = rule.cost;
    out.weight = rule.weight;
    std::vector<int> features;
    for (const auto& [f, _] : le) features.push_back(f);
    for (const auto& [f, _] : gt) features.push_back(f);
    std::sort(features.begin(), features.end());
    features.erase(std::unique(features.begin(), features.end()), features.end());
    for (const int f : features) {
        const auto le_it = le.find(f);
        const auto gt_it = gt.find(f);
        if (le_it != le.end() && gt_it != gt.end() &&
            gt_it->second.second >= le_it->second.second) {
            throw InfeasibleRuleError("canonicalize: feature " + std::to_string(f) +
                                      " interval (" + std::to_string(gt_it->second.second) +
                                      ", " + std::to_string(le_it->second.second) +
                                      "] is empty");
        }
        if (le_it != le.end()) {
            out.conditions.push_back({f, CondOp::LE, le_it->second.second});
        }
        if (gt_it != gt.end()) {
            out.conditions.push_back({f, CondOp::GT, gt_it->second.second});
        }
    }
    return out;
}

// Identity key for deduplication; equal keys mean identical coverage plus
// identical prediction. Assumes canonical form.
using RuleKey = std::pair<std::vector<std::tuple<int, int, double>>, int>;

inline RuleKey rule_key(const Rule& rule) {
    RuleKey key;
    key.second = rule.label;
    key.first.reserve(rule.conditions.size());
    for (const auto& c : rule.conditions) {
        key.first.emplace_back(c.feature, static_cast<int>(c.op), c.threshold);
    }
    return key;
}

// ===== coverage =====

struct CoverageMatrix {
    int n_rows = 0;   // samples
    int n_rules = 0;  // rules
    std::vector<std::uint8_t> bits;  // row-major

    bool at(int row, int rule) const {
        return bits[static_cast<std::size_t>(row) * n_rules + rule] != 0;
    }
};

inline CoverageMatrix coverage_matrix(const std::vector<Rule>& rules, const Dataset& ds) {
    CoverageMatrix m;
    m.n_rows = ds.n_rows;
    m.n_rules = static_cast<int>(rules.size());
    m.bits.assign(static_cast<std::size_t>(m.n_rows) * m.n_rules, 0);
    for (int i = 0; i < ds.n_rows; ++i) {
        const auto row = ds.row(i);
        for (int j = 0; j < m.n_rules; ++j) {
            if (covers(rules[j], row)) {
                m.bits[static_cast<std::size_t>(i) * m.n_rules + j] = 1;
            }
        }
    }
    return m;
}

// Sparse signed-coverage column per rule: entries (sample, ahat) over covered
// samples only. These are exactly the LP constraint columns.
inline std::vector<SparseColumn> ahat_columns(const std::vector<Rule>& rules,
                                              const Dataset& ds) {
    const double mismatch = -1.0 / (ds.class_count - 1);
    std::vector<SparseColumn> cols(rules.size());
    for (std::size_t j = 0; j < rules.size(); ++j) {
        if (rules[j].label < 0 || rules[j].label >= ds.class_count) {
            throw IndexError("ahat_columns: rule label out of range");
        }
        for (int i = 0; i < ds.n_rows; ++i) {
            if (!covers(rules[j], ds.row(i))) continue;
            cols[j].emplace_back(i, rules[j].label == ds.labels[i] ? 1.0 : mismatch);
        }
    }
    return cols;
}

// ===== serialization =====

inline void to_json(nlohmann::ordered_json& j, const Condition& c) {
    j = nlohmann::ordered_json{
        {"f", c.feature}, {"op", c.op == CondOp::LE ? "le" : "gt"}, {"t", c.threshold}};
}

inline void from_json(const nlohmann::json& j, Condition& c) {
    c.feature = j.at("f").get<int>();
    const std::string op = j.at("op").get<std::string>();
    if (op == "le") c.op = CondOp::LE;
    else if (op == "gt") c.op = CondOp::GT;
    else throw DataError("rule json: unknown op '" + op + "'");
    c.threshold = j.at("t").get<double>();
}

inline void to_json(nlohmann::ordered_json& j, const Rule& r) {
    nlohmann::ordered_json conds = nlohmann::ordered_json::array();
    for (const auto& c : r.conditions) {
        nlohmann::ordered_json cj;
        to_json(cj, c);
        conds.push_back(std::move(cj));
    }
    j = nlohmann::ordered_json{
        {"conditions", std::move(conds)}, {"label", r.label}, {"cost", r.cost},
        {"weight", r.weight}};
}

inline void from_json(const nlohmann::json& j, Rule& r) {
    r.conditions.clear();
    for (const auto& cj : j.at("conditions")) {
        Condition c;
        from_json(cj, c);
        r.conditions.push_back(c);
    }
    r.label = j.at("label").get<int>();
    r.cost = j.value("cost", 1.0);
    r.weight = j.value("weight", 0.0);
}

// Human-readable form for reports: "f3<=1.5 & f7>0.5 -> class 2".
inline std::string format_rule(const Rule& r, const std::vector<FeatureMeta>& meta,
                               const std::vector<std::string>& class_order) {
    std::string s;
    if (r.conditions.empty()) {
        s = "(always)";
    } else {
        for (std::size_t i = 0; i < r.conditions.size(); ++i) {
            const auto& c = r.conditions[i];
            if (i > 0) s += " & ";
            if (c.feature >= 0 && static_cast<std::size_t>(c.feature) < meta.size()) {
                s += meta[c.feature].name;
            } else {
                s += "f" + std::to_string(c.feature);
            }
            s += c.op == CondOp::LE ? "<=" : ">";
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%g", c.threshold);
            s += buf;
        }
    }
    s += " -> ";
    if (r.label >= 0 && static_cast<std::size_t>(r.label) < class_order.size()) {
        s += class_order[r.label];
    } else {
        s += "class " + std::to_string(r.label);
    }
    return s;
}

}  // namespace rulegen
