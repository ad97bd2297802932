#pragma once

// Prediction and evaluation: weighted class-vector voting with a majority
// fallback for uncovered samples, the hinge loss the LP minimizes, summary
// metrics, and a stratified cross-validation harness.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rulegen/common.hpp"
#include "rulegen/dataio.hpp"
#include "rulegen/fairness.hpp"
#include "rulegen/rug.hpp"
#include "rulegen/rules.hpp"

namespace rulegen {

struct Prediction {
    int label = 0;
    bool used_fallback = false;
    std::vector<double> score;       // weighted sum of rule class vectors
    std::vector<int> covering_rules; // indices into the model's active rules
};

inline Prediction predict(const RuleModel& model, std::span<const double> sample) {
    Prediction p;
    const int K = model.class_count;
    p.score.assign(K, 0.0);
    for (std::size_t j = 0; j < model.rules.size(); ++j) {
        const Rule& r = model.rules[j];
        if (!covers(r, sample)) continue;
        p.covering_rules.push_back(static_cast<int>(j));
        const double off = -r.weight / (K - 1);
        for (int k = 0; k < K; ++k) p.score[k] += off;
        p.score[r.label] += r.weight - off;
    }
    if (p.covering_rules.empty()) {
        p.used_fallback = true;
        p.label = model.fallback_class;
        return p;
    }
    int best = 0;
    for (int k = 1; k < K; ++k) {
        if (p.score[k] > p.score[best]) best = k;
    }
    p.label = best;
    return p;
}

// Multiclass hinge: max(0, 1 - kappa * <score, class_vector(label)>).
// A zero score loses 1; a unit-weight correct rule loses 0.
inline double hinge_loss(const std::vector<double>& score, int true_label,
                         int class_count) {
    const auto v = class_vector(true_label, class_count);
    if (score.size() != v.size()) throw ArgumentError("hinge_loss: score length mismatch");
    double dot = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) dot += score[k] * v[k];
    return std::max(0.0, 1.0 - kappa(class_count) * dot);
}

inline double f1_from_counts(double tp, double fp, double fn) {
    const double denom = tp + 0.5 * (fp + fn);
    if (denom == 0.0) return 0.0;
    return tp / denom;
}

struct Metrics {
    int n = 0;
    double accuracy_pct = 0.0;
    std::optional<double> f1_pct;  // binary problems only
    int nor = 0;                   // active rules
    double arl = 0.0;              // mean conditions per active rule
    double anorps = 0.0;           // mean covering active rules per sample
    double fallback_rate = 0.0;
    std::optional<double> fairness_dmc_pct;
    std::optional<double> fairness_odm_pct;
    int class_count = 0;
    std::vector<int> confusion;  // row-major, rows = true class
};

// Scores a fitted model against labeled data. Fairness percentages appear
// whenever the dataset carries groups.
inline Metrics evaluate(const RuleModel& model, const Dataset& ds) {
    if (ds.n_rows <= 0) throw ArgumentError("evaluate: empty dataset");
    if (ds.labels.empty()) throw DataError("evaluate: dataset has no labels");
    const int K = model.class_count;
    Metrics m;
    m.n = ds.n_rows;
    m.class_count = K;
    m.confusion.assign(static_cast<std::size_t>(K) * K, 0);

    std::vector<int> preds(ds.n_rows);
    double covering_total = 0.0;
    int fallbacks = 0;
    int correct = 0;
    for (int i = 0; i < ds.n_rows; ++i) {
        const Prediction p = predict(model, ds.row(i));
        preds[i] = p.label;
        covering_total += static_cast<double>(p.covering_rules.size());
        if (p.used_fallback) ++fallbacks;
        if (p.label == ds.labels[i]) ++correct;
        ++m.confusion[static_cast<std::size_t>(ds.labels[i]) * K + p.label];
    }
    m.accuracy_pct = 100.0 * correct / ds.n_rows;
    m.fallback_rate = static_cast<double>(fallbacks) / ds.n_rows;
    m.anorps = covering_total / ds.n_rows;
    m.nor = static_cast<int>(model.rules.size());
    if (!model.rules.empty()) {
        double conds = 0.0;
        for (const auto& r : model.rules) conds += static_cast<double>(r.conditions.size());
        m.arl = conds / static_cast<double>(model.rules.size());
    }
    if (K == 2) {
        const int pos = ds.positive_class >= 0
                            ? ds.positive_class
                            : (model.positive_class >= 0 ? model.positive_class : 1);
        double tp = 0, fp = 0, fn = 0;
        for (int i = 0; i < ds.n_rows; ++i) {
            const bool is_pos = ds.labels[i] == pos;
            const bool said_pos = preds[i] == pos;
            if (is_pos && said_pos) tp += 1;
            else if (!is_pos && said_pos) fp += 1;
            else if (is_pos && !said_pos) fn += 1;
        }
        m.f1_pct = 100.0 * f1_from_counts(tp, fp, fn);
    }
    if (ds.has_groups() && ds.group_count() >= 2) {
        m.fairness_dmc_pct =
            100.0 * (1.0 - unfairness_dmc(preds, ds.labels, ds.groups, K,
                                          ds.group_count()));
        m.fairness_odm_pct =
            100.0 * (1.0 - unfairness_odm(preds, ds.labels, ds.groups,
                                          ds.group_count()));
    }
    return m;
}

inline nlohmann::ordered_json metrics_to_json(const Metrics& m) {
    nlohmann::ordered_json j;
    j["n"] = m.n;
    j["accuracy_pct"] = m.accuracy_pct;
    if (m.f1_pct) j["f1_pct"] = *m.f1_pct;
    else j["f1_pct"] = nullptr;
    j["nor"] = m.nor;
    j["arl"] = m.arl;
    j["anorps"] = m.anorps;
    j["fallback_rate"] = m.fallback_rate;
    if (m.fairness_dmc_pct) j["fairness_dmc_pct"] = *m.fairness_dmc_pct;
    if (m.fairness_odm_pct) j["fairness_odm_pct"] = *m.fairness_odm_pct;
    j["confusion"] = m.confusion;
    j["class_count"] = m.class_count;
    return j;
}

inline std::string format_metrics(const Metrics& m) {
    std::ostringstream os;
    char line[128];
    std::snprintf(line, sizeof(line), "samples            %d\n", m.n);
    os << line;
    std::snprintf(line, sizeof(line), "accuracy           %.2f%%\n", m.accuracy_pct);
    os << line;
    if (m.f1_pct) {
        std::snprintf(line, sizeof(line), "f1                 %.2f%%\n", *m.f1_pct);
        os << line;
    }
    std::snprintf(line, sizeof(line), "rules (NoR)        %d\n", m.nor);
    os << line;
    std::snprintf(line, sizeof(line), "avg rule length    %.2f\n", m.arl);
    os << line;
    std::snprintf(line, sizeof(line), "rules per sample   %.2f\n", m.anorps);
    os << line;
    std::snprintf(line, sizeof(line), "fallback rate      %.2f%%\n",
                  100.0 * m.fallback_rate);
    os << line;
    if (m.fairness_dmc_pct) {
        std::snprintf(line, sizeof(line), "fairness (dmc)     %.2f%%\n",
                      *m.fairness_dmc_pct);
        os << line;
    }
    if (m.fairness_odm_pct) {
        std::snprintf(line, sizeof(line), "fairness (odm)     %.2f%%\n",
                      *m.fairness_odm_pct);
        os << line;
    }
    return os.str();
}

// ===== cross-validation =====

// Stratified fold ids: per class, shuffled indices dealt round-robin with a
// single running counter, so fold sizes differ by at most one.
inline std::vector<int> stratified_fold_assignment(const std::vector<int>& labels,
                                                   int folds, std::uint64_t seed) {
    if (folds < 2) throw ArgumentError("cv: need at least two folds");
    if (static_cast<std::size_t>(folds) > labels.size()) {
        throw ArgumentError("cv: more folds than samples");
    }
    int max_label = 0;
    for (const int y : labels) max_label = std::max(max_label, y);
    std::vector<std::vector<int>> by_class(max_label + 1);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_class[labels[i]].push_back(static_cast<int>(i));
    }
    std::vector<int> fold_of(labels.size(), 0);
    int counter = 0;
    for (std::size_t k = 0; k < by_class.size(); ++k) {
        Rng rng(derive_seed(seed, k));
        rng.shuffle(by_class[k]);
        for (const int i : by_class[k]) {
            fold_of[i] = counter % folds;
            ++counter;
        }
    }
    return fold_of;
}

struct CvSummary {
    std::vector<Metrics> fold_metrics;
    double mean_accuracy_pct = 0.0;
    double stddev_accuracy_pct = 0.0;
    std::optional<double> mean_f1_pct;
    std::optional<double> mean_fairness_dmc_pct;
    std::optional<double> mean_fairness_odm_pct;
};

inline CvSummary cross_validate(const Dataset& ds, int folds, std::uint64_t seed,
                                const std::function<RuleModel(const Dataset&)>& fit) {
    const auto fold_of = stratified_fold_assignment(ds.labels, folds, seed);
    CvSummary summary;
    for (int f = 0; f < folds; ++f) {
        std::vector<int> train_rows, test_rows;
        for (int i = 0; i < ds.n_rows; ++i) {
            (fold_of[i] == f ? test_rows : train_rows).push_back(i);
        }
        const Dataset train = subset(ds, train_rows);
        const Dataset test = subset(ds, test_rows);
        const RuleModel model = fit(train);
        summary.fold_metrics.push_back(evaluate(model, test));
    }
    double mean = 0.0;
    for (const auto& m : summary.fold_metrics) mean += m.accuracy_pct;
    mean /= static_cast<double>(folds);
    double var = 0.0;
    for (const auto& m : summary.fold_metrics) {
        var += (m.accuracy_pct - mean) * (m.accuracy_pct - mean);
    }
    summary.mean_accuracy_pct = mean;
    summary.stddev_accuracy_pct = std::sqrt(var / folds);
    double f1 = 0.0, dmc = 0.0, odm = 0.0;
    int f1_n = 0, dmc_n = 0, odm_n = 0;
    for (const auto& m : summary.fold_metrics) {
        if (m.f1_pct) { f1 += *m.f1_pct; ++f1_n; }
        if (m.fairness_dmc_pct) { dmc += *m.fairness_dmc_pct; ++dmc_n; }
        if (m.fairness_odm_pct) { odm += *m.fairness_odm_pct; ++odm_n; }
    }
    if (f1_n == folds) summary.mean_f1_pct = f1 / folds;
    if (dmc_n == folds) summary.mean_fairness_dmc_pct = dmc / folds;
    if (odm_n == folds) summary.mean_fairness_odm_pct = odm / folds;
    return summary;
}

}  // namespace rulegen
