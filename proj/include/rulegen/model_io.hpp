#pragma once

// Model file round-tripping. The on-disk form is a single JSON document with
// a pinned key order so identical fits serialize to identical bytes, plus
// enough schema metadata to re-encode raw CSVs at prediction time.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rulegen/common.hpp"
#include "rulegen/dataio.hpp"
#include "rulegen/rug.hpp"
#include "rulegen/rules.hpp"

namespace rulegen {

inline constexpr int kModelFormatVersion = 1;

struct SavedModel {
    RuleModel model;
    Schema schema;
    std::vector<FeatureMeta> feature_meta;
    std::vector<std::string> group_order;
    std::string mode = "RUG";  // RUG | RUX | FAIR_RUG | FAIR_RUX
    nlohmann::ordered_json config_echo = nlohmann::ordered_json::object();
};

inline nlohmann::ordered_json model_to_json(const SavedModel& sm) {
    nlohmann::ordered_json j;
    j["format_version"] = kModelFormatVersion;
    j["mode"] = sm.mode;
    j["schema"] = schema_to_json(sm.schema);
    j["class_order"] = sm.model.class_order;
    j["group_order"] = sm.group_order;
    j["K"] = sm.model.class_count;
    j["fallback_class"] = sm.model.fallback_class;
    if (sm.model.positive_class >= 0) j["positive_class"] = sm.model.positive_class;
    else j["positive_class"] = nullptr;
    j["objective"] = sm.model.objective;
    j["pool_size"] = sm.model.pool_size;

    nlohmann::ordered_json meta = nlohmann::ordered_json::array();
    for (const auto& fm : sm.feature_meta) {
        nlohmann::ordered_json mj;
        mj["source"] = fm.source_column;
        mj["kind"] = fm.kind == FeatureKind::Numeric ? "numeric" : "onehot";
        mj["category"] = fm.category;
        mj["name"] = fm.name;
        meta.push_back(std::move(mj));
    }
    j["feature_meta"] = std::move(meta);

    nlohmann::ordered_json rules = nlohmann::ordered_json::array();
    for (const auto& r : sm.model.rules) {
        nlohmann::ordered_json rj;
        to_json(rj, r);
        rules.push_back(std::move(rj));
    }
    j["rules"] = std::move(rules);

    nlohmann::ordered_json log = nlohmann::ordered_json::array();
    for (const auto& e : sm.model.fit_log) {
        nlohmann::ordered_json ej;
        ej["iteration"] = e.iteration;
        ej["objective"] = e.objective;
        ej["columns_added"] = e.columns_added;
        ej["pool_size"] = e.pool_size;
        ej["min_reduced_cost"] = e.min_reduced_cost;
        log.push_back(std::move(ej));
    }
    j["fit_log"] = std::move(log);
    j["config"] = sm.config_echo;
    return j;
}

inline SavedModel model_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw DataError("model: expected a JSON object");
    const int version = j.value("format_version", -1);
    if (version != kModelFormatVersion) {
        throw DataError("model: unsupported format_version " + std::to_string(version));
    }
    SavedModel sm;
    sm.mode = j.value("mode", std::string("RUG"));
    sm.schema = schema_from_json(j.at("schema"));
    sm.model.class_order = j.at("class_order").get<std::vector<std::string>>();
    if (j.contains("group_order")) {
        sm.group_order = j.at("group_order").get<std::vector<std::string>>();
    }
    sm.model.class_count = j.at("K").get<int>();
    if (sm.model.class_count != static_cast<int>(sm.model.class_order.size())) {
        throw DataError("model: K does not match class_order length");
    }
    sm.model.fallback_class = j.at("fallback_class").get<int>();
    if (sm.model.fallback_class < 0 || sm.model.fallback_class >= sm.model.class_count) {
        throw DataError("model: fallback class out of range");
    }
    if (j.contains("positive_class") && !j.at("positive_class").is_null()) {
        sm.model.positive_class = j.at("positive_class").get<int>();
    }
    sm.model.objective = j.value("objective", 0.0);
    sm.model.pool_size = j.value("pool_size", 0);
    for (const auto& mj : j.value("feature_meta", nlohmann::json::array())) {
        FeatureMeta fm;
        fm.source_column = mj.at("source").get<std::string>();
        const std::string kind = mj.at("kind").get<std::string>();
        if (kind == "numeric") fm.kind = FeatureKind::Numeric;
        else if (kind == "onehot") fm.kind = FeatureKind::OneHot;
        else throw DataError("model: unknown feature kind '" + kind + "'");
        fm.category = mj.value("category", std::string());
        fm.name = mj.value("name", fm.source_column);
        sm.feature_meta.push_back(std::move(fm));
    }
    for (const auto& rj : j.at("rules")) {
        Rule r;
        from_json(rj, r);
        if (r.label < 0 || r.label >= sm.model.class_count) {
            throw DataError("model: rule label out of range");
        }
        sm.model.rules.push_back(std::move(r));
    }
    for (const auto& ej : j.value("fit_log", nlohmann::json::array())) {
        FitLogEntry e;
        e.iteration = ej.value("iteration", 0);
        e.objective = ej.value("objective", 0.0);
        e.columns_added = ej.value("columns_added", 0);
        e.pool_size = ej.value("pool_size", 0);
        e.min_reduced_cost = ej.value("min_reduced_cost", 0.0);
        sm.model.fit_log.push_back(e);
    }
    if (j.contains("config")) sm.config_echo = j.at("config");
    return sm;
}

inline void save_model(const std::string& path, const SavedModel& sm) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("model: cannot write '" + path + "'");
    out << model_to_json(sm).dump(2) << "\n";
    if (!out) throw DataError("model: write to '" + path + "' failed");
}

inline SavedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("model: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model: invalid JSON in '" + path + "': " + e.what());
    }
    return model_from_json(j);
}

// Re-encodes a raw table with a fitted model's feature layout. The target
// column is optional (absent target leaves labels empty); unseen class or
// group values are data errors so silent label drift cannot happen.
inline Dataset encode_for_model(const CsvTable& table, const SavedModel& sm) {
    if (table.rows.empty()) throw DataError("dataset: no data rows");
    Dataset ds;
    ds.n_rows = static_cast<int>(table.rows.size());
    ds.n_features = static_cast<int>(sm.feature_meta.size());
    ds.class_count = sm.model.class_count;
    ds.class_order = sm.model.class_order;
    ds.group_order = sm.group_order;
    ds.feature_meta = sm.feature_meta;
    ds.positive_class = sm.model.positive_class;

    const int target_idx =
        detail::column_index(table.header, sm.schema.target_column);
    int group_idx = -1;
    if (sm.schema.group_column) {
        group_idx = detail::column_index(table.header, *sm.schema.group_column);
    }
    std::vector<int> source_idx(sm.feature_meta.size());
    for (std::size_t f = 0; f < sm.feature_meta.size(); ++f) {
        source_idx[f] = detail::column_index(table.header, sm.feature_meta[f].source_column);
        if (source_idx[f] < 0) {
            throw DataError("dataset: column '" + sm.feature_meta[f].source_column +
                            "' required by the model is missing");
        }
    }

    ds.values.assign(static_cast<std::size_t>(ds.n_rows) * ds.n_features, 0.0);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        for (std::size_t f = 0; f < sm.feature_meta.size(); ++f) {
            const auto& fm = sm.feature_meta[f];
            double v = 0.0;
            if (fm.kind == FeatureKind::Numeric) {
                v = detail::parse_numeric_field(row[source_idx[f]], r, fm.source_column);
            } else {
                v = row[source_idx[f]] == fm.category ? 1.0 : 0.0;
            }
            ds.values[r * sm.feature_meta.size() + f] = v;
        }
        if (target_idx >= 0) {
            const std::string& cls = row[target_idx];
            int id = -1;
            for (std::size_t k = 0; k < ds.class_order.size(); ++k) {
                if (ds.class_order[k] == cls) { id = static_cast<int>(k); break; }
            }
            if (id < 0) {
                throw DataError("dataset: class '" + cls + "' at data row " +
                                std::to_string(r + 1) + " unknown to the model");
            }
            ds.labels.push_back(id);
        }
        if (group_idx >= 0) {
            const std::string& g = row[group_idx];
            int id = -1;
            for (std::size_t k = 0; k < ds.group_order.size(); ++k) {
                if (ds.group_order[k] == g) { id = static_cast<int>(k); break; }
            }
            if (id < 0) {
                throw DataError("dataset: group '" + g + "' at data row " +
                                std::to_string(r + 1) + " unknown to the model");
            }
            ds.groups.push_back(id);
        }
    }
    return ds;
}

}  // namespace rulegen
