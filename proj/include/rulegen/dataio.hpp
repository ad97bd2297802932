#pragma once

// CSV loading and dataset encoding: one-hot expansion of categoricals,
// class id assignment, the signed class-vector encoding, and split-candidate
// thresholds shared by the tree learner and exhaustive rule enumeration.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "rulegen/common.hpp"

namespace rulegen {

// ===== schema =====

struct Schema {
    std::string target_column;
    std::vector<std::string> categorical_columns;
    std::optional<std::string> group_column;
    std::optional<std::string> positive_class;
};

inline Schema schema_from_json(const nlohmann::json& j) {
    Schema s;
    if (!j.is_object()) throw DataError("schema: expected a JSON object");
    if (!j.contains("target") || !j.at("target").is_string()) {
        throw DataError("schema: missing string key 'target'");
    }
    s.target_column = j.at("target").get<std::string>();
    if (j.contains("categorical")) {
        for (const auto& c : j.at("categorical")) {
            s.categorical_columns.push_back(c.get<std::string>());
        }
    }
    if (j.contains("group") && !j.at("group").is_null()) {
        s.group_column = j.at("group").get<std::string>();
    }
    if (j.contains("positive_class") && !j.at("positive_class").is_null()) {
        s.positive_class = j.at("positive_class").get<std::string>();
    }
    return s;
}

inline nlohmann::ordered_json schema_to_json(const Schema& s) {
    nlohmann::ordered_json j;
    j["target"] = s.target_column;
    j["categorical"] = s.categorical_columns;
    if (s.group_column) j["group"] = *s.group_column;
    else j["group"] = nullptr;
    if (s.positive_class) j["positive_class"] = *s.positive_class;
    else j["positive_class"] = nullptr;
    return j;
}

// ===== raw CSV =====

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;  // data rows, header excluded
};

// RFC-4180 style parser: quoted fields may contain commas, doubled quotes
// and line breaks; accepts LF and CRLF endings.
inline CsvTable parse_csv_text(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        record.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record.clear();
    };

    const std::size_t n = text.size();
    for (std::size_t i = 0; i < n; ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < n && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field_started && field.empty()) {
                    in_quotes = true;
                    field_started = true;
                } else {
                    field.push_back(c);  // stray quote inside unquoted field
                }
                break;
            case ',':
                end_field();
                break;
            case '\r':
                if (i + 1 < n && text[i + 1] == '\n') ++i;
                end_record();
                break;
            case '\n':
                end_record();
                break;
            default:
                field.push_back(c);
                field_started = true;
                break;
        }
    }
    if (in_quotes) throw DataError("csv: unterminated quoted field at end of input");
    if (field_started || !field.empty() || !record.empty()) end_record();

    if (records.empty()) throw DataError("csv: input is empty");
    CsvTable t;
    t.header = std::move(records.front());
    const std::size_t width = t.header.size();
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != width) {
            throw DataError("csv: row " + std::to_string(r) + " has " +
                            std::to_string(records[r].size()) + " fields, expected " +
                            std::to_string(width));
        }
        t.rows.push_back(std::move(records[r]));
    }
    return t;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("csv: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv_text(buf.str());
}

// ===== encoded dataset =====

enum class FeatureKind { Numeric, OneHot };

struct FeatureMeta {
    std::string source_column;  // CSV column this feature came from
    FeatureKind kind = FeatureKind::Numeric;
    std::string category;  // level name, OneHot only
    std::string name;      // display name ("col" or "col=level")
};

struct Dataset {
    int n_rows = 0;
    int n_features = 0;
    std::vector<double> values;  // row-major n_rows x n_features
    std::vector<int> labels;     // class ids in [0, class_count)
    std::vector<int> groups;     // empty, or group ids per row
    int class_count = 0;
    std::vector<std::string> class_order;  // class id -> original label string
    std::vector<std::string> group_order;  // group id -> original group string
    std::vector<FeatureMeta> feature_meta;
    int positive_class = -1;  // class id used as "positive" for F1; -1 = default

    double x(int row, int feature) const {
        return values[static_cast<std::size_t>(row) * n_features + feature];
    }
    std::span<const double> row(int i) const {
        return {values.data() + static_cast<std::size_t>(i) * n_features,
                static_cast<std::size_t>(n_features)};
    }
    bool has_groups() const { return !groups.empty(); }
    int group_count() const { return static_cast<int>(group_order.size()); }
};

namespace detail {

inline std::string trim_ascii(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
    return s.substr(b, e - b);
}

inline double parse_numeric_field(const std::string& raw, std::size_t data_row,
                                  const std::string& column) {
    const std::string s = trim_ascii(raw);
    if (s.empty()) {
        throw DataError("csv: missing value in column '" + column + "' at data row " +
                        std::to_string(data_row + 1));
    }
    double out = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) {
        throw DataError("csv: non-numeric value '" + raw + "' in column '" + column +
                        "' at data row " + std::to_string(data_row + 1));
    }
    return out;
}

inline int column_index(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
}

}  // namespace detail

// Encodes a raw table for training: assigns class ids by first appearance in
// the target column, expands categorical columns to one-hot features in level
// first-appearance order, and maps group values to ids the same way.
inline Dataset encode_training(const CsvTable& table, const Schema& schema) {
    if (table.rows.empty()) throw DataError("dataset: no data rows");
    if (schema.target_column.empty()) throw ArgumentError("schema: target column not set");

    {
        auto names = table.header;
        std::sort(names.begin(), names.end());
        auto dup = std::adjacent_find(names.begin(), names.end());
        if (dup != names.end()) {
            throw DataError("csv: duplicate column name '" + *dup + "'");
        }
    }

    const int target_idx = detail::column_index(table.header, schema.target_column);
    if (target_idx < 0) {
        throw DataError("schema: target column '" + schema.target_column + "' not in header");
    }
    int group_idx = -1;
    if (schema.group_column) {
        group_idx = detail::column_index(table.header, *schema.group_column);
        if (group_idx < 0) {
            throw DataError("schema: group column '" + *schema.group_column + "' not in header");
        }
        if (group_idx == target_idx) {
            throw ArgumentError("schema: group column equals target column");
        }
    }
    std::vector<bool> is_categorical(table.header.size(), false);
    for (const auto& c : schema.categorical_columns) {
        const int idx = detail::column_index(table.header, c);
        if (idx < 0) throw DataError("schema: categorical column '" + c + "' not in header");
        if (idx == target_idx) {
            throw ArgumentError("schema: target column listed as categorical");
        }
        is_categorical[idx] = true;
    }

    Dataset ds;
    ds.n_rows = static_cast<int>(table.rows.size());

    // Class ids and group ids by first appearance.
    std::unordered_map<std::string, int> class_id;
    std::unordered_map<std::string, int> group_id;
    ds.labels.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string& cls = table.rows[r][target_idx];
        auto [it, inserted] = class_id.try_emplace(cls, static_cast<int>(ds.class_order.size()));
        if (inserted) ds.class_order.push_back(cls);
        ds.labels.push_back(it->second);
        if (group_idx >= 0) {
            const std::string& g = table.rows[r][group_idx];
            auto [git, ginserted] =
                group_id.try_emplace(g, static_cast<int>(ds.group_order.size()));
            if (ginserted) ds.group_order.push_back(g);
            ds.groups.push_back(git->second);
        }
    }
    ds.class_count = static_cast<int>(ds.class_order.size());
    if (ds.class_count < 2) {
        throw DataError("dataset: target column has a single class; need at least 2");
    }
    if (schema.positive_class) {
        const auto it = class_id.find(*schema.positive_class);
        if (it == class_id.end()) {
            throw DataError("schema: positive class '" + *schema.positive_class +
                            "' never appears in target column");
        }
        ds.positive_class = it->second;
    }

    // Feature layout: header order, categoricals expanded in place.
    std::vector<std::vector<std::string>> levels(table.header.size());
    std::vector<std::unordered_map<std::string, int>> level_id(table.header.size());
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (!is_categorical[c]) continue;
        for (const auto& row : table.rows) {
            auto [it, inserted] =
                level_id[c].try_emplace(row[c], static_cast<int>(levels[c].size()));
            if (inserted) levels[c].push_back(row[c]);
        }
    }
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        const int ci = static_cast<int>(c);
        if (ci == target_idx || ci == group_idx) continue;
        if (is_categorical[c]) {
            for (const auto& lvl : levels[c]) {
                FeatureMeta m;
                m.source_column = table.header[c];
                m.kind = FeatureKind::OneHot;
                m.category = lvl;
                m.name = table.header[c] + "=" + lvl;
                ds.feature_meta.push_back(std::move(m));
            }
        } else {
            FeatureMeta m;
            m.source_column = table.header[c];
            m.kind = FeatureKind::Numeric;
            m.name = table.header[c];
            ds.feature_meta.push_back(std::move(m));
        }
    }
    ds.n_features = static_cast<int>(ds.feature_meta.size());
    if (ds.n_features == 0) throw DataError("dataset: no feature columns left after schema roles");

    ds.values.assign(static_cast<std::size_t>(ds.n_rows) * ds.n_features, 0.0);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        std::size_t out = static_cast<std::size_t>(r) * ds.n_features;
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            const int ci = static_cast<int>(c);
            if (ci == target_idx || ci == group_idx) continue;
            if (is_categorical[c]) {
                const int lvl = level_id[c].at(table.rows[r][c]);
                ds.values[out + lvl] = 1.0;
                out += levels[c].size();
            } else {
                ds.values[out++] =
                    detail::parse_numeric_field(table.rows[r][c], r, table.header[c]);
            }
        }
    }
    return ds;
}

inline Dataset load_csv(const std::string& path, const Schema& schema) {
    return encode_training(read_csv(path), schema);
}

// Row subset that keeps the class/group vocabularies of the parent intact,
// so fold datasets stay comparable to the full dataset.
inline Dataset subset(const Dataset& ds, const std::vector<int>& rows) {
    Dataset out;
    out.n_rows = static_cast<int>(rows.size());
    out.n_features = ds.n_features;
    out.class_count = ds.class_count;
    out.class_order = ds.class_order;
    out.group_order = ds.group_order;
    out.feature_meta = ds.feature_meta;
    out.positive_class = ds.positive_class;
    out.values.reserve(rows.size() * static_cast<std::size_t>(ds.n_features));
    out.labels.reserve(rows.size());
    for (const int r : rows) {
        if (r < 0 || r >= ds.n_rows) {
            throw IndexError("subset: row index " + std::to_string(r) + " out of range");
        }
        const auto row = ds.row(r);
        out.values.insert(out.values.end(), row.begin(), row.end());
        out.labels.push_back(ds.labels[r]);
        if (ds.has_groups()) out.groups.push_back(ds.groups[r]);
    }
    return out;
}

// ===== class encoding =====

// kappa(K) = (K-1)/K, the normaliser that maps a perfect class-vector match
// onto score 1 in the hinge loss.
inline double kappa(int class_count) {
    if (class_count < 2) throw ArgumentError("kappa: need at least 2 classes");
    return static_cast<double>(class_count - 1) / class_count;
}

struct ClassEncoding {
    int class_count = 0;
    double kappa_value = 0.0;
    explicit ClassEncoding(int k) : class_count(k), kappa_value(kappa(k)) {}
};

// Signed class vector: +1 at the class component, -1/(K-1) elsewhere.
// Components sum to zero; squared norm is K/(K-1) = 1/kappa.
inline std::vector<double> class_vector(int class_id, int class_count) {
    if (class_count < 2) throw ArgumentError("class_vector: need at least 2 classes");
    if (class_id < 0 || class_id >= class_count) {
        throw IndexError("class_vector: class id " + std::to_string(class_id) +
                         " out of range for " + std::to_string(class_count) + " classes");
    }
    std::vector<double> v(class_count, -1.0 / (class_count - 1));
    v[class_id] = 1.0;
    return v;
}

// ===== split candidates =====

// Midpoints between consecutive distinct sorted values. A constant column
// yields no candidates.
inline std::vector<double> split_candidates(std::vector<double> values) {
    if (values.empty()) throw ArgumentError("split_candidates: empty input");
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::vector<double> mids;
    mids.reserve(values.size() > 0 ? values.size() - 1 : 0);
    for (std::size_t i = 1; i < values.size(); ++i) {
        mids.push_back(0.5 * (values[i - 1] + values[i]));
    }
    return mids;
}

inline std::vector<double> feature_split_candidates(const Dataset& ds, int feature) {
    if (feature < 0 || feature >= ds.n_features) {
        throw IndexError("split_candidates: feature index out of range");
    }
    std::vector<double> col(ds.n_rows);
    for (int i = 0; i < ds.n_rows; ++i) col[i] = ds.x(i, feature);
    return split_candidates(std::move(col));
}

}  // namespace rulegen
