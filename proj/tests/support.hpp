#pragma once

// Shared fixtures for the test suite: deterministic synthetic datasets, the
// complete tic-tac-toe endgame corpus generated in-process, a brute-force
// vertex-enumeration LP oracle, an independently written unweighted tree
// oracle, and temp-file / CLI process helpers.

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#ifdef __unix__
#include <sys/wait.h>
#include <unistd.h>
#endif

#include "rulegen/rulegen.hpp"

namespace support {

// ===== synthetic datasets =====

// Discrete feature grid (values 0/1/2) with a planted rule structure and a
// pinch of label noise. Deterministic in the seed.
inline rulegen::Dataset make_synthetic(int n_rows, int n_features, int class_count,
                                       std::uint64_t seed) {
    rulegen::Rng rng(seed);
    rulegen::Dataset ds;
    ds.n_rows = n_rows;
    ds.n_features = n_features;
    ds.class_count = class_count;
    for (int k = 0; k < class_count; ++k) ds.class_order.push_back("c" + std::to_string(k));
    for (int f = 0; f < n_features; ++f) {
        rulegen::FeatureMeta m;
        m.source_column = "f" + std::to_string(f);
        m.kind = rulegen::FeatureKind::Numeric;
        m.name = m.source_column;
        ds.feature_meta.push_back(std::move(m));
    }
    ds.values.resize(static_cast<std::size_t>(n_rows) * n_features);
    ds.labels.resize(n_rows);
    for (int i = 0; i < n_rows; ++i) {
        for (int f = 0; f < n_features; ++f) {
            ds.values[static_cast<std::size_t>(i) * n_features + f] =
                static_cast<double>(rng.bounded(3));
        }
        const double x0 = ds.x(i, 0);
        const double x1 = n_features > 1 ? ds.x(i, 1) : 0.0;
        const double x2 = n_features > 2 ? ds.x(i, 2) : x0;
        int label = 0;
        if (x0 > 1.5 && x1 <= 0.5) label = 1 % class_count;
        else if (x2 > 0.5) label = class_count - 1;
        if (rng.bounded(20) == 0) label = static_cast<int>(rng.bounded(class_count));
        ds.labels[i] = label;
    }
    return ds;
}

// Attaches a group id per row (g0..g{G-1}) for fairness tests.
inline void add_groups(rulegen::Dataset& ds, int group_count, std::uint64_t seed) {
    rulegen::Rng rng(seed);
    ds.groups.resize(ds.n_rows);
    ds.group_order.clear();
    for (int g = 0; g < group_count; ++g) ds.group_order.push_back("g" + std::to_string(g));
    for (int i = 0; i < ds.n_rows; ++i) {
        ds.groups[i] = static_cast<int>(rng.bounded(group_count));
    }
}

// Two-class dataset separable by a single threshold on feature 0.
inline rulegen::Dataset make_separable(int per_class) {
    rulegen::Dataset ds;
    ds.n_rows = 2 * per_class;
    ds.n_features = 2;
    ds.class_count = 2;
    ds.class_order = {"a", "b"};
    for (int f = 0; f < 2; ++f) {
        rulegen::FeatureMeta m;
        m.source_column = "f" + std::to_string(f);
        m.name = m.source_column;
        ds.feature_meta.push_back(std::move(m));
    }
    for (int i = 0; i < ds.n_rows; ++i) {
        const int label = i < per_class ? 0 : 1;
        ds.values.push_back(label == 0 ? 0.0 : 2.0);
        ds.values.push_back(static_cast<double>(i % 3));
        ds.labels.push_back(label);
    }
    return ds;
}

// ===== tic-tac-toe endgame corpus =====

// Enumerates every legal finished game (x moves first, play stops at the
// first completed line or a full board) and emits the distinct terminal
// boards. 958 boards: 626 x-wins, 332 others.
inline const std::string& tictactoe_csv() {
    static const std::string text = [] {
        static constexpr int kLines[8][3] = {{0, 1, 2}, {3, 4, 5}, {6, 7, 8},
                                             {0, 3, 6}, {1, 4, 7}, {2, 5, 8},
                                             {0, 4, 8}, {2, 4, 6}};
        auto winner = [&](const std::array<int, 9>& b) {
            for (const auto& line : kLines) {
                if (b[line[0]] != 0 && b[line[0]] == b[line[1]] &&
                    b[line[1]] == b[line[2]]) {
                    return b[line[0]];
                }
            }
            return 0;
        };
        std::set<std::array<int, 9>> finals;
        std::array<int, 9> board{};
        std::function<void(int)> play = [&](int turn) {
            bool full = true;
            for (const int v : board) {
                if (v == 0) { full = false; break; }
            }
            if (winner(board) != 0 || full) {
                finals.insert(board);
                return;
            }
            for (int i = 0; i < 9; ++i) {
                if (board[i] != 0) continue;
                board[i] = turn;
                play(turn == 1 ? 2 : 1);
                board[i] = 0;
            }
        };
        play(1);
        std::string out = "tl,tm,tr,ml,mm,mr,bl,bm,br,outcome\n";
        static constexpr const char* kSym[3] = {"b", "x", "o"};
        for (const auto& b : finals) {
            for (int i = 0; i < 9; ++i) {
                out += kSym[b[i]];
                out += ',';
            }
            out += winner(b) == 1 ? "positive" : "negative";
            out += '\n';
        }
        return out;
    }();
    return text;
}

inline rulegen::Dataset tictactoe_dataset() {
    rulegen::Schema schema;
    schema.target_column = "outcome";
    schema.categorical_columns = {"tl", "tm", "tr", "ml", "mm", "mr", "bl", "bm", "br"};
    schema.positive_class = "positive";
    return rulegen::encode_training(rulegen::parse_csv_text(tictactoe_csv()), schema);
}

// ===== LP vertex-enumeration oracle =====

// Minimal-footprint exact solver for tiny models: append one logical column
// per row, try every basis, keep the best feasible vertex. Returns nullopt
// when no basis is feasible. Only sensible for a handful of rows/columns.
inline std::optional<double> lp_vertex_oracle(const rulegen::LpModel& model) {
    const int m = static_cast<int>(model.rows.size());
    const int ns = static_cast<int>(model.columns.size());
    const int n = ns + m;
    if (m == 0) return 0.0;
    std::vector<double> a(static_cast<std::size_t>(m) * n, 0.0);
    std::vector<double> c(n, 0.0);
    std::vector<double> b(m);
    for (int r = 0; r < m; ++r) b[r] = model.rows[r].rhs;
    for (int j = 0; j < ns; ++j) {
        c[j] = model.columns[j].obj;
        for (const auto& [r, v] : model.columns[j].entries) {
            a[static_cast<std::size_t>(r) * n + j] = v;
        }
    }
    for (int r = 0; r < m; ++r) {
        a[static_cast<std::size_t>(r) * n + ns + r] =
            model.rows[r].sense == rulegen::RowSense::GE ? -1.0 : 1.0;
    }

    std::optional<double> best;
    std::vector<int> comb(m);
    for (int i = 0; i < m; ++i) comb[i] = i;
    std::vector<double> mat(static_cast<std::size_t>(m) * m);
    std::vector<double> rhs(m), x(m);
    while (true) {
        for (int r = 0; r < m; ++r) {
            rhs[r] = b[r];
            for (int k = 0; k < m; ++k) {
                mat[static_cast<std::size_t>(r) * m + k] =
                    a[static_cast<std::size_t>(r) * n + comb[k]];
            }
        }
        bool singular = false;
        for (int col = 0; col < m && !singular; ++col) {
            int piv = col;
            double mx = std::fabs(mat[static_cast<std::size_t>(col) * m + col]);
            for (int r = col + 1; r < m; ++r) {
                const double v = std::fabs(mat[static_cast<std::size_t>(r) * m + col]);
                if (v > mx) { mx = v; piv = r; }
            }
            if (mx < 1e-10) { singular = true; break; }
            if (piv != col) {
                for (int k = 0; k < m; ++k) {
                    std::swap(mat[static_cast<std::size_t>(col) * m + k],
                              mat[static_cast<std::size_t>(piv) * m + k]);
                }
                std::swap(rhs[col], rhs[piv]);
            }
            for (int r = col + 1; r < m; ++r) {
                const double f = mat[static_cast<std::size_t>(r) * m + col] /
                                 mat[static_cast<std::size_t>(col) * m + col];
                if (f == 0.0) continue;
                for (int k = col; k < m; ++k) {
                    mat[static_cast<std::size_t>(r) * m + k] -=
                        f * mat[static_cast<std::size_t>(col) * m + k];
                }
                rhs[r] -= f * rhs[col];
            }
        }
        if (!singular) {
            for (int r = m - 1; r >= 0; --r) {
                double v = rhs[r];
                for (int k = r + 1; k < m; ++k) {
                    v -= mat[static_cast<std::size_t>(r) * m + k] * x[k];
                }
                x[r] = v / mat[static_cast<std::size_t>(r) * m + r];
            }
            bool feasible = true;
            for (int k = 0; k < m; ++k) {
                if (x[k] < -1e-7) { feasible = false; break; }
            }
            if (feasible) {
                double obj = 0.0;
                for (int k = 0; k < m; ++k) obj += c[comb[k]] * x[k];
                if (!best || obj < *best) best = obj;
            }
        }
        int i = m - 1;
        while (i >= 0 && comb[i] == n - m + i) --i;
        if (i < 0) break;
        ++comb[i];
        for (int k = i + 1; k < m; ++k) comb[k] = comb[k - 1] + 1;
    }
    return best;
}

// ===== naive tree oracle =====

// Direct recomputation of the unweighted tree: per candidate split the class
// histograms are rebuilt from scratch, with the same tie rules (smallest
// feature, then smallest threshold, strict improvement).
struct OracleNode {
    int feature = -1;
    double threshold = 0.0;
    int label = 0;
    std::unique_ptr<OracleNode> left, right;
};

inline std::unique_ptr<OracleNode> oracle_grow(const rulegen::Dataset& ds,
                                               const std::vector<int>& rows,
                                               int depth_left) {
    auto node = std::make_unique<OracleNode>();
    std::vector<int> hist(ds.class_count, 0);
    for (const int i : rows) ++hist[ds.labels[i]];
    int best_label = 0, nonzero = 0;
    for (int k = 0; k < ds.class_count; ++k) {
        if (hist[k] > hist[best_label]) best_label = k;
        if (hist[k] > 0) ++nonzero;
    }
    node->label = best_label;
    if (depth_left <= 0 || nonzero <= 1) return node;

    const double w = static_cast<double>(rows.size());
    double s = 0.0;
    for (const int h : hist) s += static_cast<double>(h) * h;

    double best_gain = 0.0;
    int best_f = -1;
    double best_t = 0.0;
    for (int f = 0; f < ds.n_features; ++f) {
        std::vector<double> vals;
        vals.reserve(rows.size());
        for (const int i : rows) vals.push_back(ds.x(i, f));
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (std::size_t t = 0; t + 1 < vals.size(); ++t) {
            const double mid = 0.5 * (vals[t] + vals[t + 1]);
            std::vector<int> hl(ds.class_count, 0), hr(ds.class_count, 0);
            int nl = 0, nr = 0;
            for (const int i : rows) {
                if (ds.x(i, f) <= mid) { ++hl[ds.labels[i]]; ++nl; }
                else { ++hr[ds.labels[i]]; ++nr; }
            }
            if (nl == 0 || nr == 0) continue;
            double sl = 0.0, sr = 0.0;
            for (int k = 0; k < ds.class_count; ++k) {
                sl += static_cast<double>(hl[k]) * hl[k];
                sr += static_cast<double>(hr[k]) * hr[k];
            }
            const double gain = (sl / nl + sr / nr - s / w) / w;
            if (gain > best_gain && gain > 1e-12) {
                best_gain = gain;
                best_f = f;
                best_t = mid;
            }
        }
    }
    if (best_f < 0) return node;
    node->feature = best_f;
    node->threshold = best_t;
    std::vector<int> lrows, rrows;
    for (const int i : rows) {
        (ds.x(i, best_f) <= best_t ? lrows : rrows).push_back(i);
    }
    node->left = oracle_grow(ds, lrows, depth_left - 1);
    node->right = oracle_grow(ds, rrows, depth_left - 1);
    return node;
}

inline std::unique_ptr<OracleNode> oracle_tree(const rulegen::Dataset& ds, int max_depth) {
    std::vector<int> rows(ds.n_rows);
    for (int i = 0; i < ds.n_rows; ++i) rows[i] = i;
    return oracle_grow(ds, rows, max_depth);
}

inline int oracle_predict(const OracleNode* node, std::span<const double> sample) {
    while (node->feature >= 0) {
        node = sample[node->feature] <= node->threshold ? node->left.get()
                                                        : node->right.get();
    }
    return node->label;
}

// ===== temp files and process helpers =====

inline const std::string& temp_dir() {
    static const std::string dir = [] {
        auto d = std::filesystem::temp_directory_path() /
                 ("rulegen_tests_" + std::to_string(::getpid()));
        std::filesystem::create_directories(d);
        return d.string();
    }();
    return dir;
}

inline std::string write_temp(const std::string& name, const std::string& text) {
    const std::string path = temp_dir() + "/" + name;
    std::ofstream out(path, std::ios::binary);
    out << text;
    return path;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

#ifdef RULEGEN_CLI_PATH
// Runs the built CLI with the given argument string; returns the exit code
// and captures combined stdout/stderr.
inline int run_cli(const std::string& args, std::string* output = nullptr) {
    static int counter = 0;
    const std::string out_path =
        temp_dir() + "/cli_capture_" + std::to_string(counter++) + ".txt";
    const std::string cmd =
        std::string(RULEGEN_CLI_PATH) + " " + args + " > " + out_path + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (output) *output = read_file(out_path);
#ifdef __unix__
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    return -1;
#else
    return status;
#endif
}
#endif

}  // namespace support
