#pragma once

// Linear programming core: a revised primal simplex with an explicit dense
// basis inverse, product-form updates, periodic refactorization, Bland's rule
// as an anti-cycling fallback, and warm starts across column additions. The
// restricted master problem builder and the always-on solve diagnostics
// registry live here too.
//
// Conventions: variables are nonnegative; rows are GE or LE inequalities;
// the solver minimizes. Row duals follow the GE-nonnegative convention, so a
// binding LE row carries a nonpositive dual.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "rulegen/common.hpp"

namespace rulegen {

enum class RowSense { GE, LE };

struct LpRow {
    RowSense sense = RowSense::GE;
    double rhs = 0.0;
};

struct LpColumn {
    double obj = 0.0;
    SparseColumn entries;  // (row, coefficient)
    enum class Tag { RuleWeight, HingeSlack } tag = Tag::RuleWeight;
    int tag_index = 0;
};

struct LpModel {
    std::vector<LpRow> rows;
    std::vector<LpColumn> columns;
    // Master-problem shape metadata; zero/negative for generic models.
    int covering_rows = 0;     // leading GE rows, one per sample
    int fairness_rows = 0;     // trailing LE rows touching hinge slacks only
    int hinge_col_start = -1;  // hinge slack for sample i = columns[start + i]
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Optimal;
    double objective = 0.0;
    std::vector<double> primal;  // per model column
    std::vector<double> duals;   // per row
    int iterations = 0;
};

// ===== diagnostics registry =====
//
// Every optimal solve self-certifies: duality gap always; the dual box and
// the slack-positivity property additionally on master problems without
// fairness rows (fairness duals enter the hinge stationarity condition, so
// the property does not hold there in general). Tests assert clean() at exit.

struct LpDiagnostics {
    std::uint64_t solves = 0;
    std::uint64_t optimal_solves = 0;
    std::uint64_t gap_checks = 0;
    std::uint64_t gap_violations = 0;
    std::uint64_t box_checks = 0;
    std::uint64_t box_violations = 0;
    std::uint64_t lemma_checks = 0;
    std::uint64_t lemma_violations = 0;
    double max_rel_gap = 0.0;
    std::string last_violation;

    bool clean() const {
        return gap_violations == 0 && box_violations == 0 && lemma_violations == 0;
    }
    void reset() { *this = LpDiagnostics{}; }
};

inline LpDiagnostics& lp_diagnostics() {
    static LpDiagnostics d;
    return d;
}

// ===== restricted master problem =====

// A <= constraint over the hinge slacks v (fairness rows have this shape).
struct SlackConstraint {
    SparseColumn coeffs;  // (sample, coefficient)
    double rhs = 0.0;
};

// Builds the master LP over a fixed rule set:
//   minimize lambda * sum_j cost_j w_j + sum_i v_i
//   s.t.     sum_j ahat_ij w_j + v_i >= 1   (covering row per sample)
//            fairness rows over v          (optional, <=)
//            w, v >= 0
// Column order: rule weights first, then one hinge slack per sample.
inline LpModel build_rmp(const std::vector<SparseColumn>& rule_columns,
                         const std::vector<double>& rule_costs, double lambda,
                         int n_samples,
                         const std::vector<SlackConstraint>& fairness = {}) {
    if (n_samples <= 0) throw ArgumentError("build_rmp: need at least one sample");
    if (lambda < 0.0) throw ArgumentError("build_rmp: lambda must be nonnegative");
    if (rule_columns.size() != rule_costs.size()) {
        throw ArgumentError("build_rmp: rule column/cost count mismatch");
    }
    LpModel m;
    m.covering_rows = n_samples;
    m.fairness_rows = static_cast<int>(fairness.size());
    m.hinge_col_start = static_cast<int>(rule_columns.size());
    m.rows.reserve(n_samples + fairness.size());
    for (int i = 0; i < n_samples; ++i) m.rows.push_back({RowSense::GE, 1.0});
    for (const auto& fr : fairness) m.rows.push_back({RowSense::LE, fr.rhs});

    m.columns.reserve(rule_columns.size() + n_samples);
    for (std::size_t j = 0; j < rule_columns.size(); ++j) {
        if (rule_costs[j] < 0.0) throw ArgumentError("build_rmp: negative rule cost");
        LpColumn col;
        col.obj = lambda * rule_costs[j];
        col.tag = LpColumn::Tag::RuleWeight;
        col.tag_index = static_cast<int>(j);
        col.entries = rule_columns[j];
        for (const auto& [row, _] : col.entries) {
            if (row < 0 || row >= n_samples) {
                throw ArgumentError("build_rmp: rule column touches row out of range");
            }
        }
        m.columns.push_back(std::move(col));
    }
    // Hinge slack v_i: +1 in covering row i plus its fairness coefficients.
    std::vector<SparseColumn> fair_by_sample(n_samples);
    for (std::size_t f = 0; f < fairness.size(); ++f) {
        for (const auto& [sample, coef] : fairness[f].coeffs) {
            if (sample < 0 || sample >= n_samples) {
                throw ArgumentError("build_rmp: fairness row touches sample out of range");
            }
            fair_by_sample[sample].emplace_back(n_samples + static_cast<int>(f), coef);
        }
    }
    for (int i = 0; i < n_samples; ++i) {
        LpColumn col;
        col.obj = 1.0;
        col.tag = LpColumn::Tag::HingeSlack;
        col.tag_index = i;
        col.entries.emplace_back(i, 1.0);
        col.entries.insert(col.entries.end(), fair_by_sample[i].begin(),
                           fair_by_sample[i].end());
        m.columns.push_back(std::move(col));
    }
    return m;
}

// Reduced cost of a candidate rule column under covering-row duals:
// lambda * cost - sum_i ahat_i * dual_i. Fairness rows never touch rule
// columns, so passing full-length duals is equivalent.
inline double reduced_cost(double cost, double lambda, const SparseColumn& column,
                           const std::vector<double>& duals) {
    double acc = lambda * cost;
    for (const auto& [row, coef] : column) {
        if (row < 0 || static_cast<std::size_t>(row) >= duals.size()) {
            throw IndexError("reduced_cost: column row index out of dual range");
        }
        acc -= coef * duals[row];
    }
    return acc;
}

// ===== solver =====

class SimplexSolver {
public:
    static constexpr double kFeasTol = 1e-9;
    static constexpr double kOptTol = 1e-9;
    static constexpr double kPivotTol = 1e-9;
    static constexpr double kDegenerateTheta = 1e-12;
    static constexpr int kBlandTrigger = 50;
    static constexpr int kRefactorEvery = 500;

    explicit SimplexSolver(const LpModel& model)
        : m_(static_cast<int>(model.rows.size())),
          covering_rows_(model.covering_rows),
          fairness_rows_(model.fairness_rows),
          hinge_col_start_(model.hinge_col_start) {
        rhs_.reserve(m_);
        senses_.reserve(m_);
        for (const auto& row : model.rows) {
            if (!std::isfinite(row.rhs)) throw ArgumentError("lp: non-finite rhs");
            rhs_.push_back(row.rhs);
            senses_.push_back(row.sense);
        }
        // Internal column layout: [0, m) artificials, [m, 2m) logicals,
        // [2m, ...) structural. Appending structural columns never shifts ids.
        cols_.resize(2 * static_cast<std::size_t>(m_));
        for (int r = 0; r < m_; ++r) {
            cols_[r].artificial = true;
            cols_[r].obj = 0.0;
            cols_[r].entries.emplace_back(r, rhs_[r] >= 0.0 ? 1.0 : -1.0);
        }
        for (int r = 0; r < m_; ++r) {
            auto& c = cols_[m_ + r];
            c.obj = 0.0;
            c.entries.emplace_back(r, senses_[r] == RowSense::GE ? -1.0 : 1.0);
        }
        n_struct_ = 0;
        append_structural(model.columns);
        basic_pos_.assign(cols_.size(), -1);
    }

    int structural_count() const { return n_struct_; }

    // Appends structural columns (column generation). An existing basis stays
    // valid: new columns enter nonbasic at zero.
    void add_columns(const std::vector<LpColumn>& columns) {
        append_structural(columns);
        basic_pos_.resize(cols_.size(), -1);
    }

    LpSolution solve() {
        auto& diag = lp_diagnostics();
        ++diag.solves;
        LpSolution sol;
        if (m_ == 0) return solve_trivial();
        const int start_iterations = iterations_;

        bool warm = have_basis_;
        if (warm && !have_factor_) warm = refactor() && recompute_xb_feasible();
        if (warm) {
            // Basis and factor carried over; basic values are unchanged by
            // column additions, so phase 2 resumes directly.
        } else if (!try_natural_start()) {
            const bool feasible = phase1();
            if (!feasible) {
                sol.status = LpStatus::Infeasible;
                sol.iterations = iterations_ - start_iterations;
                have_basis_ = false;
                return sol;
            }
        }

        const bool bounded = iterate(/*phase1=*/false);
        if (!bounded) {
            sol.status = LpStatus::Unbounded;
            sol.iterations = iterations_ - start_iterations;
            have_basis_ = false;  // basis left mid-ray; do not warm start from it
            return sol;
        }
        certify();
        ++diag.optimal_solves;

        sol.status = LpStatus::Optimal;
        sol.iterations = iterations_ - start_iterations;
        sol.primal.assign(n_struct_, 0.0);
        for (int r = 0; r < m_; ++r) {
            const int id = basis_[r];
            if (id >= 2 * m_) sol.primal[id - 2 * m_] = std::max(0.0, xb_[r]);
        }
        sol.duals = y_;
        double obj = 0.0;
        for (int j = 0; j < n_struct_; ++j) obj += cols_[2 * m_ + j].obj * sol.primal[j];
        sol.objective = obj;
        run_registry_checks(sol);
        return sol;
    }

    // Reduced costs of all structural columns under current duals; callers
    // use this to prove optimality certificates in tests.
    std::vector<double> structural_reduced_costs() const {
        std::vector<double> rc(n_struct_);
        for (int j = 0; j < n_struct_; ++j) {
            const auto& col = cols_[2 * m_ + j];
            double acc = col.obj;
            for (const auto& [row, coef] : col.entries) acc -= coef * y_[row];
            rc[j] = acc;
        }
        return rc;
    }

    // Primal values of tagged structural columns, keyed by tag_index. Columns
    // appended by add_columns land after the initial layout, so positional
    // indexing into sol.primal is only valid for the columns the solver was
    // constructed with; the tags stay correct across additions.
    std::vector<double> tagged_values(const LpSolution& sol, LpColumn::Tag tag,
                                      int count) const {
        std::vector<double> out(count, 0.0);
        for (int j = 0; j < n_struct_ && j < static_cast<int>(sol.primal.size()); ++j) {
            const auto& col = cols_[2 * m_ + j];
            if (col.tag != tag) continue;
            if (col.tag_index < 0 || col.tag_index >= count) continue;
            out[col.tag_index] = sol.primal[j];
        }
        return out;
    }

private:
    struct InternalCol {
        double obj = 0.0;
        SparseColumn entries;
        bool artificial = false;
        LpColumn::Tag tag = LpColumn::Tag::RuleWeight;
        int tag_index = -1;
    };

    int m_ = 0;
    int covering_rows_ = 0;
    int fairness_rows_ = 0;
    int hinge_col_start_ = -1;
    int n_struct_ = 0;
    std::vector<double> rhs_;
    std::vector<RowSense> senses_;
    std::vector<InternalCol> cols_;

    std::vector<int> basis_;       // row -> internal column id
    std::vector<int> basic_pos_;   // internal column id -> row, or -1
    std::vector<double> binv_;     // m x m row-major
    std::vector<double> xb_;       // basic values
    std::vector<double> y_;        // duals of the active phase
    bool have_basis_ = false;
    bool have_factor_ = false;
    int updates_since_refactor_ = 0;
    int iterations_ = 0;
    bool bland_ = false;
    int degenerate_streak_ = 0;

    void append_structural(const std::vector<LpColumn>& columns) {
        for (const auto& col : columns) {
            if (!std::isfinite(col.obj)) throw ArgumentError("lp: non-finite objective");
            InternalCol c;
            c.obj = col.obj;
            c.entries = col.entries;
            c.tag = col.tag;
            c.tag_index = col.tag_index;
            for (const auto& [row, coef] : c.entries) {
                if (row < 0 || row >= m_) throw ArgumentError("lp: column row out of range");
                if (!std::isfinite(coef)) throw ArgumentError("lp: non-finite coefficient");
            }
            cols_.push_back(std::move(c));
            ++n_struct_;
        }
    }

    LpSolution solve_trivial() {
        // No rows: x = 0 is optimal unless some cost is negative.
        LpSolution sol;
        for (int j = 0; j < n_struct_; ++j) {
            if (cols_[j].obj < -kOptTol) {
                sol.status = LpStatus::Unbounded;
                return sol;
            }
        }
        sol.status = LpStatus::Optimal;
        sol.primal.assign(n_struct_, 0.0);
        ++lp_diagnostics().optimal_solves;
        return sol;
    }

    // Master problems admit an analytic start: hinge slacks basic on covering
    // rows, logicals basic on fairness rows. With F the fairness coefficients
    // over v, B = [[I,0],[F,I]] and B^-1 = [[I,0],[-F,I]]; no factorization.
    bool try_natural_start() {
        if (covering_rows_ <= 0 || hinge_col_start_ < 0) return false;
        if (covering_rows_ + fairness_rows_ != m_) return false;
        if (hinge_col_start_ + covering_rows_ > n_struct_) return false;

        basis_.assign(m_, -1);
        std::fill(basic_pos_.begin(), basic_pos_.end(), -1);
        for (int i = 0; i < covering_rows_; ++i) {
            set_basic(i, 2 * m_ + hinge_col_start_ + i);
        }
        for (int f = 0; f < fairness_rows_; ++f) {
            const int row = covering_rows_ + f;
            set_basic(row, m_ + row);  // LE logical slack
        }
        binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
        for (int r = 0; r < m_; ++r) binv_[static_cast<std::size_t>(r) * m_ + r] = 1.0;
        for (int i = 0; i < covering_rows_; ++i) {
            const auto& entries = cols_[2 * m_ + hinge_col_start_ + i].entries;
            for (const auto& [row, coef] : entries) {
                if (row == i) continue;
                binv_[static_cast<std::size_t>(row) * m_ + i] = -coef;
            }
        }
        have_factor_ = true;
        updates_since_refactor_ = 0;
        if (!recompute_xb_feasible()) {
            have_basis_ = false;
            have_factor_ = false;
            return false;
        }
        have_basis_ = true;
        return true;
    }

    void set_basic(int row, int col_id) {
        basis_[row] = col_id;
        basic_pos_[col_id] = row;
    }

    bool recompute_xb_feasible() {
        xb_.assign(m_, 0.0);
        for (int r = 0; r < m_; ++r) {
            double acc = 0.0;
            const double* row = binv_.data() + static_cast<std::size_t>(r) * m_;
            for (int c = 0; c < m_; ++c) acc += row[c] * rhs_[c];
            xb_[r] = acc;
        }
        double min_v = 0.0;
        for (const double v : xb_) min_v = std::min(min_v, v);
        return min_v >= -1e-7;
    }

    // Rebuilds binv_ from the current basis via Gauss-Jordan elimination with
    // partial pivoting. Returns false on a (numerically) singular basis.
    bool refactor() {
        std::vector<double> a(static_cast<std::size_t>(m_) * m_, 0.0);
        for (int r = 0; r < m_; ++r) {
            for (const auto& [row, coef] : cols_[basis_[r]].entries) {
                a[static_cast<std::size_t>(row) * m_ + r] = coef;
            }
        }
        binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
        for (int r = 0; r < m_; ++r) binv_[static_cast<std::size_t>(r) * m_ + r] = 1.0;
        for (int col = 0; col < m_; ++col) {
            int piv = col;
            double best = std::fabs(a[static_cast<std::size_t>(col) * m_ + col]);
            for (int r = col + 1; r < m_; ++r) {
                const double v = std::fabs(a[static_cast<std::size_t>(r) * m_ + col]);
                if (v > best) {
                    best = v;
                    piv = r;
                }
            }
            if (best < 1e-11) return false;
            if (piv != col) {
                for (int c = 0; c < m_; ++c) {
                    std::swap(a[static_cast<std::size_t>(piv) * m_ + c],
                              a[static_cast<std::size_t>(col) * m_ + c]);
                    std::swap(binv_[static_cast<std::size_t>(piv) * m_ + c],
                              binv_[static_cast<std::size_t>(col) * m_ + c]);
                }
            }
            const double inv = 1.0 / a[static_cast<std::size_t>(col) * m_ + col];
            for (int c = 0; c < m_; ++c) {
                a[static_cast<std::size_t>(col) * m_ + c] *= inv;
                binv_[static_cast<std::size_t>(col) * m_ + c] *= inv;
            }
            for (int r = 0; r < m_; ++r) {
                if (r == col) continue;
                const double f = a[static_cast<std::size_t>(r) * m_ + col];
                if (f == 0.0) continue;
                for (int c = 0; c < m_; ++c) {
                    a[static_cast<std::size_t>(r) * m_ + c] -=
                        f * a[static_cast<std::size_t>(col) * m_ + c];
                    binv_[static_cast<std::size_t>(r) * m_ + c] -=
                        f * binv_[static_cast<std::size_t>(col) * m_ + c];
                }
            }
        }
        have_factor_ = true;
        updates_since_refactor_ = 0;
        return true;
    }

    // Phase 1: start from logicals where the sign works out and artificials
    // elsewhere, minimize total artificial mass.
    bool phase1() {
        basis_.assign(m_, -1);
        std::fill(basic_pos_.begin(), basic_pos_.end(), -1);
        bool any_artificial = false;
        for (int r = 0; r < m_; ++r) {
            const bool logical_ok = (senses_[r] == RowSense::LE && rhs_[r] >= 0.0) ||
                                    (senses_[r] == RowSense::GE && rhs_[r] <= 0.0);
            if (logical_ok) {
                set_basic(r, m_ + r);
            } else {
                set_basic(r, r);
                any_artificial = true;
            }
        }
        binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
        for (int r = 0; r < m_; ++r) {
            // Start basis is diagonal: logical coef is +-1, artificial +-1.
            const double coef = cols_[basis_[r]].entries.front().second;
            binv_[static_cast<std::size_t>(r) * m_ + r] = 1.0 / coef;
        }
        have_factor_ = true;
        updates_since_refactor_ = 0;
        recompute_xb_feasible();
        have_basis_ = true;

        if (any_artificial) {
            const bool bounded = iterate(/*phase1=*/true);
            if (!bounded) throw SolverError("lp: phase 1 reported unbounded");
            double infeas = 0.0;
            for (int r = 0; r < m_; ++r) {
                if (cols_[basis_[r]].artificial) infeas += std::max(0.0, xb_[r]);
            }
            double scale = 1.0;
            for (const double b : rhs_) scale += std::fabs(b);
            if (infeas > kFeasTol * scale) {
                return false;
            }
            drive_out_artificials();
        }
        return true;
    }

    // Pivots basic artificials sitting at zero out of the basis where a
    // usable pivot element exists; dependent rows keep their artificial at
    // zero and the ratio test pins it there.
    void drive_out_artificials() {
        std::vector<double> d(m_);
        for (int r = 0; r < m_; ++r) {
            if (!cols_[basis_[r]].artificial) continue;
            int replacement = -1;
            for (int j = 0; j < n_struct_ + m_ && replacement < 0; ++j) {
                const int id = (j < m_) ? m_ + j : 2 * m_ + (j - m_);
                if (basic_pos_[id] >= 0) continue;
                double acc = 0.0;
                const double* brow = binv_.data() + static_cast<std::size_t>(r) * m_;
                for (const auto& [row, coef] : cols_[id].entries) acc += brow[row] * coef;
                if (std::fabs(acc) > 1e-7) replacement = id;
            }
            if (replacement < 0) continue;
            ftran(cols_[replacement].entries, d);
            pivot(replacement, r, d, 0.0);
        }
    }

    // d = B^-1 a for a sparse column a.
    void ftran(const SparseColumn& entries, std::vector<double>& d) const {
        d.assign(m_, 0.0);
        for (const auto& [row, coef] : entries) {
            for (int r = 0; r < m_; ++r) {
                d[r] += binv_[static_cast<std::size_t>(r) * m_ + row] * coef;
            }
        }
    }

    void compute_duals(bool phase1) {
        y_.assign(m_, 0.0);
        for (int r = 0; r < m_; ++r) {
            const auto& bc = cols_[basis_[r]];
            const double c = phase1 ? (bc.artificial ? 1.0 : 0.0) : bc.obj;
            if (c == 0.0) continue;
            const double* row = binv_.data() + static_cast<std::size_t>(r) * m_;
            for (int k = 0; k < m_; ++k) y_[k] += c * row[k];
        }
    }

    double column_cost(int id, bool phase1) const {
        const auto& c = cols_[id];
        if (phase1) return c.artificial ? 1.0 : 0.0;
        return c.obj;
    }

    // One simplex phase. Returns false iff unbounded.
    bool iterate(bool phase1) {
        const long long iter_limit =
            std::max<long long>(100000, 500LL * (m_ + n_struct_));
        std::vector<double> d(m_);
        int certify_resumes = 0;
        for (;;) {
            if (updates_since_refactor_ >= kRefactorEvery) {
                if (!refactor()) throw SolverError("lp: basis became singular");
                recompute_xb_feasible();
            }
            compute_duals(phase1);

            // Pricing over logicals and structural columns in id order:
            // Dantzig (most negative, ties to the smaller id) by default,
            // Bland (first negative) while degeneracy persists.
            int entering = -1;
            double best_rc = -kOptTol;
            for (int id = m_; id < static_cast<int>(cols_.size()); ++id) {
                if (basic_pos_[id] >= 0) continue;
                double rc = column_cost(id, phase1);
                for (const auto& [row, coef] : cols_[id].entries) rc -= coef * y_[row];
                if (rc < best_rc) {
                    entering = id;
                    if (bland_) break;
                    best_rc = rc;
                }
            }
            if (entering < 0) {
                if (phase1) return true;
                // Claimed optimal: re-derive basics from the factor and check
                // residuals before accepting.
                if (certified_ok()) return true;
                if (++certify_resumes > 5) {
                    throw SolverError("lp: failed to certify optimal basis");
                }
                if (!refactor()) throw SolverError("lp: basis became singular");
                if (!recompute_xb_feasible()) {
                    if (!phase1_repair()) throw SolverError("lp: lost feasibility");
                }
                continue;
            }

            ftran(cols_[entering].entries, d);

            // Ratio test. Rows holding a basic artificial pin the step to
            // zero whenever the entering column touches them.
            int leave = -1;
            double theta = std::numeric_limits<double>::infinity();
            bool forced_zero = false;
            for (int r = 0; r < m_; ++r) {
                const bool art = cols_[basis_[r]].artificial;
                if (art && !phase1 && std::fabs(d[r]) > kPivotTol) {
                    if (!forced_zero || std::fabs(d[r]) > std::fabs(d[leave])) {
                        forced_zero = true;
                        theta = 0.0;
                        leave = r;
                    }
                    continue;
                }
                if (forced_zero) continue;
                if (d[r] <= kPivotTol) continue;
                const double ratio = std::max(xb_[r], 0.0) / d[r];
                if (ratio < theta - 1e-12) {
                    theta = ratio;
                    leave = r;
                } else if (ratio <= theta + 1e-12 && leave >= 0) {
                    if (bland_) {
                        if (basis_[r] < basis_[leave]) leave = r;
                    } else if (std::fabs(d[r]) > std::fabs(d[leave])) {
                        leave = r;
                    }
                }
            }
            if (leave < 0) {
                if (phase1) return true;  // cannot happen: phase 1 is bounded
                return false;             // unbounded ray
            }

            pivot(entering, leave, d, theta);

            if (theta <= kDegenerateTheta) {
                if (++degenerate_streak_ >= kBlandTrigger) bland_ = true;
            } else {
                degenerate_streak_ = 0;
                bland_ = false;
            }
            if (++iterations_ > iter_limit) {
                throw SolverError("lp: iteration limit exceeded (" +
                                  std::to_string(iter_limit) + ")");
            }
        }
    }

    // Basis exchange: entering column id enters at row `leave` with step
    // theta; binv_ and xb_ get product-form updates.
    void pivot(int entering, int leave, const std::vector<double>& d, double theta) {
        const double dpiv = d[leave];
        if (std::fabs(dpiv) < 1e-13) throw SolverError("lp: zero pivot element");
        double* prow = binv_.data() + static_cast<std::size_t>(leave) * m_;
        const double inv = 1.0 / dpiv;
        for (int c = 0; c < m_; ++c) prow[c] *= inv;
        for (int r = 0; r < m_; ++r) {
            if (r == leave) continue;
            const double f = d[r];
            if (f == 0.0) continue;
            double* row = binv_.data() + static_cast<std::size_t>(r) * m_;
            for (int c = 0; c < m_; ++c) row[c] -= f * prow[c];
            xb_[r] -= theta * f;
            if (xb_[r] < 0.0 && xb_[r] > -1e-11) xb_[r] = 0.0;
        }
        xb_[leave] = theta;
        basic_pos_[basis_[leave]] = -1;
        set_basic(leave, entering);
        ++updates_since_refactor_;
        have_basis_ = true;
    }

    bool phase1_repair() {
        have_basis_ = false;
        return phase1();
    }

    // Residual certification of the claimed optimal basis: recompute basic
    // values from the factor, check B x_B = b, and verify nonnegativity.
    bool certified_ok() {
        if (!recompute_xb_feasible()) return false;
        std::vector<double> residual(rhs_);
        for (int r = 0; r < m_; ++r) {
            for (const auto& [row, coef] : cols_[basis_[r]].entries) {
                residual[row] -= coef * xb_[r];
            }
        }
        for (const double v : residual) {
            if (std::fabs(v) > 1e-6) return false;
        }
        return true;
    }

    void certify() { compute_duals(/*phase1=*/false); }

    void run_registry_checks(const LpSolution& sol) {
        auto& diag = lp_diagnostics();
        // Duality gap on every optimal solve.
        double dual_obj = 0.0;
        for (int r = 0; r < m_; ++r) dual_obj += y_[r] * rhs_[r];
        const double gap = std::fabs(sol.objective - dual_obj);
        const double rel = gap / (1.0 + std::fabs(sol.objective));
        ++diag.gap_checks;
        diag.max_rel_gap = std::max(diag.max_rel_gap, rel);
        if (gap > 1e-8 * (1.0 + std::fabs(sol.objective))) {
            ++diag.gap_violations;
            diag.last_violation = "duality gap " + std::to_string(gap);
            log_warn("lp: duality gap violation: " + std::to_string(gap));
        }
        // Master-shape checks, fairness-free solves only.
        if (covering_rows_ <= 0 || fairness_rows_ != 0 || hinge_col_start_ < 0) return;
        ++diag.box_checks;
        bool box_ok = true;
        for (int i = 0; i < covering_rows_; ++i) {
            if (y_[i] < -1e-9 || y_[i] > 1.0 + 1e-9) box_ok = false;
        }
        if (!box_ok) {
            ++diag.box_violations;
            diag.last_violation = "dual outside [0,1] box";
            log_warn("lp: covering dual outside [0,1]");
        }
        ++diag.lemma_checks;
        bool lemma_ok = true;
        for (int i = 0; i < covering_rows_; ++i) {
            const double v = sol.primal[hinge_col_start_ + i];
            const double beta = y_[i];
            if (v > 1e-8 && beta < 1.0 - 1e-6) lemma_ok = false;
            if (beta <= 1e-8 && v > 1e-6) lemma_ok = false;
        }
        if (!lemma_ok) {
            ++diag.lemma_violations;
            diag.last_violation = "slack-positivity dual property violated";
            log_warn("lp: slack-positivity dual property violated");
        }
    }
};

inline LpSolution solve_lp(const LpModel& model) {
    SimplexSolver solver(model);
    return solver.solve();
}

// Textual dump for debugging failed solves; format documented in README.
inline std::string dump_lp(const LpModel& model) {
    std::ostringstream os;
    os << "lp rows=" << model.rows.size() << " cols=" << model.columns.size()
       << " covering=" << model.covering_rows << " fairness=" << model.fairness_rows
       << "\n";
    for (std::size_t r = 0; r < model.rows.size(); ++r) {
        os << "row " << r << (model.rows[r].sense == RowSense::GE ? " >= " : " <= ")
           << model.rows[r].rhs << "\n";
    }
    for (std::size_t j = 0; j < model.columns.size(); ++j) {
        const auto& c = model.columns[j];
        os << "col " << j << " obj=" << c.obj
           << (c.tag == LpColumn::Tag::RuleWeight ? " rule " : " slack ") << c.tag_index
           << " :";
        for (const auto& [row, coef] : c.entries) os << " (" << row << "," << coef << ")";
        os << "\n";
    }
    return os.str();
}

}  // namespace rulegen
