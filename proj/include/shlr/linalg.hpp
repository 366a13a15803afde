#pragma once

#include "shlr/errors.hpp"
#include "shlr/rational.hpp"

#include <map>
#include <optional>
#include <vector>

namespace shlr {

/// Sparse row vector over Q.
using SparseRow = std::map<int, Rat>;

/// Sparse matrix over Q, stored by rows. Row i maps column -> entry.
struct SparseMat {
    int rows = 0;
    int cols = 0;
    std::vector<SparseRow> row;

    SparseMat() = default;
    SparseMat(int r, int c) : rows(r), cols(c), row(r) {}

    void set(int i, int j, const Rat& v) {
        if (v == 0)
            row[i].erase(j);
        else
            row[i][j] = v;
    }
    void add(int i, int j, const Rat& v) {
        if (v == 0) return;
        auto it = row[i].find(j);
        if (it == row[i].end()) {
            row[i][j] = v;
        } else {
            it->second += v;
            if (it->second == 0) row[i].erase(it);
        }
    }
    Rat get(int i, int j) const {
        auto it = row[i].find(j);
        return it == row[i].end() ? Rat(0) : it->second;
    }

    /// this * other
    SparseMat mul(const SparseMat& o) const {
        if (cols != o.rows) throw argument_error("matrix product shape mismatch");
        SparseMat out(rows, o.cols);
        for (int i = 0; i < rows; ++i)
            for (auto& [k, v] : row[i])
                for (auto& [j, w] : o.row[k]) out.add(i, j, v * w);
        return out;
    }

    bool is_zero() const {
        for (auto& r : row)
            if (!r.empty()) return false;
        return true;
    }
};

/// Row echelon form by fraction-free (Bareiss-style) elimination on a dense
/// integer copy. Deterministic: pivot is the first nonzero column, rows
/// scanned in order. Returns echelon rows as sparse rationals together with
/// the pivot column of each.
struct Echelon {
    std::vector<SparseRow> rows;   // normalized: leading entry 1
    std::vector<int> pivot_col;    // per echelon row
    int rank() const { return (int)rows.size(); }
};

inline Echelon echelon_form(const std::vector<SparseRow>& input, int cols) {
    // Clear denominators row-wise, keep integers, run Bareiss-flavoured
    // elimination with exact division where possible.
    std::vector<SparseRow> work = input;
    Echelon e;
    int r = 0;
    for (int c = 0; c < cols; ++c) {
        int p = -1;
        for (int i = r; i < (int)work.size(); ++i) {
            auto it = work[i].find(c);
            if (it != work[i].end() && it->second != 0) {
                p = i;
                break;
            }
        }
        if (p < 0) continue;
        std::swap(work[p], work[r]);
        Rat pv = work[r][c];
        for (auto& [j, v] : work[r]) v /= pv;
        for (int i = 0; i < (int)work.size(); ++i) {
            if (i == r) continue;
            auto it = work[i].find(c);
            if (it == work[i].end()) continue;
            Rat f = it->second;
            for (auto& [j, v] : work[r]) {
                auto jt = work[i].find(j);
                if (jt == work[i].end()) {
                    Rat nv = -f * v;
                    if (nv != 0) work[i][j] = nv;
                } else {
                    jt->second -= f * v;
                    if (jt->second == 0) work[i].erase(jt);
                }
            }
        }
        e.rows.push_back(work[r]);
        e.pivot_col.push_back(c);
        ++r;
        if (r == (int)work.size()) break;
    }
    return e;
}

inline int mat_rank(const SparseMat& m) { return echelon_form(m.row, m.cols).rank(); }

/// Solve A x = b with deterministic earliest-pivot preference; free variables
/// are set to zero. Returns NONE when inconsistent.
inline std::optional<std::vector<Rat>> solve_system(const SparseMat& A,
                                                    const std::vector<Rat>& b) {
    if ((int)b.size() != A.rows) throw argument_error("solve_system: rhs size mismatch");
    int n = A.cols;
    std::vector<SparseRow> aug = A.row;
    for (int i = 0; i < A.rows; ++i)
        if (b[i] != 0) aug[i][n] = b[i];
    Echelon e = echelon_form(aug, n + 1);
    std::vector<Rat> x(n, Rat(0));
    for (int i = e.rank() - 1; i >= 0; --i) {
        int pc = e.pivot_col[i];
        if (pc == n) return std::nullopt;  // 0 = 1 row
        Rat rhs(0);
        auto it = e.rows[i].find(n);
        if (it != e.rows[i].end()) rhs = it->second;
        Rat acc = rhs;
        for (auto& [j, v] : e.rows[i]) {
            if (j == pc || j == n) continue;
            acc -= v * x[j];
        }
        x[pc] = acc;
    }
    return x;
}

/// Basis of the kernel of A, echelonized deterministically.
inline std::vector<std::vector<Rat>> kernel_basis(const SparseMat& A) {
    Echelon e = echelon_form(A.row, A.cols);
    std::vector<char> is_pivot(A.cols, 0);
    for (int c : e.pivot_col) is_pivot[c] = 1;
    std::vector<std::vector<Rat>> out;
    for (int fc = 0; fc < A.cols; ++fc) {
        if (is_pivot[fc]) continue;
        std::vector<Rat> v(A.cols, Rat(0));
        v[fc] = 1;
        for (int i = e.rank() - 1; i >= 0; --i) {
            int pc = e.pivot_col[i];
            Rat acc(0);
            for (auto& [j, w] : e.rows[i]) {
                if (j == pc) continue;
                acc -= w * v[j];
            }
            v[pc] = acc;
        }
        out.push_back(std::move(v));
    }
    return out;
}

/// Image membership: is b in the column span of A?
inline bool in_column_span(const SparseMat& A, const std::vector<Rat>& b) {
    return solve_system(A, b).has_value();
}

}  // namespace shlr
