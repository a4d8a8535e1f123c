#pragma once

#include <cmath>
#include <vector>

#include "lse/core_types.hpp"
#include "lse/errors.hpp"
#include "lse/sparse_matrix.hpp"

namespace lse {

enum class TriMode { lower, upper, lower_transpose, upper_transpose };

namespace detail {

inline double diag_entry(const SparseMatrix& T, idx j, bool lower) {
    // lower-triangular CSC stores the diagonal first in each column,
    // upper-triangular stores it last
    idx b = T.col_begin(j), e = T.col_end(j);
    if (b == e) return 0.0;
    idx k = lower ? b : e - 1;
    return T.row_at(k) == j ? T.value_at(k) : 0.0;
}

}  // namespace detail

/// Solves T x = rhs (or T^T x = rhs) for a sparse triangular T in CSC
/// form.  All four modes work with column access only.
inline DenseVector tri_solve(const SparseMatrix& T, const DenseVector& rhs, TriMode mode) {
    idx n = T.ncols();
    if (T.nrows() != n) throw ContractViolation("tri_solve: matrix must be square");
    if (static_cast<idx>(rhs.size()) != n) throw ContractViolation("tri_solve: rhs length mismatch");
    DenseVector x = rhs;
    switch (mode) {
        case TriMode::lower: {
            for (idx j = 0; j < n; ++j) {
                double d = detail::diag_entry(T, j, true);
                if (d == 0.0) throw SingularFactorError("tri_solve: zero diagonal", j);
                double xj = x[static_cast<size_t>(j)] / d;
                x[static_cast<size_t>(j)] = xj;
                if (xj != 0.0)
                    for (idx k = T.col_begin(j) + 1; k < T.col_end(j); ++k)
                        x[static_cast<size_t>(T.row_at(k))] -= T.value_at(k) * xj;
            }
            break;
        }
        case TriMode::upper: {
            for (idx j = n - 1; j >= 0; --j) {
                double d = detail::diag_entry(T, j, false);
                if (d == 0.0) throw SingularFactorError("tri_solve: zero diagonal", j);
                double xj = x[static_cast<size_t>(j)] / d;
                x[static_cast<size_t>(j)] = xj;
                if (xj != 0.0)
                    for (idx k = T.col_begin(j); k < T.col_end(j) - 1; ++k)
                        x[static_cast<size_t>(T.row_at(k))] -= T.value_at(k) * xj;
            }
            break;
        }
        case TriMode::lower_transpose: {
            for (idx j = n - 1; j >= 0; --j) {
                double d = detail::diag_entry(T, j, true);
                if (d == 0.0) throw SingularFactorError("tri_solve: zero diagonal", j);
                double s = x[static_cast<size_t>(j)];
                for (idx k = T.col_begin(j) + 1; k < T.col_end(j); ++k)
                    s -= T.value_at(k) * x[static_cast<size_t>(T.row_at(k))];
                x[static_cast<size_t>(j)] = s / d;
            }
            break;
        }
        case TriMode::upper_transpose: {
            for (idx j = 0; j < n; ++j) {
                double d = detail::diag_entry(T, j, false);
                if (d == 0.0) throw SingularFactorError("tri_solve: zero diagonal", j);
                double s = x[static_cast<size_t>(j)];
                for (idx k = T.col_begin(j); k < T.col_end(j) - 1; ++k)
                    s -= T.value_at(k) * x[static_cast<size_t>(T.row_at(k))];
                x[static_cast<size_t>(j)] = s / d;
            }
            break;
        }
    }
    return x;
}

/// Multi-right-hand-side variant: each column of RHS is solved
/// independently; exact zeros are pruned from the result.
inline SparseMatrix tri_solve(const SparseMatrix& T, const SparseMatrix& rhs, TriMode mode) {
    if (rhs.nrows() != T.ncols()) throw ContractViolation("tri_solve: rhs row count mismatch");
    SparseMatrix X;
    X.set_shape_for_append(T.ncols());
    DenseVector col = zeros(T.ncols());
    std::vector<idx> rows;
    std::vector<double> vals;
    for (idx j = 0; j < rhs.ncols(); ++j) {
        std::fill(col.begin(), col.end(), 0.0);
        for (idx k = rhs.col_begin(j); k < rhs.col_end(j); ++k)
            col[static_cast<size_t>(rhs.row_at(k))] = rhs.value_at(k);
        DenseVector sol = tri_solve(T, col, mode);
        rows.clear();
        vals.clear();
        for (idx i = 0; i < static_cast<idx>(sol.size()); ++i) {
            if (sol[static_cast<size_t>(i)] != 0.0) {
                rows.push_back(i);
                vals.push_back(sol[static_cast<size_t>(i)]);
            }
        }
        X.append_column(rows, vals);
    }
    return X;
}

}  // namespace lse
