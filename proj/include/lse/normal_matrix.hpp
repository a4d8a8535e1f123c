#pragma once

#include <cmath>
#include <vector>

#include "lse/core_types.hpp"
#include "lse/sparse_matrix.hpp"

namespace lse {

/// Lower triangle (diagonal included) of A^T A + omega^2 I.  The shift
/// parameter is omega itself and is squared here.  With omega > 0 every
/// diagonal entry is structurally present.
inline SparseMatrix normal_matrix(const SparseMatrix& A, double omega = 0.0) {
    if (omega < 0.0) throw ContractViolation("normal_matrix: shift must be nonnegative");
    idx n = A.ncols();
    SparseMatrix AT = transpose(A);  // columns of AT are the rows of A
    SparseMatrix H;
    H.set_shape_for_append(n);
    DenseVector work = zeros(n);
    std::vector<char> mark(static_cast<size_t>(n), 0);
    std::vector<idx> pattern, rows;
    std::vector<double> vals;
    double shift = omega * omega;
    for (idx j = 0; j < n; ++j) {
        pattern.clear();
        if (shift > 0.0) {
            mark[static_cast<size_t>(j)] = 1;
            pattern.push_back(j);
            work[static_cast<size_t>(j)] = shift;
        }
        for (idx ka = A.col_begin(j); ka < A.col_end(j); ++ka) {
            idx r = A.row_at(ka);
            double arj = A.value_at(ka);
            for (idx kt = AT.col_begin(r); kt < AT.col_end(r); ++kt) {
                idx k = AT.row_at(kt);
                if (k < j) continue;  // lower triangle only
                if (!mark[static_cast<size_t>(k)]) {
                    mark[static_cast<size_t>(k)] = 1;
                    pattern.push_back(k);
                }
                work[static_cast<size_t>(k)] += arj * AT.value_at(kt);
            }
        }
        std::sort(pattern.begin(), pattern.end());
        rows.clear();
        vals.clear();
        for (idx i : pattern) {
            double v = work[static_cast<size_t>(i)];
            work[static_cast<size_t>(i)] = 0.0;
            mark[static_cast<size_t>(i)] = 0;
            if (v != 0.0) {
                rows.push_back(i);
                vals.push_back(v);
            }
        }
        H.append_column(rows, vals);
    }
    return H;
}

}  // namespace lse
