#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "lse/core_types.hpp"
#include "lse/errors.hpp"
#include "lse/normal_matrix.hpp"
#include "lse/ordering.hpp"
#include "lse/sparse_matrix.hpp"
#include "lse/tri_solve.hpp"

namespace lse {

enum class CholOrdering { natural, fill_reducing };

/// Sparse Cholesky factor: (P H P^T) = L L^T with P the gather matrix of
/// `perm` (factor index j holds original index perm.map[j]).
struct CholFactor {
    SparseMatrix L;  // lower triangular, diagonal first in each column
    Permutation perm;
    bool is_incomplete = false;

    /// Solves H x = rhs through the factor (both triangular solves plus
    /// the permutation bookkeeping).  For an incomplete factor this is
    /// the preconditioner application.
    DenseVector solve(const DenseVector& rhs) const {
        DenseVector t = tri_solve(L, perm.gather(rhs), TriMode::lower);
        return perm.scatter(tri_solve(L, t, TriMode::lower_transpose));
    }
};

namespace detail {

/// Permutes a lower-triangle symmetric matrix: result(i,j) = H(map[i], map[j]),
/// storing the lower triangle of the permuted matrix.
inline SparseMatrix permute_symmetric_lower(const SparseMatrix& H, const Permutation& perm) {
    idx n = H.ncols();
    Permutation inv = perm.inverse();
    std::vector<Triplet> trips;
    trips.reserve(static_cast<size_t>(H.nnz()));
    for (idx j = 0; j < n; ++j) {
        for (idx k = H.col_begin(j); k < H.col_end(j); ++k) {
            idx pi = inv.map[static_cast<size_t>(H.row_at(k))];
            idx pj = inv.map[static_cast<size_t>(j)];
            if (pi < pj) std::swap(pi, pj);
            trips.push_back({pi, pj, H.value_at(k)});
        }
    }
    return SparseMatrix::from_triplets(n, n, std::move(trips));
}

/// Left-looking sparse Cholesky of a lower-triangle matrix in its given
/// order.  Throws NotPositiveDefiniteError at the first bad pivot.
inline SparseMatrix cholesky_numeric(const SparseMatrix& Hp) {
    idx n = Hp.ncols();
    SparseMatrix L;
    L.set_shape_for_append(n);
    // rowlist[i]: columns k < i whose next unconsumed entry sits at row i
    std::vector<std::vector<idx>> rowlist(static_cast<size_t>(n));
    std::vector<idx> next_ptr(static_cast<size_t>(n), 0);
    DenseVector work = zeros(n);
    std::vector<char> mark(static_cast<size_t>(n), 0);
    std::vector<idx> pattern, rows;
    std::vector<double> vals;

    for (idx j = 0; j < n; ++j) {
        pattern.clear();
        for (idx k = Hp.col_begin(j); k < Hp.col_end(j); ++k) {
            idx i = Hp.row_at(k);
            if (i < j) continue;
            mark[static_cast<size_t>(i)] = 1;
            pattern.push_back(i);
            work[static_cast<size_t>(i)] = Hp.value_at(k);
        }
        if (!mark[static_cast<size_t>(j)]) {
            mark[static_cast<size_t>(j)] = 1;
            pattern.push_back(j);
            work[static_cast<size_t>(j)] = 0.0;
        }
        for (idx k : rowlist[static_cast<size_t>(j)]) {
            idx ptr = next_ptr[static_cast<size_t>(k)];
            double ljk = L.value_at(ptr);
            for (idx t = ptr; t < L.col_end(k); ++t) {
                idx i = L.row_at(t);
                if (!mark[static_cast<size_t>(i)]) {
                    mark[static_cast<size_t>(i)] = 1;
                    pattern.push_back(i);
                    work[static_cast<size_t>(i)] = 0.0;
                }
                work[static_cast<size_t>(i)] -= L.value_at(t) * ljk;
            }
        }
        double d = work[static_cast<size_t>(j)];
        if (d <= 0.0) {
            for (idx i : pattern) {
                mark[static_cast<size_t>(i)] = 0;
                work[static_cast<size_t>(i)] = 0.0;
            }
            throw NotPositiveDefiniteError("cholesky: nonpositive pivot", j);
        }
        double djj = std::sqrt(d);
        std::sort(pattern.begin(), pattern.end());
        rows.clear();
        vals.clear();
        rows.push_back(j);
        vals.push_back(djj);
        for (idx i : pattern) {
            double v = work[static_cast<size_t>(i)];
            work[static_cast<size_t>(i)] = 0.0;
            mark[static_cast<size_t>(i)] = 0;
            if (i == j) continue;
            if (v != 0.0) {
                rows.push_back(i);
                vals.push_back(v / djj);
            }
        }
        idx col_start = L.nnz();
        L.append_column(rows, vals);
        if (static_cast<idx>(rows.size()) > 1) {
            next_ptr[static_cast<size_t>(j)] = col_start + 1;
            rowlist[static_cast<size_t>(rows[1])].push_back(j);
        }
        // advance the contributing columns to their next row
        for (idx k : rowlist[static_cast<size_t>(j)]) {
            idx ptr = ++next_ptr[static_cast<size_t>(k)];
            if (ptr < L.col_end(k)) rowlist[static_cast<size_t>(L.row_at(ptr))].push_back(k);
        }
        rowlist[static_cast<size_t>(j)].clear();
        rowlist[static_cast<size_t>(j)].shrink_to_fit();
    }
    return L;
}

}  // namespace detail

/// Sparse Cholesky of a symmetric positive definite H given by its lower
/// triangle.  With fill_reducing, a greedy minimum-degree permutation is
/// applied first.
inline CholFactor cholesky(const SparseMatrix& H, CholOrdering ordering = CholOrdering::fill_reducing) {
    if (H.nrows() != H.ncols()) throw ContractViolation("cholesky: matrix must be square");
    Permutation perm = ordering == CholOrdering::fill_reducing ? min_degree_ordering(H)
                                                               : Permutation::identity(H.ncols());
    SparseMatrix Hp =
        ordering == CholOrdering::fill_reducing ? detail::permute_symmetric_lower(H, perm) : H;
    CholFactor F;
    F.L = detail::cholesky_numeric(Hp);
    F.perm = std::move(perm);
    F.is_incomplete = false;
    return F;
}

/// Zero-fill incomplete Cholesky: the factor keeps exactly the sparsity
/// pattern of the lower triangle of H (diagonal always included).  A
/// nonpositive pivot restarts the factorization of H + alpha I with
/// alpha starting at max(shift, 1e-8) * maxdiag and doubling, up to 20
/// restarts.
inline CholFactor incomplete_cholesky(const SparseMatrix& H, double shift = 0.0) {
    if (H.nrows() != H.ncols()) throw ContractViolation("incomplete_cholesky: matrix must be square");
    idx n = H.ncols();
    double maxdiag = 0.0;
    for (idx j = 0; j < n; ++j)
        for (idx k = H.col_begin(j); k < H.col_end(j); ++k)
            if (H.row_at(k) == j) maxdiag = std::max(maxdiag, H.value_at(k));
    if (maxdiag == 0.0) maxdiag = 1.0;

    // pattern: lower(H) with a structural diagonal in every column
    std::vector<idx> col_ptr(static_cast<size_t>(n) + 1, 0);
    std::vector<idx> rows;
    std::vector<double> base_vals;
    for (idx j = 0; j < n; ++j) {
        bool has_diag = false;
        for (idx k = H.col_begin(j); k < H.col_end(j); ++k)
            if (H.row_at(k) == j) has_diag = true;
        if (!has_diag) {
            rows.push_back(j);
            base_vals.push_back(0.0);
        }
        for (idx k = H.col_begin(j); k < H.col_end(j); ++k) {
            if (H.row_at(k) < j) continue;
            rows.push_back(H.row_at(k));
            base_vals.push_back(H.value_at(k));
        }
        std::sort(rows.begin() + col_ptr[static_cast<size_t>(j)], rows.end());
        col_ptr[static_cast<size_t>(j) + 1] = static_cast<idx>(rows.size());
    }

    double alpha = shift;
    for (int attempt = 0; attempt <= 20; ++attempt) {
        std::vector<double> vals = base_vals;
        for (idx j = 0; j < n; ++j) {
            // diagonal is the first entry of each column by construction
            vals[static_cast<size_t>(col_ptr[static_cast<size_t>(j)])] += alpha;
        }
        bool ok = true;
        for (idx k = 0; k < n && ok; ++k) {
            idx kb = col_ptr[static_cast<size_t>(k)], ke = col_ptr[static_cast<size_t>(k) + 1];
            double d = vals[static_cast<size_t>(kb)];
            if (d <= 0.0) {
                ok = false;
                break;
            }
            double dk = std::sqrt(d);
            vals[static_cast<size_t>(kb)] = dk;
            for (idx t = kb + 1; t < ke; ++t) vals[static_cast<size_t>(t)] /= dk;
            for (idx t = kb + 1; t < ke; ++t) {
                idx jcol = rows[static_cast<size_t>(t)];
                double ljk = vals[static_cast<size_t>(t)];
                if (ljk == 0.0) continue;
                // update column jcol over the shared pattern (rows >= jcol)
                idx ja = col_ptr[static_cast<size_t>(jcol)], je = col_ptr[static_cast<size_t>(jcol) + 1];
                idx ka = t;
                while (ja < je && ka < ke) {
                    idx rj = rows[static_cast<size_t>(ja)], rk = rows[static_cast<size_t>(ka)];
                    if (rj == rk) {
                        vals[static_cast<size_t>(ja)] -= vals[static_cast<size_t>(ka)] * ljk;
                        ++ja;
                        ++ka;
                    } else if (rj < rk) {
                        ++ja;
                    } else {
                        ++ka;
                    }
                }
            }
        }
        if (ok) {
            CholFactor F;
            F.L = SparseMatrix::from_csc(n, n, col_ptr, rows, std::move(vals));
            F.perm = Permutation::identity(n);
            F.is_incomplete = true;
            return F;
        }
        alpha = attempt == 0 ? std::max(shift, 1e-8) * maxdiag : 2.0 * alpha;
    }
    throw BreakdownError("incomplete_cholesky: breakdown persisted after 20 shift restarts");
}

/// Triangular solves against the L factor.
inline DenseVector tri_solve(const CholFactor& F, const DenseVector& rhs, TriMode mode) {
    return tri_solve(F.L, rhs, mode);
}

inline SparseMatrix tri_solve(const CholFactor& F, const SparseMatrix& rhs, TriMode mode) {
    return tri_solve(F.L, rhs, mode);
}

}  // namespace lse
