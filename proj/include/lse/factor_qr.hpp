#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "lse/core_types.hpp"
#include "lse/dense_la.hpp"
#include "lse/errors.hpp"
#include "lse/normal_matrix.hpp"
#include "lse/ordering.hpp"
#include "lse/sparse_matrix.hpp"
#include "lse/tri_solve.hpp"

namespace lse {

enum class QrPivoting { none, column_norm };
enum class QrOrdering { natural, fill_reducing };

struct QrOptions {
    QrPivoting pivoting = QrPivoting::none;
    /// Pre-ordering of the columns, applied only when pivoting is none.
    QrOrdering ordering = QrOrdering::natural;
    /// Relative rank test: |R_jj| <= rank_tol * max_i |R_ii| fails.
    double rank_tol = 1e-12;
    /// The column-norm pivoted path works on a dense copy; reject inputs
    /// beyond this cell count.
    idx dense_path_max_cells = 8'000'000;
};

/// Householder QR of a sparse matrix: M * P = Q [R; 0].
///
/// Reflectors are kept explicitly as sparse vectors so Q and Q^T can be
/// applied later (H_k = I - beta_k v_k v_k^T).  When a right-hand side
/// is passed at factorization time, f = (Q^T rhs)(0:n) and g_norm =
/// ||(Q^T rhs)(n:m)|| are stored alongside the factor.
struct QrFactor {
    idx nrows = 0;
    idx ncols = 0;
    std::vector<std::vector<idx>> v_rows;
    std::vector<std::vector<double>> v_vals;
    std::vector<double> beta;
    SparseMatrix R;       // ncols x ncols, upper triangular
    Permutation colperm;  // factor column j is input column colperm.map[j]
    DenseVector f;
    double g_norm = 0.0;
    bool has_rhs = false;

    DenseVector apply_qt(DenseVector x) const {
        if (static_cast<idx>(x.size()) != nrows) throw ContractViolation("apply_qt: length mismatch");
        for (idx k = 0; k < ncols; ++k) reflect(k, x);
        return x;
    }

    DenseVector apply_q(DenseVector x) const {
        if (static_cast<idx>(x.size()) != nrows) throw ContractViolation("apply_q: length mismatch");
        for (idx k = ncols - 1; k >= 0; --k) reflect(k, x);
        return x;
    }

    /// R y = rhs (factor-space result).
    DenseVector solve_r(const DenseVector& rhs) const { return tri_solve(R, rhs, TriMode::upper); }

    /// R^T t = rhs (factor-space rhs).
    DenseVector solve_rt(const DenseVector& rhs) const {
        return tri_solve(R, rhs, TriMode::upper_transpose);
    }

    /// R P^T y = rhs; the result is expressed in original column order.
    DenseVector solve_rpt(const DenseVector& rhs) const { return colperm.scatter(solve_r(rhs)); }

    /// P R^T z = rhs, i.e. z = R^{-T} P^T rhs (factor-space result).
    DenseVector solve_prt(const DenseVector& rhs) const { return solve_rt(colperm.gather(rhs)); }

    /// Least-squares solution of min ||M x - b||.
    DenseVector ls_solve(const DenseVector& b) const {
        DenseVector q = apply_qt(b);
        DenseVector fq(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(ncols));
        return colperm.scatter(solve_r(fq));
    }

private:
    void reflect(idx k, DenseVector& x) const {
        double bk = beta[static_cast<size_t>(k)];
        if (bk == 0.0) return;
        const auto& rows = v_rows[static_cast<size_t>(k)];
        const auto& vals = v_vals[static_cast<size_t>(k)];
        double d = 0.0;
        for (size_t t = 0; t < rows.size(); ++t) d += vals[t] * x[static_cast<size_t>(rows[t])];
        d *= bk;
        if (d == 0.0) return;
        for (size_t t = 0; t < rows.size(); ++t) x[static_cast<size_t>(rows[t])] -= d * vals[t];
    }
};

namespace detail {

inline void qr_rank_check(const QrFactor& F, double rank_tol) {
    double dmax = 0.0;
    DenseVector diag(static_cast<size_t>(F.ncols), 0.0);
    for (idx j = 0; j < F.ncols; ++j) {
        for (idx k = F.R.col_begin(j); k < F.R.col_end(j); ++k)
            if (F.R.row_at(k) == j) diag[static_cast<size_t>(j)] = F.R.value_at(k);
        dmax = std::max(dmax, std::fabs(diag[static_cast<size_t>(j)]));
    }
    for (idx j = 0; j < F.ncols; ++j)
        if (std::fabs(diag[static_cast<size_t>(j)]) <= rank_tol * dmax)
            throw RankDeficientError("householder_qr: matrix is rank deficient", j);
}

inline QrFactor householder_qr_sparse(const SparseMatrix& M, Permutation colperm) {
    idx m = M.nrows(), n = M.ncols();
    QrFactor F;
    F.nrows = m;
    F.ncols = n;
    F.colperm = std::move(colperm);
    F.v_rows.resize(static_cast<size_t>(n));
    F.v_vals.resize(static_cast<size_t>(n));
    F.beta.assign(static_cast<size_t>(n), 0.0);
    F.R.set_shape_for_append(n);

    DenseVector w(static_cast<size_t>(m), 0.0);
    std::vector<idx> r_rows;
    std::vector<double> r_vals;
    for (idx j = 0; j < n; ++j) {
        std::fill(w.begin(), w.end(), 0.0);
        idx jcol = F.colperm.map[static_cast<size_t>(j)];
        for (idx k = M.col_begin(jcol); k < M.col_end(jcol); ++k)
            w[static_cast<size_t>(M.row_at(k))] = M.value_at(k);

        for (idx k = 0; k < j; ++k) {
            double bk = F.beta[static_cast<size_t>(k)];
            if (bk == 0.0) continue;
            const auto& vr = F.v_rows[static_cast<size_t>(k)];
            const auto& vv = F.v_vals[static_cast<size_t>(k)];
            double d = 0.0;
            for (size_t t = 0; t < vr.size(); ++t) d += vv[t] * w[static_cast<size_t>(vr[t])];
            if (d == 0.0) continue;
            d *= bk;
            for (size_t t = 0; t < vr.size(); ++t) w[static_cast<size_t>(vr[t])] -= d * vv[t];
        }

        r_rows.clear();
        r_vals.clear();
        for (idx i = 0; i < j; ++i) {
            if (w[static_cast<size_t>(i)] != 0.0) {
                r_rows.push_back(i);
                r_vals.push_back(w[static_cast<size_t>(i)]);
            }
        }

        double sigma2 = 0.0;
        for (idx i = j; i < m; ++i) sigma2 += w[static_cast<size_t>(i)] * w[static_cast<size_t>(i)];
        double sigma = std::sqrt(sigma2);
        if (sigma > 0.0) {
            double alpha = w[static_cast<size_t>(j)] >= 0.0 ? -sigma : sigma;
            w[static_cast<size_t>(j)] -= alpha;
            auto& vr = F.v_rows[static_cast<size_t>(j)];
            auto& vv = F.v_vals[static_cast<size_t>(j)];
            double vtv = 0.0;
            for (idx i = j; i < m; ++i) {
                double wi = w[static_cast<size_t>(i)];
                if (wi != 0.0) {
                    vr.push_back(i);
                    vv.push_back(wi);
                    vtv += wi * wi;
                }
            }
            F.beta[static_cast<size_t>(j)] = 2.0 / vtv;
            r_rows.push_back(j);
            r_vals.push_back(alpha);
        }
        F.R.append_column(r_rows, r_vals);
    }
    return F;
}

inline QrFactor householder_qr_dense(const SparseMatrix& M, idx max_cells) {
    idx m = M.nrows(), n = M.ncols();
    if (m * n > max_cells)
        throw ContractViolation(
            "householder_qr: column-norm pivoting uses a dense working copy and the input "
            "exceeds the size guard; use pivoting=none");
    DensePivotedQr dq(DenseMatrix::from_sparse(M), 0.0, true);
    QrFactor F;
    F.nrows = m;
    F.ncols = n;
    F.colperm = Permutation(dq.perm);
    F.v_rows.resize(static_cast<size_t>(n));
    F.v_vals.resize(static_cast<size_t>(n));
    F.beta.assign(static_cast<size_t>(n), 0.0);
    F.R.set_shape_for_append(n);
    std::vector<idx> r_rows;
    std::vector<double> r_vals;
    for (idx j = 0; j < n; ++j) {
        F.beta[static_cast<size_t>(j)] = dq.beta[static_cast<size_t>(j)];
        auto& vr = F.v_rows[static_cast<size_t>(j)];
        auto& vv = F.v_vals[static_cast<size_t>(j)];
        for (idx i = j; i < m; ++i) {
            double v = dq.qr(i, j);
            if (v != 0.0) {
                vr.push_back(i);
                vv.push_back(v);
            }
        }
        r_rows.clear();
        r_vals.clear();
        for (idx i = 0; i < j; ++i) {
            double v = dq.qr(i, j);
            if (v != 0.0) {
                r_rows.push_back(i);
                r_vals.push_back(v);
            }
        }
        if (dq.rdiag[static_cast<size_t>(j)] != 0.0) {
            r_rows.push_back(j);
            r_vals.push_back(dq.rdiag[static_cast<size_t>(j)]);
        }
        F.R.append_column(r_rows, r_vals);
    }
    return F;
}

}  // namespace detail

inline QrFactor householder_qr(const SparseMatrix& M,
                               const std::optional<DenseVector>& rhs = std::nullopt,
                               const QrOptions& opts = {}) {
    if (M.nrows() < M.ncols()) throw ContractViolation("householder_qr: requires nrows >= ncols");
    QrFactor F;
    if (opts.pivoting == QrPivoting::column_norm) {
        F = detail::householder_qr_dense(M, opts.dense_path_max_cells);
    } else {
        Permutation perm = opts.ordering == QrOrdering::fill_reducing
                               ? min_degree_ordering(normal_matrix(M))
                               : Permutation::identity(M.ncols());
        F = detail::householder_qr_sparse(M, std::move(perm));
    }
    detail::qr_rank_check(F, opts.rank_tol);
    if (rhs) {
        if (static_cast<idx>(rhs->size()) != M.nrows())
            throw ContractViolation("householder_qr: rhs length mismatch");
        DenseVector q = F.apply_qt(*rhs);
        F.f.assign(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(F.ncols));
        double g2 = 0.0;
        for (idx i = F.ncols; i < F.nrows; ++i) g2 += q[static_cast<size_t>(i)] * q[static_cast<size_t>(i)];
        F.g_norm = std::sqrt(g2);
        F.has_rhs = true;
    }
    return F;
}

/// Triangular solves against the R factor.
inline DenseVector tri_solve(const QrFactor& F, const DenseVector& rhs, TriMode mode) {
    return tri_solve(F.R, rhs, mode);
}

inline SparseMatrix tri_solve(const QrFactor& F, const SparseMatrix& rhs, TriMode mode) {
    return tri_solve(F.R, rhs, mode);
}

}  // namespace lse
