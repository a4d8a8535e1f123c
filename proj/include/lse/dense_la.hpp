#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lse/core_types.hpp"
#include "lse/errors.hpp"
#include "lse/sparse_matrix.hpp"

namespace lse {

/// Small dense row-major matrix used for the p-by-p systems, the dense
/// KKT oracle and rank/conditioning probes.  Not meant for large n.
struct DenseMatrix {
    idx rows = 0;
    idx cols = 0;
    std::vector<double> a;

    DenseMatrix() = default;
    DenseMatrix(idx r, idx c) : rows(r), cols(c), a(static_cast<size_t>(r) * static_cast<size_t>(c), 0.0) {}

    double& operator()(idx i, idx j) { return a[static_cast<size_t>(i) * static_cast<size_t>(cols) + static_cast<size_t>(j)]; }
    double operator()(idx i, idx j) const { return a[static_cast<size_t>(i) * static_cast<size_t>(cols) + static_cast<size_t>(j)]; }

    static DenseMatrix from_sparse(const SparseMatrix& M) {
        DenseMatrix D(M.nrows(), M.ncols());
        for (idx j = 0; j < M.ncols(); ++j)
            for (idx k = M.col_begin(j); k < M.col_end(j); ++k) D(M.row_at(k), j) = M.value_at(k);
        return D;
    }

    DenseVector mul(const DenseVector& x) const {
        if (static_cast<idx>(x.size()) != cols) throw ContractViolation("DenseMatrix::mul: size mismatch");
        DenseVector y = zeros(rows);
        for (idx i = 0; i < rows; ++i) {
            double s = 0.0;
            for (idx j = 0; j < cols; ++j) s += (*this)(i, j) * x[static_cast<size_t>(j)];
            y[static_cast<size_t>(i)] = s;
        }
        return y;
    }

    DenseVector mul_transpose(const DenseVector& x) const {
        if (static_cast<idx>(x.size()) != rows) throw ContractViolation("DenseMatrix::mul_transpose: size mismatch");
        DenseVector y = zeros(cols);
        for (idx i = 0; i < rows; ++i)
            for (idx j = 0; j < cols; ++j) y[static_cast<size_t>(j)] += (*this)(i, j) * x[static_cast<size_t>(i)];
        return y;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : a) m = std::max(m, std::fabs(v));
        return m;
    }
};

/// LU factorization with partial pivoting; handles symmetric indefinite
/// systems at oracle scale.  Throws NonUniquenessError on a (numerically)
/// singular pivot.
struct DenseLu {
    DenseMatrix lu;
    std::vector<idx> piv;

    explicit DenseLu(DenseMatrix A) : lu(std::move(A)) {
        if (lu.rows != lu.cols) throw ContractViolation("DenseLu: matrix must be square");
        idx n = lu.rows;
        piv.resize(static_cast<size_t>(n));
        double scale = std::max(lu.max_abs(), 1e-300);
        for (idx k = 0; k < n; ++k) {
            idx imax = k;
            double vmax = std::fabs(lu(k, k));
            for (idx i = k + 1; i < n; ++i) {
                if (std::fabs(lu(i, k)) > vmax) {
                    vmax = std::fabs(lu(i, k));
                    imax = i;
                }
            }
            if (vmax <= 1e-14 * scale)
                throw NonUniquenessError("singular system: pivot " + std::to_string(k) +
                                         " is negligible");
            piv[static_cast<size_t>(k)] = imax;
            if (imax != k)
                for (idx j = 0; j < n; ++j) std::swap(lu(k, j), lu(imax, j));
            for (idx i = k + 1; i < n; ++i) {
                lu(i, k) /= lu(k, k);
                double lik = lu(i, k);
                if (lik == 0.0) continue;
                for (idx j = k + 1; j < n; ++j) lu(i, j) -= lik * lu(k, j);
            }
        }
    }

    DenseVector solve(DenseVector b) const {
        idx n = lu.rows;
        if (static_cast<idx>(b.size()) != n) throw ContractViolation("DenseLu::solve: size mismatch");
        // the stored factors are in final row order, so permute first
        for (idx k = 0; k < n; ++k)
            std::swap(b[static_cast<size_t>(k)], b[static_cast<size_t>(piv[static_cast<size_t>(k)])]);
        for (idx k = 0; k < n; ++k)
            for (idx i = k + 1; i < n; ++i) b[static_cast<size_t>(i)] -= lu(i, k) * b[static_cast<size_t>(k)];
        for (idx k = n - 1; k >= 0; --k) {
            b[static_cast<size_t>(k)] /= lu(k, k);
            for (idx i = 0; i < k; ++i) b[static_cast<size_t>(i)] -= lu(i, k) * b[static_cast<size_t>(k)];
        }
        return b;
    }
};

/// Dense Cholesky for small SPD systems (Schur complements, K K^T, -Y).
struct DenseCholesky {
    DenseMatrix l;  // lower triangle

    explicit DenseCholesky(const DenseMatrix& A) : l(A.rows, A.cols) {
        if (A.rows != A.cols) throw ContractViolation("DenseCholesky: matrix must be square");
        idx n = A.rows;
        for (idx j = 0; j < n; ++j) {
            for (idx i = j; i < n; ++i) {
                double s = A(i, j);
                for (idx k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
                if (i == j) {
                    if (s <= 0.0)
                        throw NotPositiveDefiniteError("dense Cholesky: nonpositive pivot", j);
                    l(j, j) = std::sqrt(s);
                } else {
                    l(i, j) = s / l(j, j);
                }
            }
        }
    }

    DenseVector solve(DenseVector b) const {
        idx n = l.rows;
        if (static_cast<idx>(b.size()) != n) throw ContractViolation("DenseCholesky::solve: size mismatch");
        for (idx i = 0; i < n; ++i) {
            double s = b[static_cast<size_t>(i)];
            for (idx k = 0; k < i; ++k) s -= l(i, k) * b[static_cast<size_t>(k)];
            b[static_cast<size_t>(i)] = s / l(i, i);
        }
        for (idx i = n - 1; i >= 0; --i) {
            double s = b[static_cast<size_t>(i)];
            for (idx k = i + 1; k < n; ++k) s -= l(k, i) * b[static_cast<size_t>(k)];
            b[static_cast<size_t>(i)] = s / l(i, i);
        }
        return b;
    }

    DenseVector solve_lower(DenseVector b) const {
        idx n = l.rows;
        for (idx i = 0; i < n; ++i) {
            double s = b[static_cast<size_t>(i)];
            for (idx k = 0; k < i; ++k) s -= l(i, k) * b[static_cast<size_t>(k)];
            b[static_cast<size_t>(i)] = s / l(i, i);
        }
        return b;
    }

    DenseVector solve_lower_transpose(DenseVector b) const {
        idx n = l.rows;
        for (idx i = n - 1; i >= 0; --i) {
            double s = b[static_cast<size_t>(i)];
            for (idx k = i + 1; k < n; ++k) s -= l(k, i) * b[static_cast<size_t>(k)];
            b[static_cast<size_t>(i)] = s / l(i, i);
        }
        return b;
    }
};

/// Householder QR with column pivoting on a dense working copy.
/// Reflectors are stored below the diagonal of `qr` with unit leading
/// entries implied; `rdiag` holds the diagonal of R.
struct DensePivotedQr {
    DenseMatrix qr;
    std::vector<double> beta;
    std::vector<double> rdiag;
    std::vector<idx> perm;  // column j of the factorization is input column perm[j]
    idx rank = 0;

    explicit DensePivotedQr(DenseMatrix A, double rank_tol_rel = 1e-12, bool pivot = true)
        : qr(std::move(A)) {
        idx m = qr.rows, n = qr.cols;
        if (m < n) throw ContractViolation("DensePivotedQr: requires nrows >= ncols");
        beta.assign(static_cast<size_t>(n), 0.0);
        rdiag.assign(static_cast<size_t>(n), 0.0);
        perm.resize(static_cast<size_t>(n));
        for (idx j = 0; j < n; ++j) perm[static_cast<size_t>(j)] = j;

        std::vector<double> colnorm2(static_cast<size_t>(n), 0.0);
        std::vector<double> colnorm2_ref(static_cast<size_t>(n), 0.0);
        for (idx j = 0; j < n; ++j) {
            double s = 0.0;
            for (idx i = 0; i < m; ++i) s += qr(i, j) * qr(i, j);
            colnorm2[static_cast<size_t>(j)] = colnorm2_ref[static_cast<size_t>(j)] = s;
        }

        for (idx k = 0; k < n; ++k) {
            if (pivot) {
                idx jmax = k;
                for (idx j = k + 1; j < n; ++j)
                    if (colnorm2[static_cast<size_t>(j)] > colnorm2[static_cast<size_t>(jmax)]) jmax = j;
                if (jmax != k) {
                    for (idx i = 0; i < m; ++i) std::swap(qr(i, k), qr(i, jmax));
                    std::swap(colnorm2[static_cast<size_t>(k)], colnorm2[static_cast<size_t>(jmax)]);
                    std::swap(colnorm2_ref[static_cast<size_t>(k)], colnorm2_ref[static_cast<size_t>(jmax)]);
                    std::swap(perm[static_cast<size_t>(k)], perm[static_cast<size_t>(jmax)]);
                }
            }
            double sigma2 = 0.0;
            for (idx i = k; i < m; ++i) sigma2 += qr(i, k) * qr(i, k);
            double sigma = std::sqrt(sigma2);
            if (sigma == 0.0) {
                rdiag[static_cast<size_t>(k)] = 0.0;
                beta[static_cast<size_t>(k)] = 0.0;
            } else {
                double alpha = qr(k, k) >= 0.0 ? -sigma : sigma;
                qr(k, k) -= alpha;
                double vtv = 0.0;
                for (idx i = k; i < m; ++i) vtv += qr(i, k) * qr(i, k);
                beta[static_cast<size_t>(k)] = 2.0 / vtv;
                rdiag[static_cast<size_t>(k)] = alpha;
                for (idx j = k + 1; j < n; ++j) {
                    double d = 0.0;
                    for (idx i = k; i < m; ++i) d += qr(i, k) * qr(i, j);
                    d *= beta[static_cast<size_t>(k)];
                    if (d != 0.0)
                        for (idx i = k; i < m; ++i) qr(i, j) -= d * qr(i, k);
                }
            }
            for (idx j = k + 1; j < n; ++j) {
                double w = colnorm2[static_cast<size_t>(j)] - qr(k, j) * qr(k, j);
                if (w < 0.1 * colnorm2_ref[static_cast<size_t>(j)] || w < 0.0) {
                    w = 0.0;  // downdating lost accuracy; recompute
                    for (idx i = k + 1; i < m; ++i) w += qr(i, j) * qr(i, j);
                    colnorm2_ref[static_cast<size_t>(j)] = w;
                }
                colnorm2[static_cast<size_t>(j)] = w;
            }
        }
        double dmax = 0.0;
        for (idx j = 0; j < n; ++j) dmax = std::max(dmax, std::fabs(rdiag[static_cast<size_t>(j)]));
        for (idx j = 0; j < n; ++j)
            if (std::fabs(rdiag[static_cast<size_t>(j)]) > rank_tol_rel * dmax) ++rank;
    }

    double r_entry(idx i, idx j) const {
        if (i > j) return 0.0;
        if (i == j) return rdiag[static_cast<size_t>(i)];
        return qr(i, j);
    }

    /// Ratio of the largest to the smallest |R_ii|; a cheap estimate of
    /// the 2-norm condition number.
    double cond_estimate() const {
        double lo = std::fabs(rdiag[0]), hi = lo;
        for (double d : rdiag) {
            lo = std::min(lo, std::fabs(d));
            hi = std::max(hi, std::fabs(d));
        }
        return lo == 0.0 ? std::numeric_limits<double>::infinity() : hi / lo;
    }

    void apply_qt(DenseVector& v) const {
        idx m = qr.rows, n = qr.cols;
        for (idx k = 0; k < n; ++k) {
            if (beta[static_cast<size_t>(k)] == 0.0) continue;
            double d = 0.0;
            for (idx i = k; i < m; ++i) d += qr(i, k) * v[static_cast<size_t>(i)];
            d *= beta[static_cast<size_t>(k)];
            for (idx i = k; i < m; ++i) v[static_cast<size_t>(i)] -= d * qr(i, k);
        }
    }

    void apply_q(DenseVector& v) const {
        idx m = qr.rows, n = qr.cols;
        for (idx k = n - 1; k >= 0; --k) {
            if (beta[static_cast<size_t>(k)] == 0.0) continue;
            double d = 0.0;
            for (idx i = k; i < m; ++i) d += qr(i, k) * v[static_cast<size_t>(i)];
            d *= beta[static_cast<size_t>(k)];
            for (idx i = k; i < m; ++i) v[static_cast<size_t>(i)] -= d * qr(i, k);
        }
    }
};

/// Numerical rank of a dense matrix via pivoted QR of the taller of M
/// and M^T.
inline idx dense_rank(const DenseMatrix& M, double rank_tol_rel = 1e-10) {
    DenseMatrix W = M;
    if (W.rows < W.cols) {
        DenseMatrix T(W.cols, W.rows);
        for (idx i = 0; i < W.rows; ++i)
            for (idx j = 0; j < W.cols; ++j) T(j, i) = W(i, j);
        W = std::move(T);
    }
    return DensePivotedQr(std::move(W), rank_tol_rel).rank;
}

}  // namespace lse
