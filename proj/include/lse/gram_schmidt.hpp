#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "lse/core_types.hpp"
#include "lse/dense_la.hpp"
#include "lse/errors.hpp"
#include "lse/sparse_matrix.hpp"

namespace lse::detail {

/// Modified Gram-Schmidt QR of a wide p x n matrix, p steps, with the
/// pivot column chosen externally at each step from a threshold-filtered
/// candidate set.  Columns are held densely (p is small); w_i tracks the
/// squared residual norm of column i and is clamped at zero when rounding
/// drives it negative.
///
/// After p steps: C(:, j) = Q * r_work(:, j) for every column j, so with
/// S the pivot list, C_1 = Q R_1 (R_1 upper triangular in pivot order)
/// and C_1^{-1} C_2 = R_1^{-1} R_2.
struct ThresholdGs {
    idx p = 0;
    idx n = 0;
    DenseMatrix cols;    // p x n working columns
    DenseMatrix q;       // p x p orthonormal basis, one column per step
    DenseMatrix r_work;  // p x n accumulated coefficients
    DenseVector w;       // squared residual column norms
    std::vector<idx> pivots;
    std::vector<char> in_s;
    double rank_tol = 1e-12;
    double initial_norm_max = 0.0;

    ThresholdGs() = default;

    explicit ThresholdGs(const SparseMatrix& C, double rank_tol_rel = 1e-12)
        : p(C.nrows()), n(C.ncols()), cols(C.nrows(), C.ncols()), q(C.nrows(), C.nrows()),
          r_work(C.nrows(), C.ncols()), w(static_cast<size_t>(C.ncols()), 0.0),
          in_s(static_cast<size_t>(C.ncols()), 0), rank_tol(rank_tol_rel) {
        for (idx j = 0; j < n; ++j) {
            double s = 0.0;
            for (idx k = C.col_begin(j); k < C.col_end(j); ++k) {
                cols(C.row_at(k), j) = C.value_at(k);
                s += C.value_at(k) * C.value_at(k);
            }
            w[static_cast<size_t>(j)] = s;
            initial_norm_max = std::max(initial_norm_max, std::sqrt(s));
        }
    }

    /// Largest residual norm among unpivoted columns.
    double w_max() const {
        double m = 0.0;
        for (idx j = 0; j < n; ++j)
            if (!in_s[static_cast<size_t>(j)]) m = std::max(m, w[static_cast<size_t>(j)]);
        return m;
    }

    /// Unpivoted columns with w_i >= threshold * w_max, ascending index.
    std::vector<idx> candidates(double threshold_fraction) const {
        double cut = threshold_fraction * w_max();
        std::vector<idx> e;
        for (idx j = 0; j < n; ++j)
            if (!in_s[static_cast<size_t>(j)] && w[static_cast<size_t>(j)] >= cut) e.push_back(j);
        return e;
    }

    void require_not_rank_deficient(idx step) const {
        double tol_norm = rank_tol * initial_norm_max;
        if (std::sqrt(w_max()) <= tol_norm)
            throw RankDeficientError("threshold-pivoted QR: residual columns are negligible", step);
    }

    /// Orthogonalizes the remaining columns against the chosen pivot and
    /// records the step in S, Q and r_work.
    void eliminate(idx pivot) {
        idx l = static_cast<idx>(pivots.size());
        double nrm = 0.0;
        for (idx i = 0; i < p; ++i) nrm += cols(i, pivot) * cols(i, pivot);
        nrm = std::sqrt(nrm);
        for (idx i = 0; i < p; ++i) q(i, l) = cols(i, pivot) / nrm;
        for (idx j = 0; j < n; ++j) {
            if (in_s[static_cast<size_t>(j)]) continue;
            double dot = 0.0;
            for (idx i = 0; i < p; ++i) dot += q(i, l) * cols(i, j);
            r_work(l, j) = dot;
            if (dot != 0.0)
                for (idx i = 0; i < p; ++i) cols(i, j) -= dot * q(i, l);
            double wj = w[static_cast<size_t>(j)] - dot * dot;
            w[static_cast<size_t>(j)] = wj > 0.0 ? wj : 0.0;
        }
        r_work(l, pivot) = nrm;
        in_s[static_cast<size_t>(pivot)] = 1;
        pivots.push_back(pivot);
    }

    std::vector<idx> non_pivots() const {
        std::vector<idx> rest;
        for (idx j = 0; j < n; ++j)
            if (!in_s[static_cast<size_t>(j)]) rest.push_back(j);
        return rest;
    }

    /// Upper-triangular R over the pivot columns in pivot order.
    DenseMatrix r1() const {
        DenseMatrix R1(p, p);
        for (idx l = 0; l < p; ++l)
            for (idx k = l; k < p; ++k) R1(l, k) = r_work(l, pivots[static_cast<size_t>(k)]);
        return R1;
    }

    /// Solves C_1 y = rhs via y = R_1^{-1} (Q^T rhs).
    DenseVector c1_solve(const DenseVector& rhs) const {
        DenseVector t = q.mul_transpose(rhs);
        DenseMatrix R1 = r1();
        for (idx i = p - 1; i >= 0; --i) {
            double s = t[static_cast<size_t>(i)];
            for (idx k = i + 1; k < p; ++k) s -= R1(i, k) * t[static_cast<size_t>(k)];
            if (R1(i, i) == 0.0) throw SingularFactorError("c1_solve: zero diagonal", i);
            t[static_cast<size_t>(i)] = s / R1(i, i);
        }
        return t;
    }

    /// N = C_1^{-1} C_2 = R_1^{-1} R_2, columns indexed by non_pivots().
    DenseMatrix fundamental_block() const {
        std::vector<idx> rest = non_pivots();
        DenseMatrix R1 = r1();
        DenseMatrix N(p, static_cast<idx>(rest.size()));
        for (idx jc = 0; jc < static_cast<idx>(rest.size()); ++jc) {
            idx j = rest[static_cast<size_t>(jc)];
            DenseVector t(static_cast<size_t>(p));
            for (idx l = 0; l < p; ++l) t[static_cast<size_t>(l)] = r_work(l, j);
            for (idx i = p - 1; i >= 0; --i) {
                double s = t[static_cast<size_t>(i)];
                for (idx k = i + 1; k < p; ++k) s -= R1(i, k) * t[static_cast<size_t>(k)];
                if (R1(i, i) == 0.0) throw SingularFactorError("fundamental_block: zero diagonal", i);
                t[static_cast<size_t>(i)] = s / R1(i, i);
            }
            for (idx i = 0; i < p; ++i) N(i, jc) = t[static_cast<size_t>(i)];
        }
        return N;
    }

    /// Estimated condition number of C_1 from the R_1 diagonal ratio.
    double c1_cond_estimate() const {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (idx l = 0; l < p; ++l) {
            double d = std::fabs(r_work(l, pivots[static_cast<size_t>(l)]));
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        return lo == 0.0 ? std::numeric_limits<double>::infinity() : hi / lo;
    }
};

}  // namespace lse::detail
