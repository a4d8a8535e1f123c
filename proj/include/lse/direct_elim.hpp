#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "lse/core_types.hpp"
#include "lse/errors.hpp"
#include "lse/factor_cholesky.hpp"
#include "lse/gram_schmidt.hpp"
#include "lse/krylov.hpp"
#include "lse/problem.hpp"
#include "lse/sparse_matrix.hpp"

namespace lse {

/// Result of the pivot-selection sweep over the constraint columns.
/// S lists the p pivot columns in elimination order; occupied is the set
/// of A-rows touched by any pivot column, which bounds the dense rows of
/// the transformed matrix.  The accumulated QR factorization of the
/// pivot block is kept so the C_1 solves need not refactorize.
struct PivotOutcome {
    std::vector<idx> S;
    Permutation P_c;  // pivot columns first, remaining columns after
    std::vector<idx> occupied;
    double tau = 1.0;
    detail::ThresholdGs factorization;
    double c1_cond_estimate = 0.0;
};

/// QR factorization of C with threshold pivoting, the candidate set
/// filtered by tau and the winner chosen to add the fewest new A-rows to
/// the occupied set (ties: smallest column index).
inline PivotOutcome select_pivots(const SparseMatrix& C, const SparseMatrix& A, double tau) {
    idx p = C.nrows(), n = C.ncols();
    if (!(tau > 0.0 && tau <= 1.0)) throw ContractViolation("select_pivots: tau must lie in (0,1]");
    if (A.ncols() != n) throw ContractViolation("select_pivots: A and C column counts differ");
    if (p > n) throw ContractViolation("select_pivots: requires p <= n");

    detail::ThresholdGs gs(C);
    std::vector<char> occupied_mark(static_cast<size_t>(A.nrows()), 0);
    for (idx l = 0; l < p; ++l) {
        gs.require_not_rank_deficient(l);
        std::vector<idx> cand = gs.candidates(tau);
        idx best = -1;
        idx best_new = A.nrows() + 1;
        for (idx k : cand) {
            idx cnt = 0;
            for (idx t = A.col_begin(k); t < A.col_end(k); ++t)
                if (!occupied_mark[static_cast<size_t>(A.row_at(t))]) ++cnt;
            if (cnt < best_new) {  // candidates ascend, so ties keep the smaller index
                best_new = cnt;
                best = k;
            }
        }
        gs.eliminate(best);
        for (idx t = A.col_begin(best); t < A.col_end(best); ++t)
            occupied_mark[static_cast<size_t>(A.row_at(t))] = 1;
    }

    PivotOutcome out;
    out.S = gs.pivots;
    out.tau = tau;
    std::vector<idx> order = gs.pivots;
    std::vector<idx> rest = gs.non_pivots();
    order.insert(order.end(), rest.begin(), rest.end());
    out.P_c = Permutation(std::move(order));
    for (idx i = 0; i < A.nrows(); ++i)
        if (occupied_mark[static_cast<size_t>(i)]) out.occupied.push_back(i);
    out.c1_cond_estimate = gs.c1_cond_estimate();
    out.factorization = std::move(gs);
    return out;
}

/// Dense QR pieces of the pivot block C_1, sufficient for its solves.
struct C1Qr {
    DenseMatrix q;   // p x p
    DenseMatrix r1;  // p x p upper triangular

    DenseVector solve(const DenseVector& rhs) const {
        DenseVector t = q.mul_transpose(rhs);
        idx p = r1.rows;
        for (idx i = p - 1; i >= 0; --i) {
            double s = t[static_cast<size_t>(i)];
            for (idx k = i + 1; k < p; ++k) s -= r1(i, k) * t[static_cast<size_t>(k)];
            if (r1(i, i) == 0.0) throw SingularFactorError("C1 solve: zero diagonal", i);
            t[static_cast<size_t>(i)] = s / r1(i, i);
        }
        return t;
    }
};

/// The reduced least squares problem min || A_T y_2 - rhs || produced by
/// eliminating the pivot components through the constraints.
struct TransformedLs {
    SparseMatrix A_T;  // m x (n-p)
    DenseVector rhs;   // b - A_1 C_1^{-1} d
    std::vector<idx> dense_row_set;
    C1Qr c1_factor;
    SparseMatrix C2;      // constraint columns outside the pivot set
    std::vector<idx> S;   // pivot columns
    std::vector<idx> rest;  // remaining columns, ascending

    /// Back-substitution for the pivot components.
    DenseVector recover_y1(const DenseVector& d, const DenseVector& y2) const {
        DenseVector t = d;
        axpy(-1.0, spmv(C2, y2), t);
        return c1_factor.solve(t);
    }
};

/// A_T = A_2 - A_1 (C_1^{-1} C_2) and the transformed right-hand side.
/// Only exact zeros are pruned so the fill bound stays a structural
/// statement.  Dense rows are detected among the occupied rows only.
inline TransformedLs transform(const SparseMatrix& A, const SparseMatrix& C,
                               const PivotOutcome& piv, const DenseVector& d,
                               const DenseVector& b, double dense_row_density = 0.05) {
    idx m = A.nrows(), p = C.nrows();
    const detail::ThresholdGs& gs = piv.factorization;
    std::vector<idx> rest = gs.non_pivots();
    idx nred = static_cast<idx>(rest.size());

    SparseMatrix A1 = select_columns(A, piv.S);
    SparseMatrix A2 = select_columns(A, rest);
    DenseMatrix N = gs.fundamental_block();  // C_1^{-1} C_2, p x (n-p)

    TransformedLs out;
    out.S = piv.S;
    out.rest = rest;
    out.C2 = select_columns(C, rest);
    out.c1_factor = C1Qr{gs.q, gs.r1()};

    // A_T column by column with a dense accumulator
    out.A_T.set_shape_for_append(m);
    DenseVector work = zeros(m);
    std::vector<idx> rows;
    std::vector<double> vals;
    for (idx j = 0; j < nred; ++j) {
        for (idx k = A2.col_begin(j); k < A2.col_end(j); ++k)
            work[static_cast<size_t>(A2.row_at(k))] = A2.value_at(k);
        for (idx kp = 0; kp < p; ++kp) {
            double nkj = N(kp, j);
            if (nkj == 0.0) continue;
            for (idx k = A1.col_begin(kp); k < A1.col_end(kp); ++k)
                work[static_cast<size_t>(A1.row_at(k))] -= A1.value_at(k) * nkj;
        }
        rows.clear();
        vals.clear();
        for (idx i = 0; i < m; ++i) {
            if (work[static_cast<size_t>(i)] != 0.0) {
                rows.push_back(i);
                vals.push_back(work[static_cast<size_t>(i)]);
                work[static_cast<size_t>(i)] = 0.0;
            }
        }
        out.A_T.append_column(rows, vals);
    }

    DenseVector c1d = p > 0 ? out.c1_factor.solve(d) : DenseVector{};
    out.rhs = b;
    if (p > 0) axpy(-1.0, spmv(A1, c1d), out.rhs);

    // dense rows can only appear where A_1 has entries
    std::vector<idx> counts = row_nonzero_counts(out.A_T);
    double threshold = dense_row_density * static_cast<double>(nred);
    for (idx i : piv.occupied)
        if (static_cast<double>(counts[static_cast<size_t>(i)]) >= threshold)
            out.dense_row_set.push_back(i);
    std::sort(out.dense_row_set.begin(), out.dense_row_set.end(), [&](idx a, idx b2) {
        if (counts[static_cast<size_t>(a)] != counts[static_cast<size_t>(b2)])
            return counts[static_cast<size_t>(a)] > counts[static_cast<size_t>(b2)];
        return a < b2;
    });
    return out;
}

struct DirectElimOptions {
    double tau = 1.0;
    double tol = 1e-11;  // stop when ||A_T^T r|| / ||r|| falls below this
    double dense_row_density = 0.05;
    idx maxit = 0;  // 0: use 4 * (n - p) + 200
};

/// Direct elimination: select pivots, transform to a sparse-dense least
/// squares problem and solve it by CG on the normal equations, using the
/// Cholesky factor of the sparse-part normal matrix as preconditioner
/// while the full A_T drives the operator.
inline SolveReport solve_direct_elim(const LseProblem& prob, const DirectElimOptions& opts = {}) {
    prob.validate();
    idx n = prob.n(), p = prob.p();

    SparseMatrix A_T;
    DenseVector rhs;
    TransformedLs tls;
    std::map<std::string, double> aux;
    aux["tau"] = opts.tau;
    if (p > 0) {
        PivotOutcome piv = select_pivots(prob.C, prob.A, opts.tau);
        aux["cond_c1_est"] = piv.c1_cond_estimate;
        if (piv.c1_cond_estimate > 1e10) aux["cond_c1_warning"] = 1.0;
        tls = transform(prob.A, prob.C, piv, prob.d, prob.b, opts.dense_row_density);
        A_T = tls.A_T;
        rhs = tls.rhs;
        aux["ndense"] = static_cast<double>(tls.dense_row_set.size());
    } else {
        A_T = prob.A;
        rhs = prob.b;
        aux["ndense"] = 0.0;
    }

    // preconditioner from the sparse part of A_T
    SparseMatrix A_s = p > 0 && !tls.dense_row_set.empty()
                           ? split_rows(A_T, tls.dense_row_set).first
                           : A_T;
    SparseMatrix Hs = normal_matrix(A_s);
    CholFactor prec_factor = [&]() {
        try {
            return cholesky(Hs, CholOrdering::fill_reducing);
        } catch (const NotPositiveDefiniteError&) {
            // sparse part lost rank to the dense rows; a shifted
            // incomplete factor still gives an SPD preconditioner
            try {
                return incomplete_cholesky(Hs);
            } catch (const BreakdownError&) {
                return incomplete_cholesky(Hs, 1.0);  // restart ladder from maxdiag upward
            }
        }
    }();

    LinearOperator op = LinearOperator::normal_equations(A_T);
    LinearOperator pc{n - p, [&prec_factor](const DenseVector& v) { return prec_factor.solve(v); }};
    PcgOptions pcg_opts;
    pcg_opts.tol = opts.tol;
    pcg_opts.maxit = opts.maxit > 0 ? opts.maxit : 4 * (n - p) + 200;
    pcg_opts.stop = PcgStop::ls_gradient;
    pcg_opts.stagnation_window = 50;
    pcg_opts.metric = [&](const DenseVector& y) {
        DenseVector r = rhs;
        axpy(-1.0, spmv(A_T, y), r);
        double rn = norm2(r);
        if (rn == 0.0) return 0.0;
        return norm2(spmv(A_T, r, true)) / rn;
    };
    DenseVector rhs_ne = spmv(A_T, rhs, true);
    auto assemble_x = [&](const DenseVector& y2) {
        if (p == 0) return y2;
        DenseVector y1 = tls.recover_y1(prob.d, y2);
        DenseVector x = zeros(n);
        for (idx k = 0; k < p; ++k) x[static_cast<size_t>(tls.S[static_cast<size_t>(k)])] = y1[static_cast<size_t>(k)];
        for (idx j = 0; j < n - p; ++j)
            x[static_cast<size_t>(tls.rest[static_cast<size_t>(j)])] = y2[static_cast<size_t>(j)];
        return x;
    };
    try {
        auto [y2, trace] = pcg(op, pc, rhs_ne, pcg_opts);
        if (!trace.converged)
            throw NonConvergenceError("solve_direct_elim: CG did not converge", assemble_x(y2),
                                      trace.history);
        return finalize_report(prob, assemble_x(y2), "direct-elim", trace.iters, std::move(aux));
    } catch (NonConvergenceError& e) {
        // stagnation reports carry the reduced iterate; lift it to x-space
        if (static_cast<idx>(e.best_iterate.size()) == n - p && p > 0)
            throw NonConvergenceError(e.what(), assemble_x(e.best_iterate), e.residual_history);
        throw;
    }
}

}  // namespace lse
