#pragma once

#include <cmath>
#include <cstdlib>
#include <vector>

#include "lse/core_types.hpp"
#include "lse/errors.hpp"
#include "lse/factor_cholesky.hpp"
#include "lse/factor_qr.hpp"
#include "lse/gram_schmidt.hpp"
#include "lse/krylov.hpp"
#include "lse/problem.hpp"
#include "lse/sparse_matrix.hpp"

namespace lse {

/// Fundamental null-space basis of the constraint matrix: Z spans
/// { x : C x = 0 }, has exactly n - p columns and full column rank.
struct NullBasis {
    SparseMatrix Z;  // n x (n-p)
    double theta = 1.0;
    Permutation pivot_cols;  // pivot columns first, remaining columns after
};

/// Builds Z = P_c [ -C_1^{-1} C_2 ; I ] with C_1 chosen by a
/// threshold-pivoted QR on the column norms of C.  Candidates within
/// theta of the largest residual norm are admitted and the one closest
/// to the current elimination step is taken, which keeps the basis local
/// (and hence sparse) for small theta.
inline NullBasis nullspace_basis(const SparseMatrix& C, double theta) {
    idx p = C.nrows(), n = C.ncols();
    if (!(theta > 0.0 && theta <= 1.0))
        throw ContractViolation("nullspace_basis: theta must lie in (0,1]");
    if (p >= n) throw ContractViolation("nullspace_basis: requires p < n");
    if (p == 0) {
        NullBasis B;
        B.Z = SparseMatrix::identity(n);
        B.theta = theta;
        B.pivot_cols = Permutation::identity(n);
        return B;
    }

    detail::ThresholdGs gs(C);
    for (idx l = 0; l < p; ++l) {
        gs.require_not_rank_deficient(l);
        std::vector<idx> cand = gs.candidates(theta);
        idx best = cand.front();
        idx best_dist = std::llabs(best - l);
        for (idx i : cand) {
            idx dist = std::llabs(i - l);
            if (dist < best_dist) {
                best = i;
                best_dist = dist;
            }
        }
        gs.eliminate(best);
    }

    std::vector<idx> rest = gs.non_pivots();
    DenseMatrix N = gs.fundamental_block();

    std::vector<Triplet> trips;
    for (idx jc = 0; jc < static_cast<idx>(rest.size()); ++jc) {
        for (idx k = 0; k < p; ++k) {
            double v = -N(k, jc);
            if (v != 0.0) trips.push_back({gs.pivots[static_cast<size_t>(k)], jc, v});
        }
        trips.push_back({rest[static_cast<size_t>(jc)], jc, 1.0});
    }
    NullBasis B;
    B.Z = SparseMatrix::from_triplets(n, n - p, std::move(trips));
    B.theta = theta;
    std::vector<idx> order = gs.pivots;
    order.insert(order.end(), rest.begin(), rest.end());
    B.pivot_cols = Permutation(std::move(order));
    return B;
}

/// Minimum-norm particular solution of C x = d, computed from the
/// pivoted QR factorization of C^T.  The result lies in range(C^T) and
/// is therefore orthogonal to the null space of C.
inline DenseVector particular_solution(const SparseMatrix& C, const DenseVector& d) {
    idx p = C.nrows(), n = C.ncols();
    if (static_cast<idx>(d.size()) != p) throw ContractViolation("particular_solution: d length mismatch");
    if (p == 0) return zeros(n);
    QrOptions opts;
    opts.pivoting = QrPivoting::column_norm;
    QrFactor qr = householder_qr(transpose(C), std::nullopt, opts);
    // C^T P = Q [R; 0]  =>  C x = d becomes R^T (Q^T x)(0:p) = P^T d
    DenseVector t = qr.solve_rt(qr.colperm.gather(d));
    DenseVector padded = zeros(n);
    for (idx i = 0; i < p; ++i) padded[static_cast<size_t>(i)] = t[static_cast<size_t>(i)];
    return qr.apply_q(padded);
}

enum class NullspaceInner { cholesky, pcg };

struct NullspaceOptions {
    double theta = 1.0;
    NullspaceInner inner = NullspaceInner::cholesky;
    double tol = 1e-11;
    idx maxit = 0;  // 0: use 2 * (n - p) + 100
};

/// Null-space method: x = x_1 + Z x_2 where x_1 satisfies the
/// constraints and x_2 solves the reduced normal equations
/// (AZ)^T (AZ) x_2 = (AZ)^T (b - A x_1).
inline SolveReport solve_nullspace(const LseProblem& prob, const NullspaceOptions& opts = {}) {
    prob.validate();
    idx n = prob.n(), p = prob.p();

    DenseVector x1 = particular_solution(prob.C, prob.d);
    NullBasis basis = nullspace_basis(prob.C, opts.theta);
    SparseMatrix W = multiply(prob.A, basis.Z);  // AZ, m x (n-p)

    DenseVector resid0 = prob.b;
    axpy(-1.0, spmv(prob.A, x1), resid0);
    DenseVector rhs = spmv(W, resid0, true);

    SparseMatrix G = normal_matrix(W);  // Z^T H Z formed as (AZ)^T (AZ)
    idx nz_full = 2 * G.nnz() - (n - p);
    double density = static_cast<double>(nz_full) / (static_cast<double>(n - p) * static_cast<double>(n - p));

    DenseVector x2;
    idx iters = 0;
    if (opts.inner == NullspaceInner::cholesky) {
        CholFactor chol = cholesky(G, CholOrdering::fill_reducing);
        x2 = chol.solve(rhs);
        DenseVector res = rhs;  // one refinement step tightens the reduced gradient
        axpy(-1.0, spmv_sym_lower(G, x2), res);
        axpy(1.0, chol.solve(res), x2);
    } else {
        CholFactor prec = incomplete_cholesky(G);
        LinearOperator op = LinearOperator::normal_equations(W);
        LinearOperator pc{n - p, [&prec](const DenseVector& v) { return prec.solve(v); }};
        PcgOptions pcg_opts;
        pcg_opts.tol = opts.tol;
        pcg_opts.maxit = opts.maxit > 0 ? opts.maxit : 2 * (n - p) + 100;
        auto [sol, trace] = pcg(op, pc, rhs, pcg_opts);
        if (!trace.converged) {
            DenseVector best = x1;
            axpy(1.0, spmv(basis.Z, sol), best);
            throw NonConvergenceError("solve_nullspace: inner PCG did not converge",
                                      std::move(best), trace.history);
        }
        x2 = std::move(sol);
        iters = trace.iters;
    }

    DenseVector x = x1;
    axpy(1.0, spmv(basis.Z, x2), x);

    std::map<std::string, double> aux;
    aux["theta"] = opts.theta;
    aux["nnz_reduced"] = static_cast<double>(nz_full);
    aux["density_reduced"] = density;
    DenseVector final_resid = prob.b;
    axpy(-1.0, spmv(prob.A, x), final_resid);
    double red_grad = norm2(spmv(W, final_resid, true));
    double red_scale = norm2(spmv(W, prob.b, true));
    aux["reduced_gradient"] = red_grad;
    aux["reduced_gradient_rel"] = red_scale > 0.0 ? red_grad / red_scale : red_grad;
    double czf = multiply(prob.C, basis.Z).frobenius_norm();
    double denomf = prob.C.frobenius_norm() * basis.Z.frobenius_norm();
    aux["cz_frob_rel"] = denomf > 0.0 ? czf / denomf : czf;

    return finalize_report(prob, std::move(x), "nullspace", iters, std::move(aux));
}

}  // namespace lse
