#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "lse/core_types.hpp"
#include "lse/errors.hpp"
#include "lse/sparse_matrix.hpp"

namespace lse {

/// Square linear operator given by its action; adjoint optional.
struct LinearOperator {
    idx dim = 0;
    std::function<DenseVector(const DenseVector&)> apply;

    static LinearOperator identity(idx n) {
        return {n, [](const DenseVector& v) { return v; }};
    }

    /// y = H x for symmetric H stored as its lower triangle.
    static LinearOperator symmetric_lower(const SparseMatrix& H) {
        return {H.ncols(), [&H](const DenseVector& v) { return spmv_sym_lower(H, v); }};
    }

    /// y = A^T (A x).
    static LinearOperator normal_equations(const SparseMatrix& A) {
        return {A.ncols(), [&A](const DenseVector& v) { return spmv(A, spmv(A, v), true); }};
    }
};

struct IterationTrace {
    std::vector<double> history;  // one entry per iteration, plus the initial value
    bool converged = false;
    idx iters = 0;
};

enum class PcgStop { relative_residual, ls_gradient };

struct PcgOptions {
    double tol = 1e-10;
    idx maxit = 1000;
    PcgStop stop = PcgStop::relative_residual;
    /// For ls_gradient stops the caller supplies the metric evaluated at
    /// the current iterate (e.g. ||A_T^T r|| / ||r|| for the transformed
    /// least squares residual); convergence is metric <= tol.
    std::function<double(const DenseVector&)> metric;
    /// Abort when the best metric has not improved for this many
    /// iterations (0 disables the check).
    idx stagnation_window = 0;
};

/// Preconditioned conjugate gradients for SPD operators.
inline std::pair<DenseVector, IterationTrace> pcg(const LinearOperator& op,
                                                  const LinearOperator& precond,
                                                  const DenseVector& rhs, const PcgOptions& opts) {
    idx n = op.dim;
    if (static_cast<idx>(rhs.size()) != n) throw ContractViolation("pcg: rhs length mismatch");
    if (opts.stop == PcgStop::ls_gradient && !opts.metric)
        throw ContractViolation("pcg: ls_gradient stop requires a metric callback");

    DenseVector x = zeros(n);
    DenseVector r = rhs;
    IterationTrace trace;
    double bnorm = norm2(rhs);
    auto measure = [&](const DenseVector& xk, const DenseVector& rk) {
        return opts.stop == PcgStop::ls_gradient ? opts.metric(xk) : norm2(rk);
    };
    double metric0 = measure(x, r);
    trace.history.push_back(metric0);
    double threshold = opts.stop == PcgStop::ls_gradient ? opts.tol : opts.tol * bnorm;
    if (metric0 <= threshold || bnorm == 0.0) {
        trace.converged = true;
        return {x, trace};
    }

    DenseVector z = precond.apply(r);
    DenseVector p = z;
    double rz = dot(r, z);
    double best_metric = metric0;
    DenseVector best_x = x;
    idx since_best = 0;

    for (idx k = 0; k < opts.maxit; ++k) {
        DenseVector q = op.apply(p);
        double pq = dot(p, q);
        if (pq <= 0.0)
            throw Error("pcg: operator is not positive definite (p^T A p <= 0 at iteration " +
                        std::to_string(k) + ")");
        double alpha = rz / pq;
        axpy(alpha, p, x);
        axpy(-alpha, q, r);
        trace.iters = k + 1;
        double metric = measure(x, r);
        trace.history.push_back(metric);
        if (metric < best_metric) {
            best_metric = metric;
            best_x = x;
            since_best = 0;
        } else {
            ++since_best;
        }
        if (metric <= threshold) {
            trace.converged = true;
            return {x, trace};
        }
        if (opts.stagnation_window > 0 && since_best >= opts.stagnation_window) {
            throw NonConvergenceError("pcg: no progress over " +
                                          std::to_string(opts.stagnation_window) + " iterations",
                                      best_x, trace.history);
        }
        z = precond.apply(r);
        double rz_new = dot(r, z);
        double beta = rz_new / rz;
        rz = rz_new;
        for (size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
    }
    trace.converged = false;
    x = best_x;
    return {x, trace};
}

/// Full (unrestarted) GMRES, right preconditioned: solves A M^{-1} w = b
/// and returns x = M^{-1} w.  Arnoldi uses modified Gram-Schmidt with a
/// second full reorthogonalization pass.
inline std::pair<DenseVector, IterationTrace> gmres(const LinearOperator& op,
                                                    const LinearOperator& right_precond,
                                                    const DenseVector& rhs, double tol, idx maxit) {
    idx n = op.dim;
    if (static_cast<idx>(rhs.size()) != n) throw ContractViolation("gmres: rhs length mismatch");
    IterationTrace trace;
    double bnorm = norm2(rhs);
    trace.history.push_back(bnorm);
    if (bnorm == 0.0) {
        trace.converged = true;
        return {zeros(n), trace};
    }

    std::vector<DenseVector> V;
    V.push_back(rhs);
    scale_inplace(V[0], 1.0 / bnorm);
    std::vector<std::vector<double>> H;  // H[k] holds column k (k+2 entries)
    std::vector<double> cs, sn, g;
    g.push_back(bnorm);

    idx k = 0;
    for (; k < maxit; ++k) {
        DenseVector w = op.apply(right_precond.apply(V[static_cast<size_t>(k)]));
        double wnorm0 = norm2(w);
        std::vector<double> h(static_cast<size_t>(k) + 2, 0.0);
        for (int pass = 0; pass < 2; ++pass) {
            for (idx i = 0; i <= k; ++i) {
                double hik = dot(V[static_cast<size_t>(i)], w);
                h[static_cast<size_t>(i)] += hik;
                axpy(-hik, V[static_cast<size_t>(i)], w);
            }
        }
        double wnorm = norm2(w);
        h[static_cast<size_t>(k) + 1] = wnorm;

        // apply the accumulated Givens rotations to the new column
        for (idx i = 0; i < k; ++i) {
            double t = cs[static_cast<size_t>(i)] * h[static_cast<size_t>(i)] +
                       sn[static_cast<size_t>(i)] * h[static_cast<size_t>(i) + 1];
            h[static_cast<size_t>(i) + 1] = -sn[static_cast<size_t>(i)] * h[static_cast<size_t>(i)] +
                                            cs[static_cast<size_t>(i)] * h[static_cast<size_t>(i) + 1];
            h[static_cast<size_t>(i)] = t;
        }
        double denom = std::hypot(h[static_cast<size_t>(k)], h[static_cast<size_t>(k) + 1]);
        double c = denom == 0.0 ? 1.0 : h[static_cast<size_t>(k)] / denom;
        double s = denom == 0.0 ? 0.0 : h[static_cast<size_t>(k) + 1] / denom;
        cs.push_back(c);
        sn.push_back(s);
        h[static_cast<size_t>(k)] = denom;
        h[static_cast<size_t>(k) + 1] = 0.0;
        double gk = g[static_cast<size_t>(k)];
        g[static_cast<size_t>(k)] = c * gk;
        g.push_back(-s * gk);
        H.push_back(std::move(h));

        double resid = std::fabs(g[static_cast<size_t>(k) + 1]);
        trace.history.push_back(resid);
        trace.iters = k + 1;
        if (resid <= tol * bnorm) {
            trace.converged = true;
            ++k;
            break;
        }
        if (wnorm <= 1e-14 * wnorm0) {  // happy breakdown: Krylov space is exhausted
            trace.converged = true;
            ++k;
            break;
        }
        V.push_back(w);
        scale_inplace(V.back(), 1.0 / wnorm);
    }

    // back substitution on the k x k triangular system
    std::vector<double> y(static_cast<size_t>(k), 0.0);
    for (idx i = k - 1; i >= 0; --i) {
        double s = g[static_cast<size_t>(i)];
        for (idx j = i + 1; j < k; ++j) s -= H[static_cast<size_t>(j)][static_cast<size_t>(i)] * y[static_cast<size_t>(j)];
        double hii = H[static_cast<size_t>(i)][static_cast<size_t>(i)];
        y[static_cast<size_t>(i)] = hii == 0.0 ? 0.0 : s / hii;
    }
    DenseVector w_sol = zeros(n);
    for (idx i = 0; i < k; ++i) axpy(y[static_cast<size_t>(i)], V[static_cast<size_t>(i)], w_sol);
    DenseVector x = right_precond.apply(w_sol);
    return {x, trace};
}

/// Preconditioned MINRES for symmetric (possibly indefinite) operators;
/// the preconditioner must be symmetric positive definite.  Keeps a
/// fixed, iteration-independent set of work vectors.
inline std::pair<DenseVector, IterationTrace> minres(const LinearOperator& op,
                                                     const LinearOperator& spd_precond,
                                                     const DenseVector& rhs, double tol, idx maxit) {
    idx n = op.dim;
    if (static_cast<idx>(rhs.size()) != n) throw ContractViolation("minres: rhs length mismatch");
    IterationTrace trace;
    DenseVector x = zeros(n);
    DenseVector r1 = rhs;
    DenseVector y = spd_precond.apply(r1);
    double beta1 = dot(r1, y);
    if (norm2(rhs) == 0.0) {
        trace.converged = true;
        trace.history.push_back(0.0);
        return {x, trace};
    }
    if (beta1 <= 0.0) throw Error("minres: preconditioner is not positive definite");
    beta1 = std::sqrt(beta1);
    trace.history.push_back(beta1);

    double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0;
    double phibar = beta1, cs = -1.0, sn = 0.0;
    DenseVector r2 = r1;
    DenseVector w = zeros(n), w2 = zeros(n);

    for (idx k = 1; k <= maxit; ++k) {
        DenseVector v = y;
        scale_inplace(v, 1.0 / beta);
        y = op.apply(v);
        if (k >= 2) axpy(-beta / oldb, r1, y);
        double alfa = dot(v, y);
        axpy(-alfa / beta, r2, y);
        r1 = r2;
        r2 = y;
        y = spd_precond.apply(r2);
        oldb = beta;
        beta = dot(r2, y);
        if (beta < 0.0) throw Error("minres: preconditioner is not positive definite");
        beta = std::sqrt(beta);

        double oldeps = epsln;
        double delta = cs * dbar + sn * alfa;
        double gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        double gamma = std::hypot(gbar, beta);
        gamma = std::max(gamma, std::numeric_limits<double>::epsilon());
        cs = gbar / gamma;
        sn = beta / gamma;
        double phi = cs * phibar;
        phibar = sn * phibar;

        DenseVector w1 = w2;
        w2 = w;
        w = v;
        axpy(-oldeps, w1, w);
        axpy(-delta, w2, w);
        scale_inplace(w, 1.0 / gamma);
        axpy(phi, w, x);

        trace.history.push_back(phibar);
        trace.iters = k;
        if (phibar <= tol * beta1) {
            trace.converged = true;
            break;
        }
        if (beta <= 1e-14 * beta1) {  // Lanczos breakdown: solution reached
            trace.converged = true;
            break;
        }
    }
    return {x, trace};
}

}  // namespace lse
