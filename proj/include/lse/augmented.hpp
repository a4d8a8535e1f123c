#pragma once

#include <cmath>
#include <vector>

#include "lse/core_types.hpp"
#include "lse/dense_la.hpp"
#include "lse/errors.hpp"
#include "lse/factor_cholesky.hpp"
#include "lse/factor_qr.hpp"
#include "lse/krylov.hpp"
#include "lse/normal_matrix.hpp"
#include "lse/problem.hpp"
#include "lse/sparse_matrix.hpp"

namespace lse {

/// Action of the regularized saddle matrix
///   [ -(A^T A + omega^2 I)   C^T       ]
///   [  C                     omega^2 I ]
/// on a length n+p vector.  Applied through A so the normal matrix is
/// never formed.
struct SaddleOperator {
    const SparseMatrix* A = nullptr;
    const SparseMatrix* C = nullptr;
    double omega = 0.0;

    SaddleOperator(const SparseMatrix& A_, const SparseMatrix& C_, double omega_)
        : A(&A_), C(&C_), omega(omega_) {
        if (!(omega_ > 0.0)) throw ContractViolation("SaddleOperator: omega must be positive");
    }

    idx dim() const { return A->ncols() + C->nrows(); }

    DenseVector apply(const DenseVector& v) const {
        idx n = A->ncols(), p = C->nrows();
        DenseVector x(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n));
        DenseVector y(v.begin() + static_cast<std::ptrdiff_t>(n), v.end());
        DenseVector top = spmv(*A, spmv(*A, x), true);
        double w2 = omega * omega;
        for (idx i = 0; i < n; ++i) {
            top[static_cast<size_t>(i)] = -(top[static_cast<size_t>(i)] + w2 * x[static_cast<size_t>(i)]);
        }
        if (p > 0) axpy(1.0, spmv(*C, y, true), top);
        DenseVector bottom = p > 0 ? spmv(*C, x) : DenseVector{};
        for (idx k = 0; k < p; ++k) bottom[static_cast<size_t>(k)] += w2 * y[static_cast<size_t>(k)];
        DenseVector out;
        out.reserve(static_cast<size_t>(n + p));
        out.insert(out.end(), top.begin(), top.end());
        out.insert(out.end(), bottom.begin(), bottom.end());
        return out;
    }

    LinearOperator as_operator() const {
        return {dim(), [this](const DenseVector& v) { return apply(v); }};
    }
};

namespace detail {

/// Cholesky factor of H(omega) together with W = L^{-1} P C^T and the
/// dense Cholesky of the Schur complement omega^2 I + W^T W.  This is
/// the shared core of the direct block solve and the preconditioner;
/// B = -W^T is never formed.
struct SchurCore {
    CholFactor fac;
    DenseMatrix W;  // n x p
    DenseCholesky schur;
    double omega;

    // build_schur runs in the schur initializer and fills W as a side
    // effect; member order (fac, W, schur) makes that well defined
    SchurCore(CholFactor f, const SparseMatrix& C, double omega_)
        : fac(std::move(f)), W(), schur(build_schur(fac, C, omega_)), omega(omega_) {}

    DenseVector solve_lower_perm(const DenseVector& v) const {
        return tri_solve(fac.L, fac.perm.gather(v), TriMode::lower);
    }

    DenseVector wt_mul(const DenseVector& a) const { return W.mul_transpose(a); }

private:
    DenseMatrix build_schur(const CholFactor& f, const SparseMatrix& C, double omega_) {
        idx n = C.ncols(), p = C.nrows();
        W = DenseMatrix(n, p);
        SparseMatrix CT = transpose(C);
        DenseVector col = zeros(n);
        for (idx k = 0; k < p; ++k) {
            std::fill(col.begin(), col.end(), 0.0);
            for (idx t = CT.col_begin(k); t < CT.col_end(k); ++t)
                col[static_cast<size_t>(CT.row_at(t))] = CT.value_at(t);
            DenseVector w = tri_solve(f.L, f.perm.gather(col), TriMode::lower);
            for (idx i = 0; i < n; ++i) W(i, k) = w[static_cast<size_t>(i)];
        }
        DenseMatrix S(p, p);
        for (idx i = 0; i < p; ++i) {
            for (idx j = i; j < p; ++j) {
                double s = 0.0;
                for (idx r = 0; r < n; ++r) s += W(r, i) * W(r, j);
                S(i, j) = S(j, i) = s;
            }
            S(i, i) += omega_ * omega_;
        }
        return S;
    }
};

}  // namespace detail

enum class PrecondQuality { complete, incomplete };
enum class PrecondSign { indefinite, positive };

/// Factored block preconditioner for the regularized saddle system.
/// With a complete factor and the indefinite sign it reproduces the
/// saddle matrix exactly, so the preconditioned operator is the
/// identity up to rounding.
struct BlockPreconditioner {
    detail::SchurCore core;
    PrecondSign sign;
    idx n, p;

    DenseVector apply_inverse(const DenseVector& v) const {
        if (static_cast<idx>(v.size()) != n + p)
            throw ContractViolation("BlockPreconditioner: vector length mismatch");
        DenseVector w(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n));
        DenseVector wc(v.begin() + static_cast<std::ptrdiff_t>(n), v.end());
        DenseVector a = core.solve_lower_perm(w);
        DenseVector u2 = wc;
        axpy(1.0, core.wt_mul(a), u2);  // wc - B a with B = -W^T
        DenseVector t2 = p > 0 ? core.schur.solve(u2) : DenseVector{};
        DenseVector rhs1 = a;
        if (sign == PrecondSign::indefinite) scale_inplace(rhs1, -1.0);
        if (p > 0) axpy(1.0, core.W.mul(t2), rhs1);  // v1 - B^T t2
        DenseVector t1 = core.fac.perm.scatter(tri_solve(core.fac.L, rhs1, TriMode::lower_transpose));
        DenseVector out;
        out.reserve(static_cast<size_t>(n + p));
        out.insert(out.end(), t1.begin(), t1.end());
        out.insert(out.end(), t2.begin(), t2.end());
        return out;
    }

    LinearOperator as_operator() const {
        return {n + p, [this](const DenseVector& v) { return apply_inverse(v); }};
    }
};

inline BlockPreconditioner build_preconditioner(const SparseMatrix& A, const SparseMatrix& C,
                                                double omega, PrecondQuality quality,
                                                PrecondSign sign) {
    if (!(omega > 0.0)) throw ContractViolation("build_preconditioner: omega must be positive");
    SparseMatrix H = normal_matrix(A, omega);
    CholFactor fac = quality == PrecondQuality::complete ? cholesky(H, CholOrdering::fill_reducing)
                                                         : incomplete_cholesky(H);
    return BlockPreconditioner{detail::SchurCore(std::move(fac), C, omega), sign, A.ncols(),
                               C.nrows()};
}

/// omega = 10^{-q}, gamma = 10^{q} with q the smallest k such that
/// 10^{-2k} <= nu^{-t}; for 64-bit binary arithmetic q = 8.
inline std::pair<double, double> default_parameters(int nu = 2, int t = 53) {
    double ulp = std::pow(static_cast<double>(nu), -t);
    int q = 1;
    while (std::pow(10.0, -2 * q) > ulp) ++q;
    return {std::pow(10.0, -q), std::pow(10.0, q)};
}

enum class LagrangeRoute { qr, normal_equations };

struct LagrangeOptions {
    double reg = 0.0;
    LagrangeRoute route = LagrangeRoute::qr;
};

/// Updating scheme with explicit Lagrange multipliers: solve the
/// unconstrained problem, then correct it through the p x p system
/// Y lambda = d - C y with Y = C J and H J = -C^T.
inline SolveReport solve_lagrange(const LseProblem& prob, const LagrangeOptions& opts = {}) {
    prob.validate();
    idx n = prob.n(), p = prob.p();
    std::map<std::string, double> aux;
    aux["reg"] = opts.reg;

    DenseVector y;
    DenseMatrix J(n, p);
    if (opts.route == LagrangeRoute::qr) {
        SparseMatrix As = opts.reg > 0.0 ? vstack(prob.A, SparseMatrix::identity(n, opts.reg))
                                         : prob.A;
        DenseVector bs = prob.b;
        bs.resize(static_cast<size_t>(As.nrows()), 0.0);
        QrOptions qopts;
        qopts.ordering = QrOrdering::fill_reducing;
        QrFactor qr = [&]() {
            try {
                return householder_qr(As, bs, qopts);
            } catch (const RankDeficientError& e) {
                throw NotPositiveDefiniteError(
                    "solve_lagrange: normal matrix is singular (A rank deficient); retry with reg > 0",
                    e.index);
            }
        }();
        y = qr.colperm.scatter(qr.solve_r(qr.f));
        SparseMatrix CT = transpose(prob.C);
        DenseVector col = zeros(n);
        for (idx k = 0; k < p; ++k) {
            std::fill(col.begin(), col.end(), 0.0);
            for (idx t = CT.col_begin(k); t < CT.col_end(k); ++t)
                col[static_cast<size_t>(CT.row_at(t))] = CT.value_at(t);
            DenseVector s = qr.solve_r(qr.solve_prt(col));  // R^{-1} R^{-T} P^T c
            DenseVector jc = qr.colperm.scatter(s);
            for (idx i = 0; i < n; ++i) J(i, k) = -jc[static_cast<size_t>(i)];
        }
    } else {
        SparseMatrix H = normal_matrix(prob.A, opts.reg);
        CholFactor chol = [&]() {
            try {
                return cholesky(H, CholOrdering::fill_reducing);
            } catch (const NotPositiveDefiniteError& e) {
                throw NotPositiveDefiniteError(
                    "solve_lagrange: normal matrix is not positive definite; retry with reg > 0",
                    e.pivot);
            }
        }();
        y = chol.solve(spmv(prob.A, prob.b, true));
        SparseMatrix CT = transpose(prob.C);
        DenseVector col = zeros(n);
        for (idx k = 0; k < p; ++k) {
            std::fill(col.begin(), col.end(), 0.0);
            for (idx t = CT.col_begin(k); t < CT.col_end(k); ++t)
                col[static_cast<size_t>(CT.row_at(t))] = -CT.value_at(t);
            DenseVector jc = chol.solve(col);
            for (idx i = 0; i < n; ++i) J(i, k) = jc[static_cast<size_t>(i)];
        }
    }

    DenseVector x = y;
    DenseVector lambda;
    if (p > 0) {
        DenseMatrix negY(p, p);  // -Y = -C J is symmetric positive definite
        for (idx k = 0; k < p; ++k) {
            DenseVector jk(static_cast<size_t>(n));
            for (idx i = 0; i < n; ++i) jk[static_cast<size_t>(i)] = J(i, k);
            DenseVector yk = spmv(prob.C, jk);
            for (idx i = 0; i < p; ++i) negY(i, k) = -yk[static_cast<size_t>(i)];
        }
        DenseVector rhs = spmv(prob.C, y);
        axpy(-1.0, prob.d, rhs);  // C y - d
        lambda = DenseCholesky(negY).solve(rhs);
        axpy(1.0, J.mul(lambda), x);
    }
    SolveReport rep = finalize_report(prob, std::move(x), "lagrange", 0, std::move(aux));
    rep.multipliers = std::move(lambda);
    return rep;
}

namespace detail {

/// K^T = R^{-T} P^T C^T, one triangular solve per constraint row.
inline DenseMatrix build_kt(const QrFactor& qr, const SparseMatrix& C) {
    idx n = qr.ncols, p = C.nrows();
    SparseMatrix CT = transpose(C);
    DenseMatrix KT(n, p);
    DenseVector col = zeros(n);
    for (idx k = 0; k < p; ++k) {
        std::fill(col.begin(), col.end(), 0.0);
        for (idx t = CT.col_begin(k); t < CT.col_end(k); ++t)
            col[static_cast<size_t>(CT.row_at(t))] = CT.value_at(t);
        DenseVector kt = qr.solve_prt(col);
        for (idx i = 0; i < n; ++i) KT(i, k) = kt[static_cast<size_t>(i)];
    }
    return KT;
}

inline DenseCholesky make_kkt_chol(const DenseMatrix& KT) {
    idx n = KT.rows, p = KT.cols;
    DenseMatrix G(p, p);
    for (idx i = 0; i < p; ++i)
        for (idx j = i; j < p; ++j) {
            double s = 0.0;
            for (idx r = 0; r < n; ++r) s += KT(r, i) * KT(r, j);
            G(i, j) = G(j, i) = s;
        }
    try {
        return DenseCholesky(G);
    } catch (const NotPositiveDefiniteError& e) {
        throw SingularFactorError("K K^T is singular: C is not of full row rank", e.pivot);
    }
}

}  // namespace detail

/// QR with updating: factorize [A P, b], take the unconstrained solution
/// and add the minimum-norm correction that restores the constraints.
inline SolveReport solve_qr_update(const LseProblem& prob) {
    prob.validate();
    idx p = prob.p();
    QrOptions qopts;
    qopts.ordering = QrOrdering::fill_reducing;
    QrFactor qr = householder_qr(prob.A, prob.b, qopts);
    DenseVector y = qr.colperm.scatter(qr.solve_r(qr.f));
    if (p == 0) return finalize_report(prob, std::move(y), "qr-update");

    DenseMatrix KT = detail::build_kt(qr, prob.C);
    DenseCholesky kkt = detail::make_kkt_chol(KT);

    DenseVector rhs = prob.d;
    axpy(-1.0, spmv(prob.C, y), rhs);  // d - C y
    DenseVector w = kkt.solve(rhs);
    DenseVector u = KT.mul(w);  // minimum-norm u with K u = d - C y
    DenseVector z = qr.colperm.scatter(qr.solve_r(u));
    DenseVector x = y;
    axpy(1.0, z, x);
    SolveReport rep = finalize_report(prob, std::move(x), "qr-update");
    rep.multipliers = w;
    scale_inplace(rep.multipliers, -1.0);
    return rep;
}

/// Three-block augmented-system route: identical algebra to
/// solve_qr_update but recovers x through a single triangular solve with
/// the combined right-hand side f + u.
inline SolveReport solve_three_block(const LseProblem& prob) {
    prob.validate();
    idx p = prob.p();
    QrOptions qopts;
    qopts.ordering = QrOrdering::fill_reducing;
    QrFactor qr = householder_qr(prob.A, prob.b, qopts);
    if (p == 0)
        return finalize_report(prob, qr.colperm.scatter(qr.solve_r(qr.f)), "three-block");

    DenseMatrix KT = detail::build_kt(qr, prob.C);
    DenseCholesky kkt = detail::make_kkt_chol(KT);

    DenseVector rhs = KT.mul_transpose(qr.f);  // K f
    for (idx k = 0; k < p; ++k) rhs[static_cast<size_t>(k)] = prob.d[static_cast<size_t>(k)] - rhs[static_cast<size_t>(k)];
    DenseVector w = kkt.solve(rhs);
    DenseVector u = KT.mul(w);
    DenseVector fu = qr.f;
    axpy(1.0, u, fu);
    DenseVector x = qr.colperm.scatter(qr.solve_r(fu));
    SolveReport rep = finalize_report(prob, std::move(x), "three-block");
    rep.multipliers = w;
    scale_inplace(rep.multipliers, -1.0);
    return rep;
}

/// Regularized block signed Cholesky solve of the saddle system
/// [-H(omega) C^T; C omega^2 I] (x, y_c) = (-A^T b, d).
inline SolveReport solve_reg_cholesky(const LseProblem& prob, double omega) {
    prob.validate();
    if (!(omega > 0.0)) throw ContractViolation("solve_reg_cholesky: omega must be positive");
    idx p = prob.p();
    SparseMatrix H = normal_matrix(prob.A, omega);
    CholFactor fac = cholesky(H, CholOrdering::fill_reducing);
    detail::SchurCore core(std::move(fac), prob.C, omega);

    DenseVector z = core.solve_lower_perm(spmv(prob.A, prob.b, true));
    DenseVector rhs_s = prob.d;
    if (p > 0) axpy(-1.0, core.wt_mul(z), rhs_s);  // d + B z with B = -W^T
    DenseVector y_c = p > 0 ? core.schur.solve(rhs_s) : DenseVector{};
    DenseVector t = z;
    if (p > 0) axpy(1.0, core.W.mul(y_c), t);  // z - B^T y_c
    DenseVector x = core.fac.perm.scatter(tri_solve(core.fac.L, t, TriMode::lower_transpose));

    std::map<std::string, double> aux;
    aux["omega"] = omega;
    aux["norm_yc"] = norm2(y_c);
    SolveReport rep = finalize_report(prob, std::move(x), "reg-cholesky", 0, std::move(aux));
    rep.multipliers = y_c;  // lambda estimate is -y_c up to O(omega^2 x)
    scale_inplace(rep.multipliers, -1.0);
    return rep;
}

/// Weighted normal equations (A^T A + gamma^2 C^T C) x = A^T b +
/// gamma^2 C^T d; provided for comparison runs.  Breaks down for
/// extreme gamma, as expected of the weighting approach.
inline SolveReport solve_weighted_normal(const LseProblem& prob, double gamma) {
    prob.validate();
    if (!(gamma >= 1.0)) throw ContractViolation("solve_weighted_normal: gamma must be >= 1");
    SparseMatrix stacked = vstack(prob.A, scale_all(prob.C, gamma));
    SparseMatrix H = normal_matrix(stacked);
    CholFactor chol = cholesky(H, CholOrdering::fill_reducing);
    DenseVector rhs = spmv(prob.A, prob.b, true);
    if (prob.p() > 0) {
        DenseVector ctd = spmv(prob.C, prob.d, true);
        axpy(gamma * gamma, ctd, rhs);
    }
    DenseVector x = chol.solve(rhs);
    std::map<std::string, double> aux;
    aux["gamma"] = gamma;
    if (gamma > 1e8) aux["gamma_warning"] = 1.0;  // past the eps^{-1/2} breakdown bound
    return finalize_report(prob, std::move(x), "weighted-normal", 0, std::move(aux));
}

enum class KrylovMethod { gmres, minres };

struct RegKrylovOptions {
    double omega = 1e-8;
    KrylovMethod method = KrylovMethod::gmres;
    PrecondQuality quality = PrecondQuality::incomplete;
    double tol = 1e-11;
    idx maxit = 0;  // 0: min(1000, n + p)
};

/// Krylov solve of the regularized saddle system with the factored block
/// preconditioner; GMRES uses the indefinite form, MINRES the positive
/// definite form.
inline SolveReport solve_reg_krylov(const LseProblem& prob, const RegKrylovOptions& opts = {}) {
    prob.validate();
    idx n = prob.n(), p = prob.p();
    SaddleOperator saddle(prob.A, prob.C, opts.omega);
    PrecondSign sign =
        opts.method == KrylovMethod::minres ? PrecondSign::positive : PrecondSign::indefinite;
    BlockPreconditioner precond = build_preconditioner(prob.A, prob.C, opts.omega, opts.quality, sign);

    DenseVector rhs = spmv(prob.A, prob.b, true);
    scale_inplace(rhs, -1.0);
    rhs.reserve(static_cast<size_t>(n + p));
    rhs.insert(rhs.end(), prob.d.begin(), prob.d.end());

    idx maxit = opts.maxit > 0 ? opts.maxit : std::min<idx>(1000, n + p);
    LinearOperator op = saddle.as_operator();
    LinearOperator pc = precond.as_operator();
    auto [sol, trace] = opts.method == KrylovMethod::gmres
                            ? gmres(op, pc, rhs, opts.tol, maxit)
                            : minres(op, pc, rhs, opts.tol, maxit);
    const char* tag = opts.method == KrylovMethod::gmres ? "reg-gmres" : "reg-minres";
    if (!trace.converged) {
        DenseVector best_x(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(n));
        throw NonConvergenceError(std::string(tag) + ": not converged within maxit",
                                  std::move(best_x), trace.history);
    }

    DenseVector x(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(n));
    DenseVector y_c(sol.begin() + static_cast<std::ptrdiff_t>(n), sol.end());
    std::map<std::string, double> aux;
    aux["omega"] = opts.omega;
    aux["norm_yc"] = norm2(y_c);
    SolveReport rep = finalize_report(prob, std::move(x), tag, trace.iters, std::move(aux));
    rep.multipliers = y_c;
    scale_inplace(rep.multipliers, -1.0);
    return rep;
}

}  // namespace lse
