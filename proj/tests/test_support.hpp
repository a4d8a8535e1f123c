#pragma once

// Brute-force dense reference implementations used as oracles in the
// tests.  These deliberately share no code with the library's solve
// paths: plain nested loops and naive Gaussian elimination only.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "lse/rng.hpp"
#include "lse/sparse_matrix.hpp"

namespace testsupport {

using Dense = std::vector<std::vector<double>>;

inline Dense to_dense(const lse::SparseMatrix& M) {
    Dense D(static_cast<size_t>(M.nrows()), std::vector<double>(static_cast<size_t>(M.ncols()), 0.0));
    for (lse::idx j = 0; j < M.ncols(); ++j)
        for (lse::idx k = M.col_begin(j); k < M.col_end(j); ++k)
            D[static_cast<size_t>(M.row_at(k))][static_cast<size_t>(j)] += M.value_at(k);
    return D;
}

inline std::vector<double> matvec(const Dense& A, const std::vector<double>& x) {
    std::vector<double> y(A.size(), 0.0);
    for (size_t i = 0; i < A.size(); ++i)
        for (size_t j = 0; j < x.size(); ++j) y[i] += A[i][j] * x[j];
    return y;
}

inline std::vector<double> matvec_t(const Dense& A, const std::vector<double>& x) {
    size_t n = A.empty() ? 0 : A[0].size();
    std::vector<double> y(n, 0.0);
    for (size_t i = 0; i < A.size(); ++i)
        for (size_t j = 0; j < n; ++j) y[j] += A[i][j] * x[i];
    return y;
}

inline Dense matmat(const Dense& A, const Dense& B) {
    size_t m = A.size(), k = B.size(), n = B.empty() ? 0 : B[0].size();
    Dense C(m, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < m; ++i)
        for (size_t l = 0; l < k; ++l)
            for (size_t j = 0; j < n; ++j) C[i][j] += A[i][l] * B[l][j];
    return C;
}

inline Dense transpose(const Dense& A) {
    size_t m = A.size(), n = A.empty() ? 0 : A[0].size();
    Dense T(n, std::vector<double>(m, 0.0));
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) T[j][i] = A[i][j];
    return T;
}

inline double frob(const Dense& A) {
    double s = 0.0;
    for (const auto& row : A)
        for (double v : row) s += v * v;
    return std::sqrt(s);
}

inline double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

/// Plain Gaussian elimination with partial pivoting.
inline std::vector<double> gauss_solve(Dense A, std::vector<double> b) {
    size_t n = A.size();
    for (size_t k = 0; k < n; ++k) {
        size_t imax = k;
        for (size_t i = k + 1; i < n; ++i)
            if (std::fabs(A[i][k]) > std::fabs(A[imax][k])) imax = i;
        std::swap(A[k], A[imax]);
        std::swap(b[k], b[imax]);
        if (A[k][k] == 0.0) throw std::runtime_error("gauss_solve: singular");
        for (size_t i = k + 1; i < n; ++i) {
            double f = A[i][k] / A[k][k];
            if (f == 0.0) continue;
            for (size_t j = k; j < n; ++j) A[i][j] -= f * A[k][j];
            b[i] -= f * b[k];
        }
    }
    std::vector<double> x(n, 0.0);
    for (size_t k = n; k-- > 0;) {
        double s = b[k];
        for (size_t j = k + 1; j < n; ++j) s -= A[k][j] * x[j];
        x[k] = s / A[k][k];
    }
    return x;
}

/// Unconstrained least squares via the dense normal equations.
inline std::vector<double> dense_ls(const Dense& A, const std::vector<double>& b) {
    Dense At = transpose(A);
    Dense H = matmat(At, A);
    return gauss_solve(H, matvec(At, b));
}

inline lse::SparseMatrix random_sparse(lse::idx m, lse::idx n, double density, std::uint64_t seed,
                                       bool unit_diag_skeleton = false) {
    lse::Rng rng(seed);
    std::vector<lse::Triplet> trips;
    if (unit_diag_skeleton)
        for (lse::idx j = 0; j < std::min(m, n); ++j) trips.push_back({j, j, rng.uniform(0.5, 1.5)});
    auto count = static_cast<lse::idx>(density * static_cast<double>(m) * static_cast<double>(n));
    for (lse::idx t = 0; t < count; ++t) {
        auto i = static_cast<lse::idx>(rng.uniform_int(static_cast<std::uint64_t>(m)));
        auto j = static_cast<lse::idx>(rng.uniform_int(static_cast<std::uint64_t>(n)));
        trips.push_back({i, j, rng.uniform(-1.0, 1.0)});
    }
    return lse::SparseMatrix::from_triplets(m, n, std::move(trips));
}

inline std::vector<double> random_vector(lse::idx n, std::uint64_t seed) {
    lse::Rng rng(seed);
    std::vector<double> v(static_cast<size_t>(n));
    for (double& x : v) x = rng.normal();
    return v;
}

}  // namespace testsupport
