#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "lse/errors.hpp"

namespace lse {

/// Dense vector of 64-bit reals.
using DenseVector = std::vector<double>;

inline DenseVector zeros(idx n) { return DenseVector(static_cast<size_t>(n), 0.0); }

inline DenseVector ones(idx n) { return DenseVector(static_cast<size_t>(n), 1.0); }

inline double dot(const DenseVector& a, const DenseVector& b) {
    if (a.size() != b.size()) throw ContractViolation("dot: length mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const DenseVector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

/// y += alpha * x
inline void axpy(double alpha, const DenseVector& x, DenseVector& y) {
    if (x.size() != y.size()) throw ContractViolation("axpy: length mismatch");
    for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale_inplace(DenseVector& v, double alpha) {
    for (double& x : v) x *= alpha;
}

inline bool all_finite(const DenseVector& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline void require_finite(const DenseVector& v, const char* what) {
    if (!all_finite(v)) throw ContractViolation(std::string(what) + ": non-finite entry");
}

/// Permutation of {0..size-1}.  `map[j]` is the original index of the
/// item placed at position j, so as a matrix P has P(j, map[j]) = 1:
/// gather(v) = P v reads v[map[j]] into slot j, scatter(v) = P^T v
/// writes v[j] into slot map[j].
struct Permutation {
    std::vector<idx> map;

    Permutation() = default;
    explicit Permutation(std::vector<idx> m) : map(std::move(m)) {}

    static Permutation identity(idx n) {
        std::vector<idx> m(static_cast<size_t>(n));
        std::iota(m.begin(), m.end(), idx{0});
        return Permutation(std::move(m));
    }

    idx size() const { return static_cast<idx>(map.size()); }

    bool is_valid() const {
        std::vector<char> seen(map.size(), 0);
        for (idx v : map) {
            if (v < 0 || v >= size() || seen[static_cast<size_t>(v)]) return false;
            seen[static_cast<size_t>(v)] = 1;
        }
        return true;
    }

    Permutation inverse() const {
        std::vector<idx> inv(map.size());
        for (size_t j = 0; j < map.size(); ++j) inv[static_cast<size_t>(map[j])] = static_cast<idx>(j);
        return Permutation(std::move(inv));
    }

    /// out[j] = v[map[j]]
    DenseVector gather(const DenseVector& v) const {
        if (static_cast<idx>(v.size()) != size()) throw ContractViolation("Permutation::gather: size mismatch");
        DenseVector out(v.size());
        for (size_t j = 0; j < map.size(); ++j) out[j] = v[static_cast<size_t>(map[j])];
        return out;
    }

    /// out[map[j]] = v[j]
    DenseVector scatter(const DenseVector& v) const {
        if (static_cast<idx>(v.size()) != size()) throw ContractViolation("Permutation::scatter: size mismatch");
        DenseVector out(v.size());
        for (size_t j = 0; j < map.size(); ++j) out[static_cast<size_t>(map[j])] = v[j];
        return out;
    }
};

/// Positive per-column scaling factors (the diagonal matrix D).
struct ScalingInfo {
    DenseVector diag;

    static ScalingInfo identity(idx n) { return ScalingInfo{ones(n)}; }

    bool is_valid() const {
        return std::all_of(diag.begin(), diag.end(),
                           [](double d) { return d > 0.0 && std::isfinite(d); });
    }
};

}  // namespace lse
