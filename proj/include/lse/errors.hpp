#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lse {

using idx = std::int64_t;

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A caller violated a documented precondition (dimension mismatch,
/// parameter out of range, malformed input structure).
class ContractViolation : public Error {
public:
    explicit ContractViolation(const std::string& msg) : Error(msg) {}
};

/// A matrix expected to have full (row or column) rank failed a pivot test.
class RankDeficientError : public Error {
public:
    RankDeficientError(const std::string& msg, idx index)
        : Error(msg + " (pivot index " + std::to_string(index) + ")"), index(index) {}
    idx index;
};

/// Cholesky encountered a nonpositive pivot.
class NotPositiveDefiniteError : public Error {
public:
    NotPositiveDefiniteError(const std::string& msg, idx pivot)
        : Error(msg + " (pivot index " + std::to_string(pivot) + ")"), pivot(pivot) {}
    idx pivot;
};

/// A triangular factor has a zero diagonal entry.
class SingularFactorError : public Error {
public:
    SingularFactorError(const std::string& msg, idx index)
        : Error(msg + " (diagonal index " + std::to_string(index) + ")"), index(index) {}
    idx index;
};

/// A column that must be nonzero is structurally empty.
class NullColumnError : public Error {
public:
    NullColumnError(idx column)
        : Error("matrix has a null column (column index " + std::to_string(column) + ")"),
          column(column) {}
    idx column;
};

/// Incomplete factorization failed after the allowed number of
/// diagonal-shift restarts.
class BreakdownError : public Error {
public:
    explicit BreakdownError(const std::string& msg) : Error(msg) {}
};

/// An iterative solver ran out of iterations or stagnated.  Carries the
/// best iterate seen so far together with its residual history.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& msg, std::vector<double> best_iterate,
                        std::vector<double> residual_history)
        : Error(msg),
          best_iterate(std::move(best_iterate)),
          residual_history(std::move(residual_history)) {}
    std::vector<double> best_iterate;
    std::vector<double> residual_history;
};

/// The KKT system is singular: the intersection of the null spaces of A
/// and C is nontrivial, so the solution is not unique.
class NonUniquenessError : public Error {
public:
    explicit NonUniquenessError(const std::string& msg) : Error(msg) {}
};

/// Malformed input file.  Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, idx line)
        : Error("parse error at line " + std::to_string(line) + ": " + msg), line(line) {}
    explicit ParseError(const std::string& msg) : Error("parse error: " + msg), line(0) {}
    idx line;
};

/// Random problem generation failed its rank/conditioning checks after
/// the allowed number of attempts.
class GenerationError : public Error {
public:
    explicit GenerationError(const std::string& msg) : Error(msg) {}
};

}  // namespace lse
