#pragma once

#include <map>
#include <string>
#include <vector>

#include "lse/core_types.hpp"
#include "lse/errors.hpp"
#include "lse/sparse_matrix.hpp"

namespace lse {

/// One fully prepared instance of the equality-constrained least squares
/// problem: minimize ||A x - b|| subject to C x = d.  The scaling field
/// records the column scaling applied during assembly (identity when the
/// problem was built directly).
struct LseProblem {
    SparseMatrix A;  // m x n
    SparseMatrix C;  // p x n
    DenseVector b;   // length m
    DenseVector d;   // length p
    ScalingInfo scaling;
    std::string provenance;
    std::vector<idx> removed_columns;  // null columns dropped during assembly

    idx m() const { return A.nrows(); }
    idx n() const { return A.ncols(); }
    idx p() const { return C.nrows(); }

    void validate() const {
        if (C.ncols() != n()) throw ContractViolation("LseProblem: A and C column counts differ");
        if (static_cast<idx>(b.size()) != m()) throw ContractViolation("LseProblem: b length mismatch");
        if (static_cast<idx>(d.size()) != p()) throw ContractViolation("LseProblem: d length mismatch");
        if (!(m() >= n() && n() > p() && p() >= 0))
            throw ContractViolation("LseProblem: dimensions must satisfy m >= n > p >= 0");
        for (idx j = 0; j < n(); ++j)
            if (A.col_begin(j) == A.col_end(j)) throw NullColumnError(j);
        require_finite(b, "LseProblem::b");
        require_finite(d, "LseProblem::d");
    }
};

/// Solution plus recomputed diagnostics.  norm_r and norm_rc are always
/// recomputed from x at report time, never taken from solver by-products.
struct SolveReport {
    DenseVector x;
    double norm_x = 0.0;
    double norm_r = 0.0;
    double norm_rc = 0.0;
    idx iters = 0;  // 0 for direct methods
    std::string method_tag;
    DenseVector multipliers;  // method's multiplier estimate when defined
    std::map<std::string, double> aux;
};

inline SolveReport finalize_report(const LseProblem& prob, DenseVector x, std::string tag,
                                   idx iters = 0, std::map<std::string, double> aux = {}) {
    SolveReport rep;
    rep.norm_x = norm2(x);
    DenseVector r = prob.b;
    axpy(-1.0, spmv(prob.A, x), r);
    rep.norm_r = norm2(r);
    DenseVector rc = prob.d;
    if (prob.p() > 0) axpy(-1.0, spmv(prob.C, x), rc);
    rep.norm_rc = norm2(rc);
    rep.x = std::move(x);
    rep.iters = iters;
    rep.method_tag = std::move(tag);
    rep.aux = std::move(aux);
    return rep;
}

}  // namespace lse
