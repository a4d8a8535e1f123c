#pragma once

#include <algorithm>
#include <cmath>
#include <tuple>
#include <utility>
#include <vector>

#include "lse/core_types.hpp"
#include "lse/errors.hpp"

namespace lse {

struct Triplet {
    idx row;
    idx col;
    double value;
};

/// Compressed-sparse-column matrix of 64-bit reals.
///
/// Invariants held after construction: col_ptr is nondecreasing with
/// col_ptr[0] = 0 and col_ptr[ncols] = nnz; row indices inside each
/// column are strictly increasing and < nrows; no explicitly stored
/// zero values (duplicates are summed and exact zeros pruned by the
/// triplet builder).
class SparseMatrix {
public:
    SparseMatrix() : nrows_(0), ncols_(0), col_ptr_(1, 0) {}

    SparseMatrix(idx nrows, idx ncols)
        : nrows_(nrows), ncols_(ncols), col_ptr_(static_cast<size_t>(ncols) + 1, 0) {
        if (nrows < 0 || ncols < 0) throw ContractViolation("SparseMatrix: negative dimension");
    }

    static SparseMatrix from_triplets(idx nrows, idx ncols, std::vector<Triplet> entries) {
        if (nrows < 0 || ncols < 0) throw ContractViolation("from_triplets: negative dimension");
        for (const Triplet& t : entries) {
            if (t.row < 0 || t.row >= nrows || t.col < 0 || t.col >= ncols)
                throw ContractViolation("from_triplets: entry index out of range");
        }
        std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
            return std::tie(a.col, a.row) < std::tie(b.col, b.row);
        });
        SparseMatrix M(nrows, ncols);
        M.row_idx_.reserve(entries.size());
        M.values_.reserve(entries.size());
        size_t k = 0;
        for (idx j = 0; j < ncols; ++j) {
            while (k < entries.size() && entries[k].col == j) {
                idx r = entries[k].row;
                double v = entries[k].value;
                ++k;
                while (k < entries.size() && entries[k].col == j && entries[k].row == r) {
                    v += entries[k].value;  // duplicates are summed
                    ++k;
                }
                if (v != 0.0) {
                    M.row_idx_.push_back(r);
                    M.values_.push_back(v);
                }
            }
            M.col_ptr_[static_cast<size_t>(j) + 1] = static_cast<idx>(M.row_idx_.size());
        }
        return M;
    }

    /// Assemble from raw CSC arrays.  Rows must already be strictly
    /// increasing per column; zero values are kept only if prune=false.
    static SparseMatrix from_csc(idx nrows, idx ncols, std::vector<idx> col_ptr,
                                 std::vector<idx> row_idx, std::vector<double> values) {
        if (col_ptr.size() != static_cast<size_t>(ncols) + 1 || col_ptr.front() != 0 ||
            col_ptr.back() != static_cast<idx>(row_idx.size()) || row_idx.size() != values.size())
            throw ContractViolation("from_csc: inconsistent arrays");
        for (idx j = 0; j < ncols; ++j) {
            if (col_ptr[static_cast<size_t>(j)] > col_ptr[static_cast<size_t>(j) + 1])
                throw ContractViolation("from_csc: col_ptr not nondecreasing");
            for (idx k = col_ptr[static_cast<size_t>(j)]; k < col_ptr[static_cast<size_t>(j) + 1]; ++k) {
                idx r = row_idx[static_cast<size_t>(k)];
                if (r < 0 || r >= nrows) throw ContractViolation("from_csc: row index out of range");
                if (k > col_ptr[static_cast<size_t>(j)] && row_idx[static_cast<size_t>(k - 1)] >= r)
                    throw ContractViolation("from_csc: rows not strictly increasing");
            }
        }
        SparseMatrix M;
        M.nrows_ = nrows;
        M.ncols_ = ncols;
        M.col_ptr_ = std::move(col_ptr);
        M.row_idx_ = std::move(row_idx);
        M.values_ = std::move(values);
        return M;
    }

    static SparseMatrix identity(idx n, double value = 1.0) {
        SparseMatrix M(n, n);
        if (value == 0.0) return M;
        M.row_idx_.resize(static_cast<size_t>(n));
        M.values_.assign(static_cast<size_t>(n), value);
        for (idx i = 0; i < n; ++i) {
            M.row_idx_[static_cast<size_t>(i)] = i;
            M.col_ptr_[static_cast<size_t>(i) + 1] = i + 1;
        }
        return M;
    }

    idx nrows() const { return nrows_; }
    idx ncols() const { return ncols_; }
    idx nnz() const { return static_cast<idx>(row_idx_.size()); }

    const std::vector<idx>& col_ptr() const { return col_ptr_; }
    const std::vector<idx>& row_idx() const { return row_idx_; }
    const std::vector<double>& values() const { return values_; }

    idx col_begin(idx j) const { return col_ptr_[static_cast<size_t>(j)]; }
    idx col_end(idx j) const { return col_ptr_[static_cast<size_t>(j) + 1]; }
    idx row_at(idx k) const { return row_idx_[static_cast<size_t>(k)]; }
    double value_at(idx k) const { return values_[static_cast<size_t>(k)]; }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::fabs(v));
        return m;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : values_) s += v * v;
        return std::sqrt(s);
    }

    /// Used by in-place builders (factorizations) that construct columns
    /// left to right and maintain the invariants themselves.
    void append_column(const std::vector<idx>& rows, const std::vector<double>& vals) {
        row_idx_.insert(row_idx_.end(), rows.begin(), rows.end());
        values_.insert(values_.end(), vals.begin(), vals.end());
        col_ptr_.push_back(static_cast<idx>(row_idx_.size()));
        ++ncols_;
    }

    void set_shape_for_append(idx nrows) {
        nrows_ = nrows;
        ncols_ = 0;
        col_ptr_.assign(1, 0);
        row_idx_.clear();
        values_.clear();
    }

private:
    idx nrows_;
    idx ncols_;
    std::vector<idx> col_ptr_;
    std::vector<idx> row_idx_;
    std::vector<double> values_;
};

/// y = M x, or y = M^T x when transpose is set.  Structurally empty rows
/// of the result are exact zeros.
inline DenseVector spmv(const SparseMatrix& M, const DenseVector& x, bool transpose = false) {
    if (!transpose) {
        if (static_cast<idx>(x.size()) != M.ncols())
            throw ContractViolation("spmv: x.len must equal ncols");
        DenseVector y = zeros(M.nrows());
        for (idx j = 0; j < M.ncols(); ++j) {
            double xj = x[static_cast<size_t>(j)];
            if (xj == 0.0) continue;
            for (idx k = M.col_begin(j); k < M.col_end(j); ++k)
                y[static_cast<size_t>(M.row_at(k))] += M.value_at(k) * xj;
        }
        return y;
    }
    if (static_cast<idx>(x.size()) != M.nrows())
        throw ContractViolation("spmv: x.len must equal nrows for transposed product");
    DenseVector y = zeros(M.ncols());
    for (idx j = 0; j < M.ncols(); ++j) {
        double s = 0.0;
        for (idx k = M.col_begin(j); k < M.col_end(j); ++k)
            s += M.value_at(k) * x[static_cast<size_t>(M.row_at(k))];
        y[static_cast<size_t>(j)] = s;
    }
    return y;
}

/// y = H x for symmetric H stored as its lower triangle (diagonal included).
inline DenseVector spmv_sym_lower(const SparseMatrix& H, const DenseVector& x) {
    if (H.nrows() != H.ncols() || static_cast<idx>(x.size()) != H.ncols())
        throw ContractViolation("spmv_sym_lower: dimension mismatch");
    DenseVector y = zeros(H.nrows());
    for (idx j = 0; j < H.ncols(); ++j) {
        double xj = x[static_cast<size_t>(j)];
        for (idx k = H.col_begin(j); k < H.col_end(j); ++k) {
            idx i = H.row_at(k);
            double v = H.value_at(k);
            y[static_cast<size_t>(i)] += v * xj;
            if (i != j) y[static_cast<size_t>(j)] += v * x[static_cast<size_t>(i)];
        }
    }
    return y;
}

inline SparseMatrix transpose(const SparseMatrix& M) {
    std::vector<idx> count(static_cast<size_t>(M.nrows()) + 1, 0);
    for (idx k = 0; k < M.nnz(); ++k) ++count[static_cast<size_t>(M.row_at(k)) + 1];
    std::vector<idx> col_ptr(count.size());
    for (size_t i = 1; i < count.size(); ++i) count[i] += count[i - 1];
    col_ptr = count;
    std::vector<idx> row_idx(static_cast<size_t>(M.nnz()));
    std::vector<double> values(static_cast<size_t>(M.nnz()));
    std::vector<idx> next(col_ptr.begin(), col_ptr.end() - 1);
    for (idx j = 0; j < M.ncols(); ++j) {
        for (idx k = M.col_begin(j); k < M.col_end(j); ++k) {
            idx pos = next[static_cast<size_t>(M.row_at(k))]++;
            row_idx[static_cast<size_t>(pos)] = j;
            values[static_cast<size_t>(pos)] = M.value_at(k);
        }
    }
    return SparseMatrix::from_csc(M.ncols(), M.nrows(), std::move(col_ptr), std::move(row_idx),
                                  std::move(values));
}

/// C = A B with a dense per-column accumulator; exact zeros pruned.
inline SparseMatrix multiply(const SparseMatrix& A, const SparseMatrix& B) {
    if (A.ncols() != B.nrows()) throw ContractViolation("multiply: inner dimension mismatch");
    SparseMatrix C;
    C.set_shape_for_append(A.nrows());
    DenseVector work = zeros(A.nrows());
    std::vector<idx> pattern;
    std::vector<char> mark(static_cast<size_t>(A.nrows()), 0);
    std::vector<idx> rows;
    std::vector<double> vals;
    for (idx j = 0; j < B.ncols(); ++j) {
        pattern.clear();
        for (idx kb = B.col_begin(j); kb < B.col_end(j); ++kb) {
            idx k = B.row_at(kb);
            double bkj = B.value_at(kb);
            for (idx ka = A.col_begin(k); ka < A.col_end(k); ++ka) {
                idx i = A.row_at(ka);
                if (!mark[static_cast<size_t>(i)]) {
                    mark[static_cast<size_t>(i)] = 1;
                    pattern.push_back(i);
                }
                work[static_cast<size_t>(i)] += A.value_at(ka) * bkj;
            }
        }
        std::sort(pattern.begin(), pattern.end());
        rows.clear();
        vals.clear();
        for (idx i : pattern) {
            double v = work[static_cast<size_t>(i)];
            work[static_cast<size_t>(i)] = 0.0;
            mark[static_cast<size_t>(i)] = 0;
            if (v != 0.0) {
                rows.push_back(i);
                vals.push_back(v);
            }
        }
        C.append_column(rows, vals);
    }
    // restore the target column count even when B has none
    while (C.ncols() < B.ncols()) C.append_column({}, {});
    return C;
}

/// Rows of `top` stacked above rows of `bottom`.
inline SparseMatrix vstack(const SparseMatrix& top, const SparseMatrix& bottom) {
    if (top.ncols() != bottom.ncols()) throw ContractViolation("vstack: column count mismatch");
    SparseMatrix M;
    M.set_shape_for_append(top.nrows() + bottom.nrows());
    std::vector<idx> rows;
    std::vector<double> vals;
    for (idx j = 0; j < top.ncols(); ++j) {
        rows.clear();
        vals.clear();
        for (idx k = top.col_begin(j); k < top.col_end(j); ++k) {
            rows.push_back(top.row_at(k));
            vals.push_back(top.value_at(k));
        }
        for (idx k = bottom.col_begin(j); k < bottom.col_end(j); ++k) {
            rows.push_back(top.nrows() + bottom.row_at(k));
            vals.push_back(bottom.value_at(k));
        }
        M.append_column(rows, vals);
    }
    return M;
}

/// M with column j multiplied by d[j].
inline SparseMatrix scale_columns(const SparseMatrix& M, const DenseVector& d) {
    if (static_cast<idx>(d.size()) != M.ncols()) throw ContractViolation("scale_columns: size mismatch");
    std::vector<idx> col_ptr = M.col_ptr();
    std::vector<idx> row_idx = M.row_idx();
    std::vector<double> values = M.values();
    for (idx j = 0; j < M.ncols(); ++j)
        for (idx k = M.col_begin(j); k < M.col_end(j); ++k)
            values[static_cast<size_t>(k)] *= d[static_cast<size_t>(j)];
    return SparseMatrix::from_csc(M.nrows(), M.ncols(), std::move(col_ptr), std::move(row_idx),
                                  std::move(values));
}

inline SparseMatrix scale_all(const SparseMatrix& M, double alpha) {
    std::vector<idx> col_ptr = M.col_ptr();
    std::vector<idx> row_idx = M.row_idx();
    std::vector<double> values = M.values();
    for (double& v : values) v *= alpha;
    return SparseMatrix::from_csc(M.nrows(), M.ncols(), std::move(col_ptr), std::move(row_idx),
                                  std::move(values));
}

/// M restricted to the given columns, in the given order.
inline SparseMatrix select_columns(const SparseMatrix& M, const std::vector<idx>& cols) {
    SparseMatrix R;
    R.set_shape_for_append(M.nrows());
    std::vector<idx> rows;
    std::vector<double> vals;
    for (idx j : cols) {
        if (j < 0 || j >= M.ncols()) throw ContractViolation("select_columns: index out of range");
        rows.clear();
        vals.clear();
        for (idx k = M.col_begin(j); k < M.col_end(j); ++k) {
            rows.push_back(M.row_at(k));
            vals.push_back(M.value_at(k));
        }
        R.append_column(rows, vals);
    }
    return R;
}

/// w_i = squared 2-norm of column i; empty columns give 0.
inline DenseVector column_norms_squared(const SparseMatrix& M) {
    DenseVector w = zeros(M.ncols());
    for (idx j = 0; j < M.ncols(); ++j) {
        double s = 0.0;
        for (idx k = M.col_begin(j); k < M.col_end(j); ++k) s += M.value_at(k) * M.value_at(k);
        w[static_cast<size_t>(j)] = s;
    }
    return w;
}

inline std::vector<idx> row_nonzero_counts(const SparseMatrix& M) {
    std::vector<idx> cnt(static_cast<size_t>(M.nrows()), 0);
    for (idx k = 0; k < M.nnz(); ++k) ++cnt[static_cast<size_t>(M.row_at(k))];
    return cnt;
}

/// Columns scaled to unit 2-norm; returns the applied scaling, with
/// diag[i] = 1/||M e_i||.  Null columns are rejected.
inline std::pair<SparseMatrix, ScalingInfo> normalize_columns(const SparseMatrix& M) {
    DenseVector w = column_norms_squared(M);
    DenseVector d(w.size());
    for (idx j = 0; j < M.ncols(); ++j) {
        if (w[static_cast<size_t>(j)] == 0.0) throw NullColumnError(j);
        d[static_cast<size_t>(j)] = 1.0 / std::sqrt(w[static_cast<size_t>(j)]);
    }
    return {scale_columns(M, d), ScalingInfo{std::move(d)}};
}

/// Rows with nnz >= density * ncols, sorted by decreasing nonzero count
/// (ties broken by ascending row index).
inline std::vector<idx> detect_dense_rows(const SparseMatrix& M, double density) {
    if (!(density > 0.0 && density <= 1.0))
        throw ContractViolation("detect_dense_rows: density must lie in (0,1]");
    std::vector<idx> cnt = row_nonzero_counts(M);
    double threshold = density * static_cast<double>(M.ncols());
    std::vector<idx> rows;
    for (idx i = 0; i < M.nrows(); ++i)
        if (static_cast<double>(cnt[static_cast<size_t>(i)]) >= threshold) rows.push_back(i);
    std::sort(rows.begin(), rows.end(), [&](idx a, idx b) {
        if (cnt[static_cast<size_t>(a)] != cnt[static_cast<size_t>(b)])
            return cnt[static_cast<size_t>(a)] > cnt[static_cast<size_t>(b)];
        return a < b;
    });
    return rows;
}

/// Splits M by rows: the selected rows (in the order given) form the
/// second block, the remaining rows keep their original order.
inline std::pair<SparseMatrix, SparseMatrix> split_rows(const SparseMatrix& M,
                                                        const std::vector<idx>& rows) {
    std::vector<idx> pos(static_cast<size_t>(M.nrows()), -1);
    for (size_t t = 0; t < rows.size(); ++t) {
        idx r = rows[t];
        if (r < 0 || r >= M.nrows()) throw ContractViolation("split_rows: row index out of range");
        if (pos[static_cast<size_t>(r)] != -1) throw ContractViolation("split_rows: duplicate row index");
        pos[static_cast<size_t>(r)] = static_cast<idx>(t);
    }
    std::vector<idx> keep_pos(static_cast<size_t>(M.nrows()), -1);
    idx nkeep = 0;
    for (idx i = 0; i < M.nrows(); ++i)
        if (pos[static_cast<size_t>(i)] == -1) keep_pos[static_cast<size_t>(i)] = nkeep++;

    SparseMatrix A, C;
    A.set_shape_for_append(nkeep);
    C.set_shape_for_append(static_cast<idx>(rows.size()));
    std::vector<idx> ra, rc;
    std::vector<double> va, vc;
    std::vector<std::pair<idx, double>> centries;
    for (idx j = 0; j < M.ncols(); ++j) {
        ra.clear();
        va.clear();
        centries.clear();
        for (idx k = M.col_begin(j); k < M.col_end(j); ++k) {
            idx i = M.row_at(k);
            if (pos[static_cast<size_t>(i)] == -1) {
                ra.push_back(keep_pos[static_cast<size_t>(i)]);
                va.push_back(M.value_at(k));
            } else {
                centries.emplace_back(pos[static_cast<size_t>(i)], M.value_at(k));
            }
        }
        std::sort(centries.begin(), centries.end());
        rc.clear();
        vc.clear();
        for (auto& [r, v] : centries) {
            rc.push_back(r);
            vc.push_back(v);
        }
        A.append_column(ra, va);
        C.append_column(rc, vc);
    }
    return {std::move(A), std::move(C)};
}

/// Removes structurally empty columns; the removed indices are reported
/// in ascending order.
inline std::pair<SparseMatrix, std::vector<idx>> drop_null_columns(const SparseMatrix& M) {
    std::vector<idx> removed;
    SparseMatrix R;
    R.set_shape_for_append(M.nrows());
    std::vector<idx> rows;
    std::vector<double> vals;
    for (idx j = 0; j < M.ncols(); ++j) {
        if (M.col_begin(j) == M.col_end(j)) {
            removed.push_back(j);
            continue;
        }
        rows.clear();
        vals.clear();
        for (idx k = M.col_begin(j); k < M.col_end(j); ++k) {
            rows.push_back(M.row_at(k));
            vals.push_back(M.value_at(k));
        }
        R.append_column(rows, vals);
    }
    return {std::move(R), std::move(removed)};
}

/// Keeps the listed columns (ascending order assumed) of M removed, i.e.
/// drops them; used by the harness to mirror drop_null_columns on a
/// companion matrix.
inline SparseMatrix drop_columns(const SparseMatrix& M, const std::vector<idx>& cols) {
    std::vector<char> dropme(static_cast<size_t>(M.ncols()), 0);
    for (idx j : cols) {
        if (j < 0 || j >= M.ncols()) throw ContractViolation("drop_columns: index out of range");
        dropme[static_cast<size_t>(j)] = 1;
    }
    std::vector<idx> keep;
    for (idx j = 0; j < M.ncols(); ++j)
        if (!dropme[static_cast<size_t>(j)]) keep.push_back(j);
    return select_columns(M, keep);
}

}  // namespace lse
