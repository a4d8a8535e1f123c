#include <doctest.h>

#include "lse/sparse_matrix.hpp"
#include "test_support.hpp"

using namespace lse;
namespace ts = testsupport;

TEST_CASE("spmv identity and hand-checked 3x2") {
    SparseMatrix I3 = SparseMatrix::identity(3);
    DenseVector x = {1.0, 2.0, 3.0};
    CHECK(spmv(I3, x) == DenseVector{1.0, 2.0, 3.0});

    // M = [[2,0],[0,0],[1,3]]
    SparseMatrix M = SparseMatrix::from_triplets(3, 2, {{0, 0, 2.0}, {2, 0, 1.0}, {2, 1, 3.0}});
    DenseVector y = spmv(M, {1.0, 1.0});
    CHECK(y == DenseVector{2.0, 0.0, 4.0});
    CHECK(y[1] == 0.0);  // structurally empty row gives an exact zero
}

TEST_CASE("spmv dimension mismatch is a contract violation") {
    SparseMatrix I3 = SparseMatrix::identity(3);
    CHECK_THROWS_AS(spmv(I3, DenseVector{1.0, 2.0}), ContractViolation);
    CHECK_THROWS_AS(spmv(I3, DenseVector{1.0, 2.0}, true), ContractViolation);
}

TEST_CASE("spmv matches dense brute force on a random 50x30 matrix") {
    SparseMatrix M = ts::random_sparse(50, 30, 0.05, 11);
    ts::Dense D = ts::to_dense(M);
    DenseVector x = ts::random_vector(30, 12);
    DenseVector y = spmv(M, x);
    DenseVector yd = ts::matvec(D, x);
    for (size_t i = 0; i < y.size(); ++i)
        CHECK(y[i] == doctest::Approx(yd[i]).epsilon(1e-14));
}

TEST_CASE("transposed spmv equals spmv of the explicit transpose") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        SparseMatrix M = ts::random_sparse(40, 25, 0.08, seed);
        SparseMatrix Mt = transpose(M);
        DenseVector x = ts::random_vector(40, seed + 100);
        DenseVector a = spmv(M, x, true);
        DenseVector b = spmv(Mt, x);
        for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
    }
}

TEST_CASE("duplicate triplets are summed and explicit zeros pruned") {
    SparseMatrix M =
        SparseMatrix::from_triplets(2, 2, {{0, 0, 2.0}, {0, 0, 3.0}, {1, 1, 1.0}, {1, 1, -1.0}});
    CHECK(M.nnz() == 1);
    CHECK(M.value_at(0) == 5.0);
}

TEST_CASE("column_norms_squared") {
    CHECK(column_norms_squared(SparseMatrix::identity(2)) == DenseVector{1.0, 1.0});

    SparseMatrix col345 = SparseMatrix::from_triplets(2, 1, {{0, 0, 3.0}, {1, 0, 4.0}});
    CHECK(column_norms_squared(col345) == DenseVector{25.0});

    SparseMatrix M = ts::random_sparse(20, 10, 0.2, 5);
    ts::Dense D = ts::to_dense(M);
    DenseVector w = column_norms_squared(M);
    for (idx j = 0; j < 10; ++j) {
        double s = 0.0;
        for (size_t i = 0; i < D.size(); ++i) s += D[i][static_cast<size_t>(j)] * D[i][static_cast<size_t>(j)];
        CHECK(w[static_cast<size_t>(j)] == doctest::Approx(s).epsilon(1e-14));
    }
}

TEST_CASE("normalize_columns scales to unit norm and reports D") {
    SparseMatrix col345 = SparseMatrix::from_triplets(2, 1, {{0, 0, 3.0}, {1, 0, 4.0}});
    auto [N, D] = normalize_columns(col345);
    CHECK(N.value_at(0) == doctest::Approx(0.6));
    CHECK(N.value_at(1) == doctest::Approx(0.8));
    CHECK(D.diag[0] == doctest::Approx(0.2));

    auto [N2, D2] = normalize_columns(SparseMatrix::identity(4));
    for (double d : D2.diag) CHECK(d == doctest::Approx(1.0));
    CHECK(N2.nnz() == 4);
}

TEST_CASE("normalize_columns is idempotent and flags null columns") {
    SparseMatrix M = ts::random_sparse(30, 12, 0.3, 21, true);
    auto [N, D] = normalize_columns(M);
    DenseVector w = column_norms_squared(N);
    for (double wi : w) CHECK(std::sqrt(wi) == doctest::Approx(1.0).epsilon(1e-15));
    for (double v : N.values()) CHECK(std::fabs(v) <= 1.0 + 1e-15);
    auto [N3, D3] = normalize_columns(N);
    for (double d : D3.diag) CHECK(d == doctest::Approx(1.0).epsilon(1e-15));

    SparseMatrix withnull = SparseMatrix::from_triplets(2, 3, {{0, 0, 1.0}, {1, 2, 1.0}});
    CHECK_THROWS_AS(normalize_columns(withnull), NullColumnError);
    try {
        normalize_columns(withnull);
    } catch (const NullColumnError& e) {
        CHECK(e.column == 1);
    }
}

TEST_CASE("detect_dense_rows threshold rule") {
    // max row count 1 out of 100 columns = 0.01 < 0.05
    std::vector<Triplet> trips;
    for (idx i = 0; i < 10; ++i) trips.push_back({i, i * 7 % 100, 1.0});
    SparseMatrix sparse_only = SparseMatrix::from_triplets(10, 100, trips);
    CHECK(detect_dense_rows(sparse_only, 0.05).empty());

    trips.clear();
    for (idx j = 0; j < 10; ++j) trips.push_back({4, j, 1.0});  // one full row
    trips.push_back({1, 0, 1.0});
    SparseMatrix one_full = SparseMatrix::from_triplets(10, 10, trips);
    auto rows = detect_dense_rows(one_full, 0.5);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0] == 4);

    CHECK_THROWS_AS(detect_dense_rows(one_full, 0.0), ContractViolation);
    CHECK_THROWS_AS(detect_dense_rows(one_full, 1.5), ContractViolation);
}

TEST_CASE("detect_dense_rows equals brute-force row filter on random pattern") {
    SparseMatrix M = ts::random_sparse(40, 30, 0.12, 31);
    double density = 0.15;
    auto got = detect_dense_rows(M, density);
    auto counts = row_nonzero_counts(M);
    std::vector<idx> expect;
    for (idx i = 0; i < 40; ++i)
        if (static_cast<double>(counts[static_cast<size_t>(i)]) >= density * 30.0) expect.push_back(i);
    std::sort(expect.begin(), expect.end(), [&](idx a, idx b) {
        if (counts[static_cast<size_t>(a)] != counts[static_cast<size_t>(b)])
            return counts[static_cast<size_t>(a)] > counts[static_cast<size_t>(b)];
        return a < b;
    });
    CHECK(got == expect);
}

TEST_CASE("split_rows edge cases and nnz conservation") {
    SparseMatrix M = ts::random_sparse(20, 10, 0.2, 41);
    auto [a_all, c_empty] = split_rows(M, {});
    CHECK(a_all.nnz() == M.nnz());
    CHECK(c_empty.nrows() == 0);
    CHECK(c_empty.ncols() == 10);

    std::vector<idx> all(20);
    for (idx i = 0; i < 20; ++i) all[static_cast<size_t>(i)] = i;
    auto [a_empty, c_all] = split_rows(M, all);
    CHECK(a_empty.nrows() == 0);
    CHECK(c_all.nnz() == M.nnz());

    auto [A, C] = split_rows(M, {3, 17, 5});
    CHECK(A.nnz() + C.nnz() == M.nnz());
    CHECK_THROWS_AS(split_rows(M, {20}), ContractViolation);
}

TEST_CASE("split_rows round-trip reassembly reproduces the input exactly") {
    SparseMatrix M = ts::random_sparse(25, 15, 0.15, 51);
    std::vector<idx> picked = {9, 2, 14, 0};
    auto [A, C] = split_rows(M, picked);
    // rebuild by scattering rows back to their original positions
    std::vector<char> in_c(25, 0);
    for (idx r : picked) in_c[static_cast<size_t>(r)] = 1;
    std::vector<idx> a_rows;
    for (idx i = 0; i < 25; ++i)
        if (!in_c[static_cast<size_t>(i)]) a_rows.push_back(i);
    std::vector<Triplet> trips;
    for (idx j = 0; j < A.ncols(); ++j)
        for (idx k = A.col_begin(j); k < A.col_end(j); ++k)
            trips.push_back({a_rows[static_cast<size_t>(A.row_at(k))], j, A.value_at(k)});
    for (idx j = 0; j < C.ncols(); ++j)
        for (idx k = C.col_begin(j); k < C.col_end(j); ++k)
            trips.push_back({picked[static_cast<size_t>(C.row_at(k))], j, C.value_at(k)});
    SparseMatrix R = SparseMatrix::from_triplets(25, 15, trips);
    REQUIRE(R.nnz() == M.nnz());
    CHECK(R.col_ptr() == M.col_ptr());
    CHECK(R.row_idx() == M.row_idx());
    CHECK(R.values() == M.values());
}

TEST_CASE("drop_null_columns") {
    SparseMatrix M = ts::random_sparse(10, 8, 0.3, 61, true);
    auto [kept, removed] = drop_null_columns(M);
    CHECK(removed.empty());
    CHECK(kept.nnz() == M.nnz());

    SparseMatrix withnull = SparseMatrix::from_triplets(3, 3, {{0, 0, 1.0}, {2, 2, 2.0}});
    auto [kept2, removed2] = drop_null_columns(withnull);
    CHECK(kept2.ncols() == 2);
    REQUIRE(removed2.size() == 1);
    CHECK(removed2[0] == 1);
}

TEST_CASE("multiply matches dense brute force") {
    SparseMatrix A = ts::random_sparse(18, 12, 0.2, 71);
    SparseMatrix B = ts::random_sparse(12, 9, 0.2, 72);
    SparseMatrix C = multiply(A, B);
    ts::Dense Cd = ts::matmat(ts::to_dense(A), ts::to_dense(B));
    ts::Dense Cg = ts::to_dense(C);
    for (size_t i = 0; i < Cd.size(); ++i)
        for (size_t j = 0; j < Cd[i].size(); ++j)
            CHECK(Cg[i][j] == doctest::Approx(Cd[i][j]).epsilon(1e-13));
}

TEST_CASE("vstack stacks rows in order") {
    SparseMatrix A = ts::random_sparse(5, 4, 0.4, 81);
    SparseMatrix B = ts::random_sparse(3, 4, 0.4, 82);
    SparseMatrix S = vstack(A, B);
    CHECK(S.nrows() == 8);
    CHECK(S.nnz() == A.nnz() + B.nnz());
    ts::Dense Ad = ts::to_dense(A), Bd = ts::to_dense(B), Sd = ts::to_dense(S);
    for (size_t j = 0; j < 4; ++j) {
        for (size_t i = 0; i < 5; ++i) CHECK(Sd[i][j] == Ad[i][j]);
        for (size_t i = 0; i < 3; ++i) CHECK(Sd[5 + i][j] == Bd[i][j]);
    }
}

TEST_CASE("permutation gather/scatter invert each other") {
    Permutation perm({2, 0, 3, 1});
    CHECK(perm.is_valid());
    DenseVector v = {10.0, 11.0, 12.0, 13.0};
    CHECK(perm.scatter(perm.gather(v)) == v);
    CHECK(perm.gather(perm.scatter(v)) == v);
    Permutation inv = perm.inverse();
    CHECK(inv.gather(perm.gather(v)) == v);
    CHECK_FALSE(Permutation({0, 0, 1}).is_valid());
}
