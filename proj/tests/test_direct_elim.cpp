#include <doctest.h>

#include <cmath>
#include <set>

#include "lse/direct_elim.hpp"
#include "lse/harness.hpp"
#include "test_support.hpp"

using namespace lse;
namespace ts = testsupport;

namespace {

// brute-force replay of the pivot selection: dense residual columns,
// norms recomputed from scratch each step, same candidate filter and
// tie-breaking
std::vector<idx> replay_selection(const SparseMatrix& C, const SparseMatrix& A, double tau) {
    ts::Dense cols = ts::transpose(ts::to_dense(C));  // cols[j] = column j
    idx p = C.nrows(), n = C.ncols();
    std::vector<char> in_s(static_cast<size_t>(n), 0);
    std::vector<char> occ(static_cast<size_t>(A.nrows()), 0);
    ts::Dense Ad = ts::to_dense(A);
    std::vector<idx> S;
    for (idx l = 0; l < p; ++l) {
        double wmax = 0.0;
        std::vector<double> w(static_cast<size_t>(n), 0.0);
        for (idx j = 0; j < n; ++j) {
            if (in_s[static_cast<size_t>(j)]) continue;
            for (double v : cols[static_cast<size_t>(j)]) w[static_cast<size_t>(j)] += v * v;
            wmax = std::max(wmax, w[static_cast<size_t>(j)]);
        }
        idx best = -1, best_new = A.nrows() + 1;
        for (idx j = 0; j < n; ++j) {
            if (in_s[static_cast<size_t>(j)] || w[static_cast<size_t>(j)] < tau * wmax) continue;
            idx cnt = 0;
            for (idx i = 0; i < A.nrows(); ++i)
                if (Ad[static_cast<size_t>(i)][static_cast<size_t>(j)] != 0.0 && !occ[static_cast<size_t>(i)]) ++cnt;
            if (cnt < best_new) {
                best_new = cnt;
                best = j;
            }
        }
        S.push_back(best);
        in_s[static_cast<size_t>(best)] = 1;
        for (idx i = 0; i < A.nrows(); ++i)
            if (Ad[static_cast<size_t>(i)][static_cast<size_t>(best)] != 0.0) occ[static_cast<size_t>(i)] = 1;
        // orthogonalize the remaining columns against the chosen one
        double nrm = std::sqrt(w[static_cast<size_t>(best)]);
        std::vector<double> q = cols[static_cast<size_t>(best)];
        for (double& v : q) v /= nrm;
        for (idx j = 0; j < n; ++j) {
            if (in_s[static_cast<size_t>(j)]) continue;
            double dotv = 0.0;
            for (idx i = 0; i < p; ++i) dotv += q[static_cast<size_t>(i)] * cols[static_cast<size_t>(j)][static_cast<size_t>(i)];
            for (idx i = 0; i < p; ++i) cols[static_cast<size_t>(j)][static_cast<size_t>(i)] -= dotv * q[static_cast<size_t>(i)];
        }
    }
    return S;
}

// rows of A_T holding an entry outside the pattern of A2
std::set<idx> rows_with_fill(const SparseMatrix& A_T, const SparseMatrix& A2) {
    ts::Dense A2d = ts::to_dense(A2);
    std::set<idx> rows;
    for (idx j = 0; j < A_T.ncols(); ++j)
        for (idx k = A_T.col_begin(j); k < A_T.col_end(j); ++k)
            if (A2d[static_cast<size_t>(A_T.row_at(k))][static_cast<size_t>(j)] == 0.0)
                rows.insert(A_T.row_at(k));
    return rows;
}

LseProblem fig2_style_problem() {
    // 9x10 sparse block with three pivot-friendly constraint columns
    std::vector<Triplet> ta;
    auto put = [&](idx i, idx j) { ta.push_back({i, j, 1.0 + 0.1 * static_cast<double>(i + j)}); };
    // A1 columns (0,1,2): rows {0,8}, {5}, {1}
    put(0, 0);
    put(8, 0);
    put(5, 1);
    put(1, 2);
    // A2 columns (3..9) with the scattered pattern
    put(0, 3);
    put(1, 5);
    put(1, 8);
    put(2, 4);
    put(3, 4);
    put(4, 5);
    put(4, 6);
    put(5, 4);
    put(6, 6);
    put(6, 8);
    put(7, 5);
    put(7, 6);
    put(7, 8);
    put(7, 9);
    put(8, 3);
    put(8, 7);
    LseProblem prob;
    prob.A = SparseMatrix::from_triplets(9, 10, ta);
    std::vector<Triplet> tc;
    for (idx k = 0; k < 3; ++k) {
        tc.push_back({k, k, 3.0});
        for (idx j = 3; j < 10; ++j)
            tc.push_back({k, j, 0.1 + 0.02 * static_cast<double>(k * 7 + j)});
    }
    prob.C = SparseMatrix::from_triplets(3, 10, tc);
    prob.b = ones(9);
    prob.d = ones(3);
    prob.scaling = ScalingInfo::identity(10);
    return prob;
}

}  // namespace

TEST_CASE("select_pivots with tau=1 is column-norm pivoting with occupied tie-break") {
    // two columns of equal (maximal) norm; the one whose A-column is
    // empty must win
    SparseMatrix C = SparseMatrix::from_triplets(
        2, 4, {{0, 0, 3.0}, {1, 1, 3.0}, {0, 2, 1.0}, {1, 3, 0.5}});
    SparseMatrix A = SparseMatrix::from_triplets(
        6, 4, {{0, 0, 1.0}, {1, 0, 1.0}, {2, 0, 1.0}, {3, 2, 1.0}, {4, 3, 1.0}});
    // columns 0 and 1 tie on norm (9); column 0 occupies 3 A-rows,
    // column 1 occupies none
    PivotOutcome out = select_pivots(C, A, 1.0);
    CHECK(out.S[0] == 1);
    CHECK(out.tau == 1.0);
}

TEST_CASE("select_pivots prefers the orthogonal column with an empty A column") {
    // column 2 is orthogonal to the others, same norm, and has no A
    // entries below it
    SparseMatrix C = SparseMatrix::from_triplets(
        2, 3, {{0, 0, 2.0}, {0, 1, 2.0}, {1, 2, 2.0}});
    SparseMatrix A = SparseMatrix::from_triplets(
        4, 3, {{0, 0, 1.0}, {1, 0, 1.0}, {2, 1, 1.0}});
    PivotOutcome out = select_pivots(C, A, 1.0);
    CHECK(out.S[0] == 2);
}

TEST_CASE("select_pivots agrees with the dense Gram-Schmidt replay") {
    for (std::uint64_t seed : {601u, 602u, 603u}) {
        SparseMatrix C = ts::random_sparse(5, 30, 0.3, seed, true);
        SparseMatrix A = ts::random_sparse(60, 30, 0.08, seed + 50, true);
        for (double tau : {1.0, 0.5, 0.1}) {
            PivotOutcome out = select_pivots(C, A, tau);
            std::vector<idx> expect = replay_selection(C, A, tau);
            CHECK(out.S == expect);
        }
    }
}

TEST_CASE("select_pivots occupied set is exactly the union of pivot-column rows") {
    SparseMatrix C = ts::random_sparse(4, 20, 0.3, 611, true);
    SparseMatrix A = ts::random_sparse(30, 20, 0.1, 612, true);
    PivotOutcome out = select_pivots(C, A, 0.5);
    std::set<idx> expect;
    for (idx s : out.S)
        for (idx k = A.col_begin(s); k < A.col_end(s); ++k) expect.insert(A.row_at(k));
    std::set<idx> got(out.occupied.begin(), out.occupied.end());
    CHECK(got == expect);
    CHECK(out.S.size() == 4);
    CHECK(out.P_c.is_valid());
}

TEST_CASE("select_pivots reports rank deficiency with the failing step") {
    SparseMatrix C = SparseMatrix::from_triplets(
        2, 3, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 0, 2.0}, {1, 1, 4.0}});  // rank 1
    SparseMatrix A = SparseMatrix::identity(3);
    CHECK_THROWS_AS(select_pivots(C, A, 1.0), RankDeficientError);
    CHECK_THROWS_AS(select_pivots(C, A, 0.0), ContractViolation);
}

TEST_CASE("transform with C2 = 0 leaves A2 untouched") {
    // constraints touch only the first two columns
    SparseMatrix C = SparseMatrix::from_triplets(2, 5, {{0, 0, 2.0}, {1, 1, 3.0}});
    SparseMatrix A = ts::random_sparse(8, 5, 0.3, 621, true);
    PivotOutcome piv = select_pivots(C, A, 1.0);
    DenseVector d = {4.0, 6.0};
    DenseVector b = ts::random_vector(8, 622);
    TransformedLs t = transform(A, C, piv, d, b);
    // A_T must equal A2 = A(:, rest) exactly
    SparseMatrix A2 = select_columns(A, t.rest);
    CHECK(t.A_T.col_ptr() == A2.col_ptr());
    CHECK(t.A_T.row_idx() == A2.row_idx());
    CHECK(t.A_T.values() == A2.values());
    // rhs = b - A1 C1^{-1} d with C1 diagonal
    DenseVector y1 = t.c1_factor.solve(d);
    for (size_t k = 0; k < 2; ++k)
        CHECK(y1[k] == doctest::Approx(2.0));  // 4/2 and 6/3
}

TEST_CASE("transform on the depicted 9x10 pattern respects the fill bound") {
    LseProblem prob = fig2_style_problem();
    PivotOutcome piv = select_pivots(prob.C, prob.A, 1.0);
    CHECK(piv.occupied.size() == 4);
    TransformedLs t = transform(prob.A, prob.C, piv, prob.d, prob.b);
    SparseMatrix A2 = select_columns(prob.A, t.rest);
    std::set<idx> fill = rows_with_fill(t.A_T, A2);
    CHECK(fill.size() <= piv.occupied.size());
    std::set<idx> occ(piv.occupied.begin(), piv.occupied.end());
    for (idx r : fill) CHECK(occ.count(r) == 1);
    CHECK(t.dense_row_set.size() <= piv.occupied.size());
}

TEST_CASE("transform matches the dense evaluation of A2 - A1 C1^{-1} C2") {
    SparseMatrix C = ts::random_sparse(4, 25, 0.25, 631, true);
    SparseMatrix A = ts::random_sparse(40, 25, 0.1, 632, true);
    PivotOutcome piv = select_pivots(C, A, 1.0);
    DenseVector d = ts::random_vector(4, 633);
    DenseVector b = ts::random_vector(40, 634);
    TransformedLs t = transform(A, C, piv, d, b);

    ts::Dense Cd = ts::to_dense(C), Ad = ts::to_dense(A);
    idx p = 4;
    ts::Dense C1(static_cast<size_t>(p), std::vector<double>(static_cast<size_t>(p)));
    for (idx i = 0; i < p; ++i)
        for (idx k = 0; k < p; ++k) C1[static_cast<size_t>(i)][static_cast<size_t>(k)] =
            Cd[static_cast<size_t>(i)][static_cast<size_t>(t.S[static_cast<size_t>(k)])];
    ts::Dense A_T_ref(static_cast<size_t>(A.nrows()),
                      std::vector<double>(t.rest.size(), 0.0));
    for (size_t jc = 0; jc < t.rest.size(); ++jc) {
        idx j = t.rest[jc];
        std::vector<double> c2col(static_cast<size_t>(p));
        for (idx i = 0; i < p; ++i) c2col[static_cast<size_t>(i)] = Cd[static_cast<size_t>(i)][static_cast<size_t>(j)];
        std::vector<double> ninv = ts::gauss_solve(C1, c2col);
        for (idx i = 0; i < A.nrows(); ++i) {
            double v = Ad[static_cast<size_t>(i)][static_cast<size_t>(j)];
            for (idx k = 0; k < p; ++k)
                v -= Ad[static_cast<size_t>(i)][static_cast<size_t>(t.S[static_cast<size_t>(k)])] * ninv[static_cast<size_t>(k)];
            A_T_ref[static_cast<size_t>(i)][jc] = v;
        }
    }
    ts::Dense got = ts::to_dense(t.A_T);
    double scale = ts::frob(A_T_ref);
    for (size_t i = 0; i < got.size(); ++i)
        for (size_t j = 0; j < got[i].size(); ++j)
            CHECK(got[i][j] - A_T_ref[i][j] == doctest::Approx(0.0).epsilon(1e-12).scale(scale));
}

TEST_CASE("lemma bound holds structurally on random patterns") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SparseMatrix C = ts::random_sparse(4, 20, 0.25, 700 + seed, true);
        SparseMatrix A = ts::random_sparse(30, 20, 0.12, 800 + seed, true);
        PivotOutcome piv = [&]() {
            try {
                return select_pivots(C, A, 0.3);
            } catch (const RankDeficientError&) {
                return select_pivots(C, A, 1.0);
            }
        }();
        TransformedLs t = transform(A, C, piv, ones(4), ones(30));
        SparseMatrix A2 = select_columns(A, t.rest);
        std::set<idx> fill = rows_with_fill(t.A_T, A2);
        std::set<idx> occ(piv.occupied.begin(), piv.occupied.end());
        CHECK(fill.size() <= occ.size());
        for (idx r : fill) CHECK(occ.count(r) == 1);
    }
}

TEST_CASE("solve_direct_elim with p = 0 reduces to plain least squares") {
    LseProblem prob;
    prob.A = ts::random_sparse(40, 20, 0.15, 641, true);
    prob.C = SparseMatrix(0, 20);
    prob.b = ts::random_vector(40, 642);
    prob.scaling = ScalingInfo::identity(20);
    SolveReport rep = solve_direct_elim(prob);
    DenseVector x_ref = ts::dense_ls(ts::to_dense(prob.A), prob.b);
    DenseVector diff = rep.x;
    axpy(-1.0, x_ref, diff);
    CHECK(norm2(diff) <= 1e-9 * ts::norm(x_ref));
    CHECK(rep.aux.at("ndense") == 0.0);
}

TEST_CASE("solve_direct_elim random instance against the dense KKT oracle") {
    LseProblem prob = generate_random_problem(200, 100, 5, 0.05, 1e6, 651);
    auto [x_star, lambda] = dense_kkt_oracle(prob);
    SolveReport rep = solve_direct_elim(prob);
    DenseVector diff = rep.x;
    axpy(-1.0, x_star, diff);
    CHECK(norm2(diff) <= 1e-8 * norm2(x_star));
    CHECK(rep.norm_rc <= 1e-10);
    CHECK(rep.aux.count("cond_c1_est") == 1);
}

TEST_CASE("constraint recovery stays tight whenever CG converged") {
    for (std::uint64_t seed : {661u, 662u, 663u}) {
        LseProblem prob = generate_random_problem(120, 60, 6, 0.06, 1e6, seed);
        SolveReport rep = solve_direct_elim(prob);
        double scale = prob.C.frobenius_norm() * rep.norm_x + norm2(prob.d);
        CHECK(rep.norm_rc <= 1e-9 * scale);
    }
}

TEST_CASE("smaller tau does not add dense rows on the regression seeds") {
    for (std::uint64_t seed : {671u, 672u, 673u, 674u, 675u}) {
        LseProblem prob = generate_random_problem(150, 70, 8, 0.05, 1e6, seed);
        DirectElimOptions o1;
        o1.tau = 1.0;
        DirectElimOptions o2;
        o2.tau = 0.1;
        SolveReport r1 = solve_direct_elim(prob, o1);
        SolveReport r2 = solve_direct_elim(prob, o2);
        CHECK(r2.aux.at("ndense") <= r1.aux.at("ndense"));
    }
}
