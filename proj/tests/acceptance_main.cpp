// Acceptance suite: one pass/fail line per criterion, nonzero exit if
// any non-skipped criterion fails.  Criterion 7 needs externally
// supplied SuiteSparse matrices and is skipped unless LSE_DATA_DIR is
// set.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lse/lse.hpp"

using namespace lse;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

double rel_diff(const DenseVector& a, const DenseVector& b) {
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num) / std::sqrt(den);
}

struct SuiteInstance {
    LseProblem prob;
    DenseVector x_star;
};

std::vector<SuiteInstance> build_suite() {
    std::vector<SuiteInstance> suite;
    const idx ps[3] = {2, 5, 20};
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        SuiteInstance inst;
        inst.prob = generate_random_problem(200, 100, ps[seed % 3], 0.05, 1e6, seed);
        inst.x_star = dense_kkt_oracle(inst.prob).first;
        suite.push_back(std::move(inst));
    }
    return suite;
}

Outcome criterion1(const std::vector<SuiteInstance>& suite,
                   std::vector<SolveReport>& qr_reports) {
    Outcome out;
    auto t0 = std::chrono::steady_clock::now();
    double worst_err = 0.0, worst_rc = 0.0;
    for (const auto& inst : suite) {
        SolveReport reps[4] = {solve_lagrange(inst.prob), solve_qr_update(inst.prob),
                               solve_three_block(inst.prob), solve_direct_elim(inst.prob)};
        qr_reports.push_back(reps[1]);
        for (const auto& rep : reps) {
            double err = rel_diff(rep.x, inst.x_star);
            worst_err = std::max(worst_err, err);
            worst_rc = std::max(worst_rc, rep.norm_rc);
            if (err > 1e-8 || rep.norm_rc > 1e-10) {
                out.pass = false;
                out.detail = rep.method_tag + " err=" + std::to_string(err) +
                             " rc=" + std::to_string(rep.norm_rc) + " on " + inst.prob.provenance;
                return out;
            }
        }
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > 60.0) {
        out.pass = false;
        out.detail = "runtime " + std::to_string(secs) + " s exceeds 60 s";
        return out;
    }
    std::ostringstream d;
    d << "50 instances x 4 methods, worst err " << worst_err << ", worst rc " << worst_rc << ", "
      << secs << " s";
    out.detail = d.str();
    return out;
}

Outcome criterion2(const std::vector<SuiteInstance>& suite) {
    Outcome out;
    double worst_cz = 0.0, worst_grad = 0.0, worst_rc = 0.0;
    for (const auto& inst : suite) {
        for (double theta : {1.0, 0.1}) {
            NullspaceOptions opts;
            opts.theta = theta;
            SolveReport rep = solve_nullspace(inst.prob, opts);
            double cz = rep.aux.at("cz_frob_rel");
            double grad = rep.aux.at("reduced_gradient_rel");
            worst_cz = std::max(worst_cz, cz);
            worst_grad = std::max(worst_grad, grad);
            worst_rc = std::max(worst_rc, rep.norm_rc);
            if (cz > 1e-10 || grad > 1e-9 || rep.norm_rc > 1e-6) {
                out.pass = false;
                std::ostringstream d;
                d << "theta=" << theta << " cz=" << cz << " grad=" << grad
                  << " rc=" << rep.norm_rc << " on " << inst.prob.provenance;
                out.detail = d.str();
                return out;
            }
        }
    }
    std::ostringstream d;
    d << "worst ||CZ|| ratio " << worst_cz << ", worst reduced gradient " << worst_grad
      << ", worst rc " << worst_rc;
    out.detail = d.str();
    return out;
}

Outcome criterion3() {
    Outcome out;
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng rng(9000 + seed);
        idx p = 2 + static_cast<idx>(rng.uniform_int(4));       // 2..5
        idx n = 20 + static_cast<idx>(rng.uniform_int(21));     // 20..40
        idx m = n + 10 + static_cast<idx>(rng.uniform_int(21));  // > n
        LseProblem prob;
        try {
            prob = generate_random_problem(m, n, p, 0.08, 1e8, 9500 + seed);
        } catch (const GenerationError&) {
            continue;
        }
        PivotOutcome piv;
        try {
            piv = select_pivots(prob.C, prob.A, 0.5);
        } catch (const RankDeficientError&) {
            continue;
        }
        TransformedLs t = transform(prob.A, prob.C, piv, prob.d, prob.b);
        SparseMatrix A2 = select_columns(prob.A, t.rest);
        // dense pattern of A2 for the structural comparison
        std::vector<std::vector<char>> pat(static_cast<size_t>(m),
                                           std::vector<char>(t.rest.size(), 0));
        for (idx j = 0; j < A2.ncols(); ++j)
            for (idx k = A2.col_begin(j); k < A2.col_end(j); ++k)
                pat[static_cast<size_t>(A2.row_at(k))][static_cast<size_t>(j)] = 1;
        std::set<idx> fill;
        for (idx j = 0; j < t.A_T.ncols(); ++j)
            for (idx k = t.A_T.col_begin(j); k < t.A_T.col_end(j); ++k)
                if (!pat[static_cast<size_t>(t.A_T.row_at(k))][static_cast<size_t>(j)])
                    fill.insert(t.A_T.row_at(k));
        if (fill.size() > piv.occupied.size()) {
            out.pass = false;
            out.detail = "fill rows " + std::to_string(fill.size()) + " > occupied " +
                         std::to_string(piv.occupied.size()) + " at seed " + std::to_string(seed);
            return out;
        }
        std::set<idx> occ(piv.occupied.begin(), piv.occupied.end());
        for (idx r : fill)
            if (!occ.count(r)) {
                out.pass = false;
                out.detail = "fill row outside the occupied set at seed " + std::to_string(seed);
                return out;
            }
        ++checked;
    }
    out.detail = std::to_string(checked) + " random patterns, zero violations";
    return out;
}

Outcome criterion4(const std::vector<SuiteInstance>& suite) {
    Outcome out;
    const double omegas[4] = {1e-2, 1e-3, 1e-4, 1e-5};
    for (size_t i = 0; i < 10 && i < suite.size(); ++i) {
        const LseProblem& prob = suite[i].prob;
        double prev = -1.0;
        for (double omega : omegas) {
            SolveReport rep = solve_reg_cholesky(prob, omega);
            if (prev > 0.0 && prev >= 1e-10) {  // floor behaviour permitted below 1e-10
                double factor = prev / rep.norm_rc;
                if (factor < 10.0 || factor > 1e4) {
                    out.pass = false;
                    std::ostringstream d;
                    d << "decade factor " << factor << " at omega=" << omega << " on "
                      << prob.provenance;
                    out.detail = d.str();
                    return out;
                }
            }
            prev = rep.norm_rc;
        }
        SolveReport fine = solve_reg_cholesky(prob, 1e-6);
        if (fine.norm_rc > 1e-8) {
            out.pass = false;
            out.detail = "rc(omega=1e-6) = " + std::to_string(fine.norm_rc) + " on " +
                         prob.provenance;
            return out;
        }
    }
    out.detail = "10 instances, decade factors within [10, 1e4], rc(1e-6) <= 1e-8";
    return out;
}

Outcome criterion5(const std::vector<SuiteInstance>& suite) {
    Outcome out;
    idx worst_iters = 0;
    for (const auto& inst : suite) {
        RegKrylovOptions opts;
        opts.omega = 1e-6;
        opts.quality = PrecondQuality::complete;
        opts.tol = 1e-11;
        SolveReport rep = solve_reg_krylov(inst.prob, opts);
        worst_iters = std::max(worst_iters, rep.iters);
        if (rep.iters > 3) {
            out.pass = false;
            out.detail = "complete-factor GMRES took " + std::to_string(rep.iters) +
                         " iterations on " + inst.prob.provenance;
            return out;
        }
    }
    // omega sweep with the incomplete factor on a fixed instance
    idx lo = 0, hi = 0;
    const LseProblem& fixed = suite[0].prob;
    for (double omega : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9}) {
        RegKrylovOptions opts;
        opts.omega = omega;
        opts.quality = PrecondQuality::incomplete;
        opts.tol = 1e-11;
        opts.maxit = 2000;
        SolveReport rep = solve_reg_krylov(fixed, opts);
        lo = lo == 0 ? rep.iters : std::min(lo, rep.iters);
        hi = std::max(hi, rep.iters);
    }
    double spread = static_cast<double>(hi - lo) / static_cast<double>(lo);
    if (spread > 0.2) {
        out.pass = false;
        std::ostringstream d;
        d << "incomplete-factor iteration counts vary by " << 100.0 * spread << "% (" << lo
          << ".." << hi << ")";
        out.detail = d.str();
        return out;
    }
    std::ostringstream d;
    d << "complete factor <= " << worst_iters << " iters everywhere; omega sweep " << lo << ".."
      << hi << " iters (" << 100.0 * spread << "%)";
    out.detail = d.str();
    return out;
}

Outcome criterion6(const std::vector<SuiteInstance>& suite) {
    Outcome out;
    int ordered = 0, total = 0;
    for (const auto& inst : suite) {
        RegKrylovOptions g;
        g.omega = 1e-5;
        g.quality = PrecondQuality::incomplete;
        g.tol = 1e-11;
        g.maxit = 4000;
        SolveReport rg = solve_reg_krylov(inst.prob, g);
        RegKrylovOptions mm = g;
        mm.method = KrylovMethod::minres;
        SolveReport rm = solve_reg_krylov(inst.prob, mm);
        ++total;
        if (rm.iters >= rg.iters) ++ordered;
    }
    double frac = static_cast<double>(ordered) / static_cast<double>(total);
    std::ostringstream d;
    d << "MINRES iters >= GMRES iters on " << ordered << "/" << total << " instances ("
      << 100.0 * frac << "%)";
    out.detail = d.str();
    out.pass = frac >= 0.9;
    return out;
}

Outcome criterion7() {
    Outcome out;
    const char* dir = std::getenv("LSE_DATA_DIR");
    if (dir == nullptr) {
        out.detail = "SKIP (set LSE_DATA_DIR to a directory containing deter3.mtx)";
        return out;
    }
    std::string path = std::string(dir) + "/deter3.mtx";
    std::ifstream probe(path);
    if (!probe) {
        out.detail = "SKIP (" + path + " not found)";
        return out;
    }
    SparseMatrix M = read_matrix_market(path);
    AssembleOptions opts;
    opts.mode = AssembleMode::densest;
    opts.remove = 20;
    opts.keep = 20;
    opts.source_name = "deter3";
    LseProblem prob = assemble_problem(M, opts);
    idx nnz_ext = prob.A.nnz() + prob.C.nnz();
    if (prob.m() != 21777 || prob.n() != 7647 || nnz_ext != 44547) {
        out.pass = false;
        std::ostringstream d;
        d << "protocol mismatch: m=" << prob.m() << " n=" << prob.n() << " nnz=" << nnz_ext
          << " (expected 21777/7647/44547)";
        out.detail = d.str();
        return out;
    }
    SolveReport rep = solve_qr_update(prob);
    bool rc_ok = rep.norm_rc <= 1e-9;
    bool x_ok = std::fabs(rep.norm_x - 1.589e3) <= 0.5e0;    // 3 significant digits
    bool r_ok = std::fabs(rep.norm_r - 1.220e2) <= 0.5e-1;
    out.pass = rc_ok && x_ok && r_ok;
    std::ostringstream d;
    d << "m/n/nnz reproduced; qr-update rc=" << rep.norm_rc << " |x|=" << rep.norm_x
      << " |r|=" << rep.norm_r;
    out.detail = d.str();
    return out;
}

Outcome criterion8(const std::vector<SuiteInstance>& suite,
                   const std::vector<SolveReport>& qr_reports) {
    Outcome out;
    double worst = 0.0;
    for (size_t i = 0; i < suite.size(); ++i) {
        SolveReport r5 = solve_three_block(suite[i].prob);
        double diff = rel_diff(r5.x, qr_reports[i].x);
        worst = std::max(worst, diff);
        if (diff > 1e-9) {
            std::ostringstream d;
            d << "relative gap " << diff << " on " << suite[i].prob.provenance;
            out.pass = false;
            out.detail = d.str();
            return out;
        }
    }
    std::ostringstream d;
    d << "worst relative gap " << worst;
    out.detail = d.str();
    return out;
}

}  // namespace

int main() {
    std::cout << "building the 50-instance regression suite (m=200, n=100, p in {2,5,20})...\n";
    std::vector<SuiteInstance> suite = build_suite();

    int failures = 0;
    auto report = [&](int num, const char* name, const Outcome& o) {
        bool skipped = o.detail.rfind("SKIP", 0) == 0;
        const char* verdict = skipped ? "SKIP" : (o.pass ? "PASS" : "FAIL");
        if (!skipped && !o.pass) ++failures;
        std::cout << "criterion " << num << " [" << name << "]: " << verdict << " — " << o.detail
                  << "\n";
    };

    std::vector<SolveReport> qr_reports;
    report(1, "oracle equivalence", criterion1(suite, qr_reports));
    report(2, "null-space contract", criterion2(suite));
    report(3, "fill bound", criterion3());
    report(4, "regularization scaling", criterion4(suite));
    report(5, "preconditioner limit", criterion5(suite));
    report(6, "method ordering", criterion6(suite));
    report(7, "external protocol reproduction", criterion7());
    report(8, "cross-method agreement", criterion8(suite, qr_reports));

    if (failures > 0) {
        std::cout << failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all executed criteria passed\n";
    return 0;
}
