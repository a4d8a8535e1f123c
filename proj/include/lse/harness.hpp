#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lse/augmented.hpp"
#include "lse/core_types.hpp"
#include "lse/dense_la.hpp"
#include "lse/direct_elim.hpp"
#include "lse/errors.hpp"
#include "lse/nullspace.hpp"
#include "lse/problem.hpp"
#include "lse/rng.hpp"
#include "lse/sparse_matrix.hpp"

namespace lse {

enum class AssembleMode { density, densest };
enum class TransposeRule { automatic, never, always };

struct AssembleOptions {
    AssembleMode mode = AssembleMode::density;
    double density = 0.05;  // dense-row threshold for density mode
    idx remove = 20;        // densest mode: rows stripped from the input
    idx keep = 0;           // densest mode: how many stripped rows become constraints
    TransposeRule transpose = TransposeRule::automatic;
    std::string source_name;
};

/// Prepares an LseProblem from a raw matrix: transpose to overdetermined
/// shape if required, split off the dense rows as constraints, drop
/// columns that are null in the sparse part, normalize the columns of
/// the extended matrix and set b = d = all-ones.
inline LseProblem assemble_problem(const SparseMatrix& input, const AssembleOptions& opts) {
    if (input.nnz() == 0) throw ContractViolation("assemble_problem: input matrix is empty");
    SparseMatrix M = input;
    if (opts.transpose == TransposeRule::always ||
        (opts.transpose == TransposeRule::automatic && M.nrows() < M.ncols()))
        M = transpose(M);

    std::vector<idx> crow_order;
    if (opts.mode == AssembleMode::density) {
        crow_order = detect_dense_rows(M, opts.density);
    } else {
        if (opts.remove < 0 || opts.keep < 0 || opts.keep > opts.remove)
            throw ContractViolation("assemble_problem: need 0 <= keep <= remove");
        std::vector<idx> counts = row_nonzero_counts(M);
        std::vector<idx> order(static_cast<size_t>(M.nrows()));
        for (idx i = 0; i < M.nrows(); ++i) order[static_cast<size_t>(i)] = i;
        std::sort(order.begin(), order.end(), [&](idx a, idx b) {
            if (counts[static_cast<size_t>(a)] != counts[static_cast<size_t>(b)])
                return counts[static_cast<size_t>(a)] > counts[static_cast<size_t>(b)];
            return a < b;
        });
        crow_order.assign(order.begin(),
                          order.begin() + std::min<idx>(opts.remove, M.nrows()));
    }

    auto [A0, Crem] = split_rows(M, crow_order);
    SparseMatrix C0;
    if (opts.mode == AssembleMode::density) {
        C0 = Crem;  // every detected dense row becomes a constraint
    } else {
        // keep the densest `keep` of the removed rows, discard the rest
        std::vector<idx> keep_rows(static_cast<size_t>(std::min<idx>(opts.keep, Crem.nrows())));
        for (size_t t = 0; t < keep_rows.size(); ++t) keep_rows[t] = static_cast<idx>(t);
        C0 = split_rows(Crem, keep_rows).second;
    }

    // columns null in A are removed from the whole extended matrix
    auto [A1, removed] = drop_null_columns(A0);
    SparseMatrix C1 = drop_columns(C0, removed);

    idx n = A1.ncols(), p = C1.nrows();
    if (n == 0) throw ContractViolation("assemble_problem: A is empty after cleanup");
    if (p >= n) throw ContractViolation("assemble_problem: p >= n after cleanup");

    DenseVector w = column_norms_squared(A1);
    DenseVector wc = column_norms_squared(C1);
    DenseVector dscale(static_cast<size_t>(n));
    for (idx j = 0; j < n; ++j)
        dscale[static_cast<size_t>(j)] =
            1.0 / std::sqrt(w[static_cast<size_t>(j)] + wc[static_cast<size_t>(j)]);

    LseProblem prob;
    prob.A = scale_columns(A1, dscale);
    prob.C = scale_columns(C1, dscale);
    prob.b = ones(prob.A.nrows());
    prob.d = ones(p);
    prob.scaling = ScalingInfo{std::move(dscale)};
    prob.removed_columns = removed;
    std::ostringstream prov;
    prov << (opts.source_name.empty() ? "matrix" : opts.source_name)
         << (opts.mode == AssembleMode::density ? " mode=density(" : " mode=densest(")
         << (opts.mode == AssembleMode::density ? opts.density : static_cast<double>(opts.keep))
         << ") removed_null_columns=" << removed.size();
    prob.provenance = prov.str();
    prob.validate();
    return prob;
}

/// Seeded sparse test problem: A with a unit-diagonal skeleton plus
/// random fill, C with a handful of dense-ish constraint rows.  Both
/// rank conditions are verified with a dense pivoted QR before the
/// instance is accepted; rejected draws are retried up to 10 times.
inline LseProblem generate_random_problem(idx m, idx n, idx p, double density, double cond_target,
                                          std::uint64_t seed) {
    if (!(m > n && n > p && p >= 0)) throw ContractViolation("generate_random_problem: need m > n > p >= 0");
    if (!(density > 0.0 && density <= 1.0))
        throw ContractViolation("generate_random_problem: density must lie in (0,1]");

    for (int attempt = 0; attempt < 10; ++attempt) {
        Rng rng(seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(attempt));
        std::vector<Triplet> ta;
        for (idx j = 0; j < n; ++j) {
            double v = rng.uniform(0.5, 1.5) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
            ta.push_back({j, j, v});
        }
        idx extra = static_cast<idx>(density * static_cast<double>(m) * static_cast<double>(n));
        for (idx t = 0; t < extra; ++t) {
            idx i = static_cast<idx>(rng.uniform_int(static_cast<std::uint64_t>(m)));
            idx j = static_cast<idx>(rng.uniform_int(static_cast<std::uint64_t>(n)));
            ta.push_back({i, j, rng.uniform(-1.0, 1.0)});
        }
        SparseMatrix A = SparseMatrix::from_triplets(m, n, std::move(ta));

        std::vector<Triplet> tc;
        idx row_nnz = std::max<idx>(2, static_cast<idx>(10.0 * density * static_cast<double>(n)));
        for (idx k = 0; k < p; ++k) {
            tc.push_back({k, k, rng.uniform(0.5, 1.5) * (rng.uniform() < 0.5 ? -1.0 : 1.0)});
            for (idx t = 0; t < row_nnz; ++t) {
                idx j = static_cast<idx>(rng.uniform_int(static_cast<std::uint64_t>(n)));
                tc.push_back({k, j, rng.uniform(-1.0, 1.0)});
            }
        }
        SparseMatrix C = SparseMatrix::from_triplets(p, n, std::move(tc));

        bool a_ok = true;
        for (idx j = 0; j < n && a_ok; ++j)
            if (A.col_begin(j) == A.col_end(j)) a_ok = false;
        if (!a_ok) continue;

        if (p > 0 && dense_rank(DenseMatrix::from_sparse(C)) != p) continue;
        DensePivotedQr ext_qr(DenseMatrix::from_sparse(vstack(A, C)), 1e-10);
        if (ext_qr.rank != n) continue;
        if (ext_qr.cond_estimate() > cond_target) continue;

        LseProblem prob;
        prob.A = std::move(A);
        prob.C = std::move(C);
        prob.b.resize(static_cast<size_t>(m));
        for (double& v : prob.b) v = rng.normal();
        prob.d.resize(static_cast<size_t>(p));
        for (double& v : prob.d) v = rng.normal();
        prob.scaling = ScalingInfo::identity(n);
        std::ostringstream prov;
        prov << "gen seed=" << seed << " m=" << m << " n=" << n << " p=" << p
             << " density=" << density;
        prob.provenance = prov.str();
        prob.validate();
        return prob;
    }
    throw GenerationError("generate_random_problem: rank/conditioning checks failed 10 times");
}

/// Dense solve of the KKT system [H C^T; C 0] (x, lambda) = (A^T b, d).
/// Uses a pivoted dense LU (indefinite-capable) plus one refinement
/// step; the residual of the KKT system is verified before returning.
inline std::pair<DenseVector, DenseVector> dense_kkt_oracle(const LseProblem& prob) {
    prob.validate();
    idx n = prob.n(), p = prob.p();
    if (n + p > 2000) throw ContractViolation("dense_kkt_oracle: system too large (n + p > 2000)");

    DenseMatrix K(n + p, n + p);
    DenseMatrix Ad = DenseMatrix::from_sparse(prob.A);
    for (idx i = 0; i < n; ++i)
        for (idx j = i; j < n; ++j) {
            double s = 0.0;
            for (idx r = 0; r < prob.m(); ++r) s += Ad(r, i) * Ad(r, j);
            K(i, j) = K(j, i) = s;
        }
    for (idx j = 0; j < n; ++j)
        for (idx t = prob.C.col_begin(j); t < prob.C.col_end(j); ++t) {
            idx k = prob.C.row_at(t);
            K(j, n + k) = prob.C.value_at(t);
            K(n + k, j) = prob.C.value_at(t);
        }

    DenseVector rhs = spmv(prob.A, prob.b, true);
    rhs.resize(static_cast<size_t>(n + p));
    for (idx k = 0; k < p; ++k) rhs[static_cast<size_t>(n + k)] = prob.d[static_cast<size_t>(k)];

    DenseLu lu(K);
    DenseVector sol = lu.solve(rhs);
    DenseVector resid = rhs;
    axpy(-1.0, K.mul(sol), resid);
    axpy(1.0, lu.solve(resid), sol);
    resid = rhs;
    axpy(-1.0, K.mul(sol), resid);
    double scale = K.max_abs() * norm2(sol) + norm2(rhs);
    if (norm2(resid) > 1e-10 * scale)
        throw Error("dense_kkt_oracle: KKT residual exceeds tolerance after refinement");

    DenseVector x(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(n));
    DenseVector lambda(sol.begin() + static_cast<std::ptrdiff_t>(n), sol.end());
    return {std::move(x), std::move(lambda)};
}

/// Per-method parameter bundle for run_method and the CLI.
struct MethodParams {
    double theta = 1.0;
    double tau = 1.0;
    std::optional<double> omega;  // default from default_parameters()
    std::optional<double> gamma;
    double tol = 1e-11;
    idx maxit = 0;
    NullspaceInner inner = NullspaceInner::cholesky;
    PrecondQuality quality = PrecondQuality::incomplete;
    double reg = 0.0;
};

struct RunRecord {
    std::string problem_id;
    std::string method;
    idx p = 0;
    std::map<std::string, double> params;
    SolveReport report;
    double wall_seconds = 0.0;
    std::string status = "ok";  // "ok", "non-converged", or "error: ..."
};

inline const std::vector<std::string>& method_tags() {
    static const std::vector<std::string> tags = {
        "nullspace",    "direct-elim", "lagrange",   "qr-update",      "three-block",
        "reg-cholesky", "reg-gmres",   "reg-minres", "weighted-normal"};
    return tags;
}

/// Dispatches one method on one problem, timing it and recording the
/// outcome.  Method failures land in the record's status field so batch
/// runs never abort.
inline RunRecord run_method(const LseProblem& prob, const std::string& tag,
                            const MethodParams& mp = {}) {
    bool known = false;
    for (const auto& t : method_tags()) known = known || t == tag;
    if (!known) {
        std::string msg = "unknown method tag '" + tag + "'; valid tags:";
        for (const auto& t : method_tags()) msg += " " + t;
        throw ContractViolation(msg);
    }
    auto [omega_def, gamma_def] = default_parameters();
    double omega = mp.omega.value_or(omega_def);
    double gamma = mp.gamma.value_or(gamma_def);

    RunRecord rec;
    rec.problem_id = prob.provenance;
    rec.method = tag;
    rec.p = prob.p();
    rec.params["tol"] = mp.tol;
    if (tag == "nullspace") rec.params["theta"] = mp.theta;
    if (tag == "direct-elim") rec.params["tau"] = mp.tau;
    if (tag == "reg-cholesky" || tag == "reg-gmres" || tag == "reg-minres")
        rec.params["omega"] = omega;
    if (tag == "weighted-normal") rec.params["gamma"] = gamma;

    auto t0 = std::chrono::steady_clock::now();
    try {
        if (tag == "nullspace") {
            NullspaceOptions o;
            o.theta = mp.theta;
            o.inner = mp.inner;
            o.tol = mp.tol;
            o.maxit = mp.maxit;
            rec.report = solve_nullspace(prob, o);
        } else if (tag == "direct-elim") {
            DirectElimOptions o;
            o.tau = mp.tau;
            o.tol = mp.tol;
            o.maxit = mp.maxit;
            rec.report = solve_direct_elim(prob, o);
        } else if (tag == "lagrange") {
            LagrangeOptions o;
            o.reg = mp.reg;
            rec.report = solve_lagrange(prob, o);
        } else if (tag == "qr-update") {
            rec.report = solve_qr_update(prob);
        } else if (tag == "three-block") {
            rec.report = solve_three_block(prob);
        } else if (tag == "reg-cholesky") {
            rec.report = solve_reg_cholesky(prob, omega);
        } else if (tag == "reg-gmres" || tag == "reg-minres") {
            RegKrylovOptions o;
            o.omega = omega;
            o.method = tag == "reg-gmres" ? KrylovMethod::gmres : KrylovMethod::minres;
            o.quality = mp.quality;
            o.tol = mp.tol;
            o.maxit = mp.maxit;
            rec.report = solve_reg_krylov(prob, o);
        } else {  // weighted-normal
            rec.report = solve_weighted_normal(prob, gamma);
        }
    } catch (const NonConvergenceError& e) {
        rec.status = "non-converged";
        rec.report = finalize_report(prob, e.best_iterate, tag,
                                     static_cast<idx>(e.residual_history.size()) - 1);
    } catch (const Error& e) {
        rec.status = std::string("error: ") + e.what();
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

// --- serialization -------------------------------------------------------

namespace detail {

inline nlohmann::json sparse_to_json(const SparseMatrix& M) {
    return nlohmann::json{{"nrows", M.nrows()},
                          {"ncols", M.ncols()},
                          {"col_ptr", M.col_ptr()},
                          {"row_idx", M.row_idx()},
                          {"values", M.values()}};
}

inline SparseMatrix sparse_from_json(const nlohmann::json& j) {
    return SparseMatrix::from_csc(j.at("nrows").get<idx>(), j.at("ncols").get<idx>(),
                                  j.at("col_ptr").get<std::vector<idx>>(),
                                  j.at("row_idx").get<std::vector<idx>>(),
                                  j.at("values").get<std::vector<double>>());
}

}  // namespace detail

inline void write_problem_json(const LseProblem& prob, const std::string& path) {
    nlohmann::json j{{"A", detail::sparse_to_json(prob.A)}, {"C", detail::sparse_to_json(prob.C)},
                     {"b", prob.b},                         {"d", prob.d},
                     {"scaling", prob.scaling.diag},        {"provenance", prob.provenance},
                     {"removed_columns", prob.removed_columns}};
    std::ofstream out(path);
    if (!out) throw Error("cannot open file for writing: " + path);
    out << j.dump(2) << "\n";
}

inline LseProblem read_problem_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    LseProblem prob;
    try {
        prob.A = detail::sparse_from_json(j.at("A"));
        prob.C = detail::sparse_from_json(j.at("C"));
        prob.b = j.at("b").get<DenseVector>();
        prob.d = j.at("d").get<DenseVector>();
        prob.scaling = ScalingInfo{j.at("scaling").get<DenseVector>()};
        prob.provenance = j.value("provenance", std::string{});
        prob.removed_columns = j.value("removed_columns", std::vector<idx>{});
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    prob.validate();
    return prob;
}

inline nlohmann::json record_to_json(const RunRecord& rec) {
    nlohmann::json j{{"id", rec.problem_id},
                     {"method", rec.method},
                     {"p", rec.p},
                     {"params", rec.params},
                     {"norm_x", rec.report.norm_x},
                     {"norm_r", rec.report.norm_r},
                     {"norm_rc", rec.report.norm_rc},
                     {"iters", rec.report.iters},
                     {"aux", rec.report.aux},
                     {"x", rec.report.x},
                     {"time_s", rec.wall_seconds},
                     {"status", rec.status}};
    return j;
}

inline RunRecord record_from_json(const nlohmann::json& j) {
    RunRecord rec;
    rec.problem_id = j.at("id").get<std::string>();
    rec.method = j.at("method").get<std::string>();
    rec.p = j.at("p").get<idx>();
    rec.params = j.at("params").get<std::map<std::string, double>>();
    rec.report.norm_x = j.at("norm_x").get<double>();
    rec.report.norm_r = j.at("norm_r").get<double>();
    rec.report.norm_rc = j.at("norm_rc").get<double>();
    rec.report.iters = j.at("iters").get<idx>();
    rec.report.aux = j.at("aux").get<std::map<std::string, double>>();
    rec.report.x = j.at("x").get<DenseVector>();
    rec.report.method_tag = rec.method;
    rec.wall_seconds = j.at("time_s").get<double>();
    rec.status = j.at("status").get<std::string>();
    return rec;
}

enum class ReportFormat { json, csv, table };

namespace detail {

inline std::string fmt_sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3e", v);  // 4 significant digits
    return buf;
}

inline std::string fmt_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string record_param_string(const RunRecord& rec, bool full_precision = false) {
    std::string s;
    for (const auto& [k, v] : rec.params) {
        if (k == "tol") continue;
        if (!s.empty()) s += " ";
        s += k + "=" + (full_precision ? fmt_full(v) : fmt_sci(v));
    }
    return s;
}

inline double record_extra(const RunRecord& rec) {
    auto it = rec.report.aux.find("ndense");
    if (it != rec.report.aux.end()) return it->second;
    it = rec.report.aux.find("density_reduced");
    if (it != rec.report.aux.end()) return it->second;
    return 0.0;
}

}  // namespace detail

/// Renders records as JSON (lossless), CSV (lossless values) or a
/// fixed-width table with 4 significant digits.
inline std::string emit_report(const std::vector<RunRecord>& records, ReportFormat format) {
    if (records.empty()) throw ContractViolation("emit_report: record list is empty");
    if (format == ReportFormat::json) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : records) arr.push_back(record_to_json(r));
        return arr.dump(2) + "\n";
    }
    if (format == ReportFormat::csv) {
        std::ostringstream out;
        out << "id,method,p,params,norm_x,norm_r,norm_rc,iters,extra,time_s,status\n";
        for (const auto& r : records) {
            out << '"' << r.problem_id << '"' << ',' << r.method << ',' << r.p << ',' << '"'
                << detail::record_param_string(r, true) << '"' << ',' << detail::fmt_full(r.report.norm_x)
                << ',' << detail::fmt_full(r.report.norm_r) << ','
                << detail::fmt_full(r.report.norm_rc) << ',' << r.report.iters << ','
                << detail::fmt_full(detail::record_extra(r)) << ','
                << detail::fmt_full(r.wall_seconds) << ',' << '"' << r.status << '"' << '\n';
        }
        return out.str();
    }
    std::ostringstream out;
    char line[512];
    std::snprintf(line, sizeof(line), "%-28s %-15s %4s %-24s %10s %10s %10s %6s %8s %9s %s\n",
                  "id", "method", "p", "params", "norm_x", "norm_r", "norm_rc", "iters", "extra",
                  "time_s", "status");
    out << line;
    for (const auto& r : records) {
        std::string id = r.problem_id.size() > 28 ? r.problem_id.substr(0, 28) : r.problem_id;
        std::snprintf(line, sizeof(line), "%-28s %-15s %4lld %-24s %10s %10s %10s %6lld %8s %9.3f %s\n",
                      id.c_str(), r.method.c_str(), static_cast<long long>(r.p),
                      detail::record_param_string(r).c_str(), detail::fmt_sci(r.report.norm_x).c_str(),
                      detail::fmt_sci(r.report.norm_r).c_str(),
                      detail::fmt_sci(r.report.norm_rc).c_str(),
                      static_cast<long long>(r.report.iters),
                      detail::fmt_sci(detail::record_extra(r)).c_str(), r.wall_seconds,
                      r.status.c_str());
        out << line;
    }
    return out.str();
}

inline std::vector<RunRecord> parse_report_json(const std::string& text) {
    nlohmann::json arr = nlohmann::json::parse(text);
    std::vector<RunRecord> out;
    for (const auto& j : arr) out.push_back(record_from_json(j));
    return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, idx lineno) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
        if (quoted) {
            if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw ParseError("unterminated quote in CSV", lineno);
    fields.push_back(cur);
    return fields;
}

}  // namespace detail

/// Parses the CSV emitted by emit_report.  The CSV carries the scalar
/// columns only (no solution vector or aux map); values round-trip
/// exactly thanks to the 17-digit serialization.
inline std::vector<RunRecord> parse_report_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    idx lineno = 0;
    if (!std::getline(in, line)) throw ParseError("empty CSV", 1);
    ++lineno;
    std::vector<RunRecord> out;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f = detail::split_csv_line(line, lineno);
        if (f.size() != 11) throw ParseError("expected 11 CSV fields", lineno);
        RunRecord rec;
        rec.problem_id = f[0];
        rec.method = f[1];
        try {
            rec.p = std::stoll(f[2]);
            for (std::istringstream ps(f[3]); ps;) {
                std::string kv;
                if (!(ps >> kv)) break;
                size_t eq = kv.find('=');
                if (eq != std::string::npos)
                    rec.params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
            }
            rec.report.norm_x = std::stod(f[4]);
            rec.report.norm_r = std::stod(f[5]);
            rec.report.norm_rc = std::stod(f[6]);
            rec.report.iters = std::stoll(f[7]);
            rec.report.aux["extra"] = std::stod(f[8]);
            rec.wall_seconds = std::stod(f[9]);
        } catch (const std::exception& e) {
            throw ParseError(std::string("bad CSV number: ") + e.what(), lineno);
        }
        rec.status = f[10];
        rec.report.method_tag = rec.method;
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace lse
