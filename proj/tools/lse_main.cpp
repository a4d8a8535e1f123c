// Command line front end: problem assembly from Matrix Market files,
// random instance generation, the dense KKT oracle and method dispatch
// with JSON/CSV/table reporting.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lse/lse.hpp"

namespace {

int write_or_print(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return 0;
    }
    std::ofstream out(out_path);
    if (!out) {
        std::cerr << "error: cannot open " << out_path << " for writing\n";
        return 1;
    }
    out << text;
    return 0;
}

lse::ReportFormat parse_format(const std::string& f) {
    if (f == "json") return lse::ReportFormat::json;
    if (f == "csv") return lse::ReportFormat::csv;
    if (f == "table") return lse::ReportFormat::table;
    throw CLI::ValidationError("--format must be json, csv or table");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse linear least squares with linear equality constraints"};
    app.require_subcommand(1);

    // --- solve ------------------------------------------------------------
    auto* solve = app.add_subcommand("solve", "Assemble a problem and run solution methods");
    std::string matrix_path, problem_path, out_path, format = "table";
    std::string transpose = "auto", mode = "density";
    std::vector<std::string> methods;
    double density = 0.05, theta = 1.0, tau = 1.0, tol = 1e-11, reg = 0.0;
    double omega = -1.0, gamma = -1.0;
    long long remove = 20, keep = -1, maxit = 0;
    std::string inner = "cholesky", quality = "incomplete";
    solve->add_option("--matrix", matrix_path, "Matrix Market input file");
    solve->add_option("--problem", problem_path, "Problem JSON file (from 'lse gen')");
    solve->add_option("--transpose", transpose, "auto|never|always (default auto)");
    solve->add_option("--mode", mode, "density|densest: how constraint rows are chosen");
    solve->add_option("--density", density, "dense-row threshold (default 0.05)");
    solve->add_option("--remove", remove, "densest mode: rows removed (default 20)");
    solve->add_option("--keep", keep, "densest mode: removed rows kept as constraints");
    solve->add_option("--method", methods, "method tag(s); 'all' runs every method")
        ->required();
    solve->add_option("--theta", theta, "null-space pivot threshold in (0,1]");
    solve->add_option("--tau", tau, "direct elimination pivot threshold in (0,1]");
    solve->add_option("--omega", omega, "regularization parameter (default 1e-8)");
    solve->add_option("--gamma", gamma, "weighting parameter (default 1e8)");
    solve->add_option("--tol", tol, "iterative convergence tolerance (default 1e-11)");
    solve->add_option("--maxit", maxit, "iteration cap (0 = method default)");
    solve->add_option("--inner", inner, "null-space inner solver: cholesky|pcg");
    solve->add_option("--quality", quality, "Krylov preconditioner: complete|incomplete");
    solve->add_option("--reg", reg, "Lagrange-route diagonal regularization");
    solve->add_option("--out", out_path, "output file (default: stdout)");
    solve->add_option("--format", format, "json|csv|table (default table)");

    // --- gen ---------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "Generate a random problem file");
    long long gm = 0, gn = 0, gp = 0;
    double gdensity = 0.05, gcond = 1e6;
    unsigned long long gseed = 1;
    std::string gen_out;
    gen->add_option("--m", gm, "rows of A")->required();
    gen->add_option("--n", gn, "columns")->required();
    gen->add_option("--p", gp, "constraint rows")->required();
    gen->add_option("--density", gdensity, "fill density of A (default 0.05)");
    gen->add_option("--cond", gcond, "largest accepted condition estimate (default 1e6)");
    gen->add_option("--seed", gseed, "random seed (default 1)");
    gen->add_option("--out", gen_out, "output problem JSON file")->required();

    // --- oracle ------------------------------------------------------------
    auto* oracle = app.add_subcommand("oracle", "Dense KKT reference solution for a problem file");
    std::string oracle_problem, oracle_out, oracle_format = "table";
    oracle->add_option("--problem", oracle_problem, "problem JSON file")->required();
    oracle->add_option("--out", oracle_out, "output file (default: stdout)");
    oracle->add_option("--format", oracle_format, "json|csv|table");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) {
            if (matrix_path.empty() == problem_path.empty()) {
                std::cerr << "error: pass exactly one of --matrix or --problem\n";
                return 1;
            }
            lse::LseProblem prob;
            if (!matrix_path.empty()) {
                lse::AssembleOptions ao;
                ao.mode = mode == "densest" ? lse::AssembleMode::densest
                                            : lse::AssembleMode::density;
                if (mode != "density" && mode != "densest") {
                    std::cerr << "error: --mode must be density or densest\n";
                    return 1;
                }
                ao.density = density;
                ao.remove = static_cast<lse::idx>(remove);
                ao.keep = keep >= 0 ? static_cast<lse::idx>(keep) : static_cast<lse::idx>(remove);
                ao.transpose = transpose == "never"    ? lse::TransposeRule::never
                               : transpose == "always" ? lse::TransposeRule::always
                                                       : lse::TransposeRule::automatic;
                ao.source_name = matrix_path;
                prob = lse::assemble_problem(lse::read_matrix_market(matrix_path), ao);
            } else {
                prob = lse::read_problem_json(problem_path);
            }

            std::vector<std::string> tags;
            for (const auto& mtag : methods) {
                std::stringstream ss(mtag);
                std::string piece;
                while (std::getline(ss, piece, ',')) {
                    if (piece == "all") {
                        tags = lse::method_tags();
                        break;
                    }
                    if (!piece.empty()) tags.push_back(piece);
                }
            }

            lse::MethodParams mp;
            mp.theta = theta;
            mp.tau = tau;
            if (omega > 0.0) mp.omega = omega;
            if (gamma > 0.0) mp.gamma = gamma;
            mp.tol = tol;
            mp.maxit = static_cast<lse::idx>(maxit);
            mp.inner = inner == "pcg" ? lse::NullspaceInner::pcg : lse::NullspaceInner::cholesky;
            mp.quality = quality == "complete" ? lse::PrecondQuality::complete
                                               : lse::PrecondQuality::incomplete;
            mp.reg = reg;

            std::vector<lse::RunRecord> records;
            for (const auto& tag : tags) records.push_back(lse::run_method(prob, tag, mp));

            int rc = write_or_print(lse::emit_report(records, parse_format(format)), out_path);
            if (rc != 0) return rc;
            bool all_ok = true;
            for (const auto& r : records) {
                if (r.status != "ok") {
                    std::cerr << r.method << ": " << r.status << "\n";
                    all_ok = false;
                }
            }
            return all_ok ? 0 : 2;
        }

        if (gen->parsed()) {
            lse::LseProblem prob = lse::generate_random_problem(
                static_cast<lse::idx>(gm), static_cast<lse::idx>(gn), static_cast<lse::idx>(gp),
                gdensity, gcond, gseed);
            lse::write_problem_json(prob, gen_out);
            std::cout << "wrote " << gen_out << " (" << prob.provenance << ")\n";
            return 0;
        }

        if (oracle->parsed()) {
            lse::LseProblem prob = lse::read_problem_json(oracle_problem);
            auto [x, lambda] = lse::dense_kkt_oracle(prob);
            lse::RunRecord rec;
            rec.problem_id = prob.provenance;
            rec.method = "dense-kkt-oracle";
            rec.p = prob.p();
            rec.report = lse::finalize_report(prob, x, "dense-kkt-oracle");
            rec.report.multipliers = lambda;
            return write_or_print(lse::emit_report({rec}, parse_format(oracle_format)), oracle_out);
        }
    } catch (const lse::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const lse::ContractViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const lse::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
