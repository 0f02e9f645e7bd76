#pragma once

#include "dpcmerge/qp_solver.hpp"

#include <cstdint>
#include <string>

namespace dpcmerge::verify {

struct OracleResult {
    bool feasible = false;
    Eigen::VectorXd u;
    double objective = 0.0;
};

// Reference minimiser for small hard-constrained problems: enumerates every
// subset of constraints (rows and finite bounds) of size <= n, solves each
// equality-constrained subproblem through its full KKT system, and keeps the
// feasible candidate of least objective. Exponential; meant for n <= 4.
OracleResult solve_by_enumeration(const QpProblem& p, double feasibility_tol = 1e-9);

// Random strictly convex, feasible-by-construction test problem with
// n in [1, max_n] and at most max_rows inequality rows.
QpProblem random_feasible_problem(std::uint64_t seed, std::uint64_t index, int max_n = 4,
                                  int max_rows = 6);

struct OracleSuiteReport {
    int cases = 0;
    int mismatches = 0;          // |u_solver - u_oracle| above tolerance or status disagreement
    int kkt_failures = 0;        // optimal results whose KKT residual exceeds tolerance
    double max_solution_error = 0.0;
    double max_kkt_residual = 0.0;

    bool passed() const { return cases > 0 && mismatches == 0 && kkt_failures == 0; }
    std::string summary() const;
};

OracleSuiteReport run_qp_oracle_suite(std::uint64_t seed, int cases, double solution_tol = 1e-7,
                                      double kkt_tol = 1e-8);

}  // namespace dpcmerge::verify
