#include "dpcmerge/rng.hpp"
#include "dpcmerge/verify/qp_oracle.hpp"

#include <sstream>

namespace dpcmerge::verify {

QpProblem random_feasible_problem(std::uint64_t seed, std::uint64_t index, int max_n,
                                  int max_rows) {
    Philox4x32 rng(seed, index);
    const auto n = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::uint64_t>(max_n)));
    const auto m = static_cast<int>(rng.uniform_int(0, static_cast<std::uint64_t>(max_rows)));
    const auto ni = static_cast<Eigen::Index>(n);

    QpProblem p = QpProblem::with_size(n);
    Eigen::VectorXd anchor(ni);
    for (Eigen::Index k = 0; k < ni; ++k) {
        p.hessian_diag(k) = rng.uniform(0.2, 5.0);
        p.linear_cost(k) = rng.uniform(-10.0, 10.0);
        anchor(k) = rng.uniform(-3.0, 3.0);
    }
    for (int r = 0; r < m; ++r) {
        Eigen::VectorXd row(ni);
        for (Eigen::Index k = 0; k < ni; ++k) row(k) = rng.uniform(-2.0, 2.0);
        // Some rows pass exactly through the anchor to exercise degenerate vertices.
        const double margin = rng.uniform01() < 0.3 ? 0.0 : rng.uniform(0.0, 2.0);
        p.add_inequality(row, row.dot(anchor) - margin);
    }
    for (Eigen::Index k = 0; k < ni; ++k) {
        const double roll = rng.uniform01();
        if (roll < 0.35) p.lower(k) = anchor(k) - rng.uniform(0.0, 3.0);
        if (roll > 0.65 || (roll > 0.2 && roll < 0.35)) p.upper(k) = anchor(k) + rng.uniform(0.0, 3.0);
    }
    return p;
}

std::string OracleSuiteReport::summary() const {
    std::ostringstream os;
    os << cases << " cases, " << mismatches << " mismatches, " << kkt_failures
       << " KKT failures, max |du| = " << max_solution_error
       << ", max KKT residual = " << max_kkt_residual;
    return os.str();
}

OracleSuiteReport run_qp_oracle_suite(std::uint64_t seed, int cases, double solution_tol,
                                      double kkt_tol) {
    OracleSuiteReport report;
    QpSolver solver;
    for (int c = 0; c < cases; ++c) {
        const QpProblem p = random_feasible_problem(seed, static_cast<std::uint64_t>(c));
        const QpSolution sol = solver.solve(p);
        const OracleResult ref = solve_by_enumeration(p);
        ++report.cases;
        if (!sol.optimal() || !ref.feasible) {
            ++report.mismatches;
            continue;
        }
        const double err = (sol.u_star - ref.u).cwiseAbs().maxCoeff();
        report.max_solution_error = std::max(report.max_solution_error, err);
        if (err > solution_tol) ++report.mismatches;
        const double kkt = kkt_residuals(p, sol).max();
        report.max_kkt_residual = std::max(report.max_kkt_residual, kkt);
        if (kkt > kkt_tol) ++report.kkt_failures;
    }
    return report;
}

}  // namespace dpcmerge::verify
