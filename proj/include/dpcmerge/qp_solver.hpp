#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace dpcmerge {

// minimize   1/2 u' diag(hessian_diag) u + linear_cost' u  [+ slack_weight * sum(slack_k^2)]
// subject to inequality_rows * u (+ slack) >= inequality_rhs,  lower <= u <= upper.
//
// When slack_weight is set every inequality row gets its own nonnegative slack.
// Infinite bounds are ignored.
struct QpProblem {
    Eigen::VectorXd hessian_diag;
    Eigen::VectorXd linear_cost;
    Eigen::MatrixXd inequality_rows;
    Eigen::VectorXd inequality_rhs;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    std::optional<double> slack_weight;

    // n variables, no rows, unit Hessian, zero cost, unbounded.
    static QpProblem with_size(std::size_t n);

    std::size_t size() const { return static_cast<std::size_t>(hessian_diag.size()); }
    std::size_t inequality_count() const {
        return static_cast<std::size_t>(inequality_rows.rows());
    }

    // Appends row . u >= rhs.
    void add_inequality(const Eigen::Ref<const Eigen::VectorXd>& row, double rhs);

    void validate() const;

    // Constraint numbering shared by QpSolution::active_set and multipliers:
    // [0, m) inequality rows, m + 2k lower bound of u_k, m + 2k + 1 upper bound,
    // m + 2n + k nonnegativity of slack k (relaxed problems only).
    std::size_t lower_bound_index(std::size_t k) const { return inequality_count() + 2 * k; }
    std::size_t upper_bound_index(std::size_t k) const { return inequality_count() + 2 * k + 1; }
    std::size_t slack_bound_index(std::size_t k) const {
        return inequality_count() + 2 * size() + k;
    }
    std::size_t constraint_count() const {
        return inequality_count() + 2 * size() + (slack_weight ? inequality_count() : 0);
    }
};

enum class QpStatus { Optimal, Infeasible, IterationLimit };

const char* to_string(QpStatus status);

struct QpSolution {
    Eigen::VectorXd u_star;
    std::vector<std::size_t> active_set;  // sorted, see QpProblem numbering
    Eigen::VectorXd slack_values;         // empty unless relaxed
    Eigen::VectorXd multipliers;          // one per constraint_count(), >= 0 at optimum
    QpStatus status = QpStatus::Infeasible;
    int iterations = 0;

    bool optimal() const { return status == QpStatus::Optimal; }
};

struct QpSolverOptions {
    std::size_t max_variables = 64;
    int max_iterations = 200;
    double feasibility_tol = 1e-9;  // on unit-normalized rows
};

struct KktResiduals {
    double stationarity = 0.0;
    double primal = 0.0;
    double dual = 0.0;
    double complementarity = 0.0;

    double max() const;
};

// Max-norm residuals of the KKT blocks of `sol` for `p`, using the stored
// multipliers. Throws std::invalid_argument on dimension mismatch.
KktResiduals kkt_residuals(const QpProblem& p, const QpSolution& sol);

// Dual active-set method (Goldfarb-Idnani) specialised to a diagonal Hessian.
// Starts from the unconstrained minimiser, adds the most violated constraint,
// and drops constraints whose multiplier would turn negative; ties always go
// to the lowest constraint index. A warm start seeds the active set; it can
// change the iteration count but not the (unique) minimiser.
//
// Holds scratch storage, so one instance must not be shared between threads.
class QpSolver {
public:
    explicit QpSolver(QpSolverOptions options = {});

    QpSolution solve(const QpProblem& p, std::span<const std::size_t> warm_start = {});

    const QpSolverOptions& options() const { return options_; }

private:
    QpSolverOptions options_;
    // Scratch reused across solves.
    Eigen::MatrixXd rows_;  // unit-normalized constraint normals, one per row
    Eigen::VectorXd rhs_;
    std::vector<std::size_t> user_index_;
    std::vector<double> row_scale_;
};

}  // namespace dpcmerge
