#include "dpcmerge/verify/qp_oracle.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace dpcmerge::verify {

namespace {

struct Halfspace {
    Eigen::VectorXd a;
    double b;
};

std::vector<Halfspace> collect(const QpProblem& p) {
    std::vector<Halfspace> out;
    const Eigen::Index n = p.hessian_diag.size();
    for (Eigen::Index k = 0; k < p.inequality_rows.rows(); ++k)
        out.push_back({p.inequality_rows.row(k).transpose(), p.inequality_rhs(k)});
    for (Eigen::Index k = 0; k < n; ++k) {
        if (std::isfinite(p.lower(k))) out.push_back({Eigen::VectorXd::Unit(n, k), p.lower(k)});
        if (std::isfinite(p.upper(k))) out.push_back({-Eigen::VectorXd::Unit(n, k), -p.upper(k)});
    }
    return out;
}

}  // namespace

OracleResult solve_by_enumeration(const QpProblem& p, double feasibility_tol) {
    p.validate();
    if (p.slack_weight) throw std::invalid_argument("enumeration oracle handles hard constraints only");
    const Eigen::Index n = p.hessian_diag.size();
    const std::vector<Halfspace> cons = collect(p);
    const int total = static_cast<int>(cons.size());

    OracleResult best;
    best.objective = std::numeric_limits<double>::infinity();

    std::vector<int> subset;
    auto evaluate = [&] {
        const auto q = static_cast<Eigen::Index>(subset.size());
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + q, n + q);
        Eigen::VectorXd rhs(n + q);
        kkt.topLeftCorner(n, n) = p.hessian_diag.asDiagonal();
        rhs.head(n) = -p.linear_cost;
        for (Eigen::Index j = 0; j < q; ++j) {
            const Halfspace& h = cons[static_cast<std::size_t>(subset[static_cast<std::size_t>(j)])];
            kkt.block(0, n + j, n, 1) = -h.a;
            kkt.block(n + j, 0, 1, n) = h.a.transpose();
            rhs(n + j) = h.b;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
        if (!lu.isInvertible()) return;
        const Eigen::VectorXd sol = lu.solve(rhs);
        const Eigen::VectorXd u = sol.head(n);
        for (const Halfspace& h : cons) {
            const double scale = std::max(1.0, h.a.norm());
            if (h.a.dot(u) - h.b < -feasibility_tol * scale * 10.0) return;
        }
        const double obj = 0.5 * u.dot(p.hessian_diag.cwiseProduct(u)) + p.linear_cost.dot(u);
        if (obj < best.objective) {
            best.objective = obj;
            best.u = u;
            best.feasible = true;
        }
    };

    // Depth-first walk over index combinations of size 0..n.
    auto walk = [&](auto&& self, int start) -> void {
        evaluate();
        if (static_cast<Eigen::Index>(subset.size()) == n) return;
        for (int c = start; c < total; ++c) {
            subset.push_back(c);
            self(self, c + 1);
            subset.pop_back();
        }
    };
    walk(walk, 0);
    return best;
}

}  // namespace dpcmerge::verify
