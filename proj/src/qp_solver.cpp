#include "dpcmerge/qp_solver.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dpcmerge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Relative size of the projected residual below which a new normal is taken to
// be linearly dependent on the active normals.
constexpr double kDependenceTol = 1e-10;
constexpr double kRatioTol = 1e-13;

}  // namespace

const char* to_string(QpStatus status) {
    switch (status) {
        case QpStatus::Optimal: return "optimal";
        case QpStatus::Infeasible: return "infeasible";
        case QpStatus::IterationLimit: return "iteration_limit";
    }
    return "unknown";
}

QpProblem QpProblem::with_size(std::size_t n) {
    const auto ni = static_cast<Eigen::Index>(n);
    QpProblem p;
    p.hessian_diag = Eigen::VectorXd::Ones(ni);
    p.linear_cost = Eigen::VectorXd::Zero(ni);
    p.inequality_rows.resize(0, ni);
    p.inequality_rhs.resize(0);
    p.lower = Eigen::VectorXd::Constant(ni, -kInf);
    p.upper = Eigen::VectorXd::Constant(ni, kInf);
    return p;
}

void QpProblem::add_inequality(const Eigen::Ref<const Eigen::VectorXd>& row, double rhs) {
    if (row.size() != hessian_diag.size())
        throw std::invalid_argument("inequality row has wrong length");
    const Eigen::Index m = inequality_rows.rows();
    inequality_rows.conservativeResize(m + 1, hessian_diag.size());
    inequality_rows.row(m) = row.transpose();
    inequality_rhs.conservativeResize(m + 1);
    inequality_rhs(m) = rhs;
}

void QpProblem::validate() const {
    const Eigen::Index n = hessian_diag.size();
    if (linear_cost.size() != n || lower.size() != n || upper.size() != n)
        throw std::invalid_argument("QP vector sizes disagree with the Hessian");
    if (inequality_rows.cols() != n || inequality_rows.rows() != inequality_rhs.size())
        throw std::invalid_argument("QP inequality block has inconsistent shape");
    for (Eigen::Index k = 0; k < n; ++k)
        if (!(hessian_diag(k) > 0.0) || !std::isfinite(hessian_diag(k)))
            throw std::invalid_argument("QP Hessian diagonal must be strictly positive");
    if (!linear_cost.allFinite() || !inequality_rows.allFinite() || !inequality_rhs.allFinite())
        throw std::invalid_argument("QP data must be finite");
    if (slack_weight && !(*slack_weight > 0.0))
        throw std::invalid_argument("slack weight must be positive");
}

double KktResiduals::max() const {
    return std::max({stationarity, primal, dual, complementarity});
}

KktResiduals kkt_residuals(const QpProblem& p, const QpSolution& sol) {
    const Eigen::Index n = p.hessian_diag.size();
    const Eigen::Index m = p.inequality_rows.rows();
    const bool relaxed = p.slack_weight.has_value();
    if (sol.u_star.size() != n || sol.multipliers.size() != static_cast<Eigen::Index>(p.constraint_count()) ||
        (relaxed && sol.slack_values.size() != m))
        throw std::invalid_argument("solution dimensions do not match the problem");

    const Eigen::VectorXd& u = sol.u_star;
    const Eigen::VectorXd& lam = sol.multipliers;
    KktResiduals r;

    Eigen::VectorXd grad = p.hessian_diag.cwiseProduct(u) + p.linear_cost;
    grad -= p.inequality_rows.transpose() * lam.head(m);
    for (Eigen::Index k = 0; k < n; ++k) grad(k) -= lam(m + 2 * k) - lam(m + 2 * k + 1);
    r.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;

    auto primal = [&](double slack_value) { r.primal = std::max(r.primal, -slack_value); };
    auto comp = [&](double multiplier, double slack_value) {
        r.complementarity = std::max(r.complementarity, std::abs(multiplier * slack_value));
    };

    for (Eigen::Index k = 0; k < m; ++k) {
        double s = p.inequality_rows.row(k).dot(u) - p.inequality_rhs(k);
        if (relaxed) s += sol.slack_values(k);
        primal(s);
        comp(lam(k), s);
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        if (std::isfinite(p.lower(k))) {
            primal(u(k) - p.lower(k));
            comp(lam(m + 2 * k), u(k) - p.lower(k));
        }
        if (std::isfinite(p.upper(k))) {
            primal(p.upper(k) - u(k));
            comp(lam(m + 2 * k + 1), p.upper(k) - u(k));
        }
    }
    if (relaxed) {
        for (Eigen::Index k = 0; k < m; ++k) {
            const double sigma = sol.slack_values(k);
            const double g = 2.0 * *p.slack_weight * sigma - lam(k) - lam(m + 2 * n + k);
            r.stationarity = std::max(r.stationarity, std::abs(g));
            primal(sigma);
            comp(lam(m + 2 * n + k), sigma);
        }
    }
    r.dual = lam.size() ? std::max(0.0, -lam.minCoeff()) : 0.0;
    return r;
}

QpSolver::QpSolver(QpSolverOptions options) : options_(options) {}

QpSolution QpSolver::solve(const QpProblem& p, std::span<const std::size_t> warm_start) {
    p.validate();
    const std::size_t n = p.size();
    if (n > options_.max_variables)
        throw std::invalid_argument("QP has " + std::to_string(n) + " variables, cap is " +
                                    std::to_string(options_.max_variables));

    const Eigen::Index m = p.inequality_rows.rows();
    const bool relaxed = p.slack_weight.has_value();
    const Eigen::Index ns = relaxed ? m : 0;
    const Eigen::Index ni = static_cast<Eigen::Index>(n);
    const Eigen::Index nv = ni + ns;

    Eigen::VectorXd hd(nv), cost = Eigen::VectorXd::Zero(nv);
    hd.head(ni) = p.hessian_diag;
    cost.head(ni) = p.linear_cost;
    if (relaxed) hd.tail(ns).setConstant(2.0 * *p.slack_weight);
    const Eigen::VectorXd hinv = hd.cwiseInverse();
    const Eigen::VectorXd sqrt_hinv = hinv.cwiseSqrt();

    QpSolution sol;
    sol.multipliers = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.constraint_count()));

    // Assemble unit-normalized constraints a.x >= b over (u, slack).
    const Eigen::Index cap = m + 2 * ni + ns;
    rows_.setZero(cap, nv);
    rhs_.resize(cap);
    user_index_.clear();
    row_scale_.clear();
    bool structurally_infeasible = false;
    Eigen::Index nc = 0;
    auto push = [&](std::size_t user, double scale) {
        user_index_.push_back(user);
        row_scale_.push_back(scale);
        ++nc;
    };
    for (Eigen::Index k = 0; k < m; ++k) {
        rows_.row(nc).head(ni) = p.inequality_rows.row(k);
        if (relaxed) rows_(nc, ni + k) = 1.0;
        const double norm = rows_.row(nc).norm();
        if (norm == 0.0) {
            if (p.inequality_rhs(k) > 0.0) structurally_infeasible = true;
            rows_.row(nc).setZero();
            continue;
        }
        rows_.row(nc) /= norm;
        rhs_(nc) = p.inequality_rhs(k) / norm;
        push(static_cast<std::size_t>(k), norm);
    }
    for (Eigen::Index k = 0; k < ni; ++k) {
        if (p.lower(k) > p.upper(k)) structurally_infeasible = true;
        if (std::isfinite(p.lower(k))) {
            rows_(nc, k) = 1.0;
            rhs_(nc) = p.lower(k);
            push(p.lower_bound_index(static_cast<std::size_t>(k)), 1.0);
        }
        if (std::isfinite(p.upper(k))) {
            rows_(nc, k) = -1.0;
            rhs_(nc) = -p.upper(k);
            push(p.upper_bound_index(static_cast<std::size_t>(k)), 1.0);
        }
    }
    for (Eigen::Index k = 0; k < ns; ++k) {
        rows_(nc, ni + k) = 1.0;
        rhs_(nc) = 0.0;
        push(p.slack_bound_index(static_cast<std::size_t>(k)), 1.0);
    }

    Eigen::VectorXd x = -hinv.cwiseProduct(cost);
    std::vector<Eigen::Index> active;
    std::vector<double> lam;

    auto finish = [&](QpStatus status) {
        sol.status = status;
        sol.u_star = x.head(ni);
        if (relaxed) sol.slack_values = x.tail(ns);
        for (std::size_t a = 0; a < active.size(); ++a) {
            const auto c = static_cast<std::size_t>(active[a]);
            sol.multipliers(static_cast<Eigen::Index>(user_index_[c])) = lam[a] / row_scale_[c];
            sol.active_set.push_back(user_index_[c]);
        }
        std::sort(sol.active_set.begin(), sol.active_set.end());
        return sol;
    };

    if (structurally_infeasible) return finish(QpStatus::Infeasible);

    // Columns sqrt(H^-1) a_k for the active normals, and their QR factors.
    Eigen::MatrixXd scaled(nv, 0);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr;
    auto refactor = [&] {
        scaled.resize(nv, static_cast<Eigen::Index>(active.size()));
        for (std::size_t a = 0; a < active.size(); ++a)
            scaled.col(static_cast<Eigen::Index>(a)) =
                sqrt_hinv.cwiseProduct(rows_.row(active[a]).transpose());
        if (!active.empty()) qr.compute(scaled);
    };

    // Minimiser with the active set held as equalities; returns its multipliers.
    auto equality_solve = [&](Eigen::VectorXd& x_out) -> Eigen::VectorXd {
        const auto q = static_cast<Eigen::Index>(active.size());
        x_out = -hinv.cwiseProduct(cost);
        if (q == 0) return {};
        Eigen::VectorXd b(q);
        for (Eigen::Index a = 0; a < q; ++a) b(a) = rhs_(active[static_cast<std::size_t>(a)]);
        const Eigen::VectorXd rhs = b + scaled.transpose() * sqrt_hinv.cwiseProduct(cost);
        const auto r = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();
        Eigen::VectorXd mult = r.transpose().solve(rhs);
        r.solveInPlace(mult);
        Eigen::VectorXd normal_sum = Eigen::VectorXd::Zero(nv);
        for (Eigen::Index a = 0; a < q; ++a)
            normal_sum += mult(a) * rows_.row(active[static_cast<std::size_t>(a)]).transpose();
        x_out += hinv.cwiseProduct(normal_sum);
        return mult;
    };

    // Step direction for adding constraint `pidx`: primal z and dual r.
    // Returns false when the new normal depends linearly on the active ones.
    Eigen::VectorXd z, r;
    auto direction = [&](Eigen::Index pidx) {
        const Eigen::VectorXd rhs = sqrt_hinv.cwiseProduct(rows_.row(pidx).transpose());
        Eigen::VectorXd resid = rhs;
        if (active.empty()) {
            r.resize(0);
        } else {
            r = qr.solve(rhs);
            resid -= scaled * r;
        }
        z = sqrt_hinv.cwiseProduct(resid);
        return resid.norm() > kDependenceTol * rhs.norm();
    };

    auto drop = [&](std::size_t a) {
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(a));
        lam.erase(lam.begin() + static_cast<std::ptrdiff_t>(a));
        refactor();
    };

    if (!warm_start.empty()) {
        std::vector<Eigen::Index> internal(p.constraint_count(), -1);
        for (Eigen::Index c = 0; c < nc; ++c) internal[user_index_[static_cast<std::size_t>(c)]] = c;
        for (const std::size_t w : warm_start) {
            if (w >= internal.size() || internal[w] < 0) continue;
            const Eigen::Index c = internal[w];
            if (std::find(active.begin(), active.end(), c) != active.end()) continue;
            if (!direction(c)) continue;
            active.push_back(c);
            lam.push_back(0.0);
            refactor();
        }
        // Shed constraints with negative multipliers, lowest index first, until
        // the seeded point is dual feasible.
        while (!active.empty()) {
            const Eigen::VectorXd mult = equality_solve(x);
            std::size_t worst = active.size();
            for (std::size_t a = 0; a < active.size(); ++a) {
                if (mult(static_cast<Eigen::Index>(a)) >= 0.0) continue;
                if (worst == active.size() ||
                    user_index_[static_cast<std::size_t>(active[a])] <
                        user_index_[static_cast<std::size_t>(active[worst])])
                    worst = a;
            }
            if (worst == active.size()) {
                lam.assign(mult.data(), mult.data() + mult.size());
                break;
            }
            drop(worst);
            ++sol.iterations;
        }
        if (active.empty()) x = -hinv.cwiseProduct(cost);
    }

    std::vector<char> is_active(static_cast<std::size_t>(nc), 0);
    const double tol = options_.feasibility_tol;
    while (true) {
        std::fill(is_active.begin(), is_active.end(), 0);
        for (const auto c : active) is_active[static_cast<std::size_t>(c)] = 1;
        const Eigen::VectorXd slack = rows_.topRows(nc) * x - rhs_.head(nc);
        Eigen::Index add = -1;
        double worst = -tol;
        for (Eigen::Index c = 0; c < nc; ++c) {
            if (!is_active[static_cast<std::size_t>(c)] && slack(c) < worst) {
                worst = slack(c);
                add = c;
            }
        }
        if (add < 0) break;

        double lam_add = 0.0;
        while (true) {
            if (++sol.iterations > options_.max_iterations) return finish(QpStatus::IterationLimit);
            const bool independent = direction(add);

            double t1 = kInf;
            std::size_t leaving = active.size();
            for (std::size_t a = 0; a < active.size(); ++a) {
                const double ra = r(static_cast<Eigen::Index>(a));
                if (ra <= kRatioTol) continue;
                const double ratio = lam[a] / ra;
                if (ratio < t1 ||
                    (ratio == t1 && user_index_[static_cast<std::size_t>(active[a])] <
                                        user_index_[static_cast<std::size_t>(active[leaving])])) {
                    t1 = ratio;
                    leaving = a;
                }
            }

            if (!independent) {
                if (leaving == active.size()) return finish(QpStatus::Infeasible);
                for (std::size_t a = 0; a < active.size(); ++a)
                    lam[a] = std::max(0.0, lam[a] - t1 * r(static_cast<Eigen::Index>(a)));
                lam_add += t1;
                drop(leaving);
                continue;
            }

            const double s_add = rows_.row(add).dot(x) - rhs_(add);
            const double t2 = -s_add / rows_.row(add).dot(z);
            const double t = std::min(t1, t2);
            x += t * z;
            for (std::size_t a = 0; a < active.size(); ++a)
                lam[a] = std::max(0.0, lam[a] - t * r(static_cast<Eigen::Index>(a)));
            lam_add += t;
            if (t2 <= t1) {
                active.push_back(add);
                lam.push_back(lam_add);
                refactor();
                break;
            }
            drop(leaving);
        }
    }

    // Re-solve on the final active set to strip accumulated update error.
    if (!active.empty()) {
        Eigen::VectorXd polished;
        const Eigen::VectorXd mult = equality_solve(polished);
        const double scale = 1.0 + mult.cwiseAbs().maxCoeff();
        const double min_slack = (rows_.topRows(nc) * polished - rhs_.head(nc)).minCoeff();
        if (mult.minCoeff() >= -1e-12 * scale && min_slack >= -tol) {
            x = polished;
            for (std::size_t a = 0; a < active.size(); ++a)
                lam[a] = std::max(0.0, mult(static_cast<Eigen::Index>(a)));
        }
    }
    return finish(QpStatus::Optimal);
}

}  // namespace dpcmerge
