#include "dpcmerge/tuning_analysis.hpp"

#include "dpcmerge/controllers.hpp"
#include "dpcmerge/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dpcmerge {

void TwoVehicleTuning::validate() const {
    if (!(gamma > 0.0 && gamma <= std::numbers::pi / 2)) throw std::invalid_argument("gamma must be in (0, pi/2]");
    if (!(D > 0.0)) throw std::invalid_argument("D must be positive");
    if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
    if (!(v0.minCoeff() > 0.0)) throw std::invalid_argument("desired speeds must be positive");
}

double kappa_for(double tau_f, double alpha, double mass_kg) {
    return 1.0 / (tau_f * (1.0 + alpha * mass_kg));
}

TwoVehicleTuning fleet_average_tuning(double gamma) {
    const double m_base = 2375.0 * kKgPerLb;
    TwoVehicleTuning t;
    t.gamma = gamma;
    t.v0 = {22.5, 22.5};
    t.D = 2.0 * (1.0 + 0.1) * 3.0;
    t.kappa = kappa_for(0.4, default_alpha(), 2.5 * m_base);
    return t;
}

TransformPair transform(double gamma) {
    if (!(gamma > 0.0 && gamma <= std::numbers::pi / 2))
        throw std::invalid_argument("transform needs gamma in (0, pi/2]");
    TransformPair out;
    // cos(pi/2) is 6e-17, not 0.
    const double c = gamma == std::numbers::pi / 2 ? 0.0 : std::cos(gamma);
    const double s = std::sin(gamma);
    out.T << 1.0, -c, 0.0, s;
    out.T_inv << 1.0, c / s, 0.0, 1.0 / s;
    return out;
}

MuEigenvalues mu_eigenvalues(const TwoVehicleTuning& t) {
    t.validate();
    const double k = t.kappa;
    const double root = std::sqrt(k * k / 4.0 + k * t.v0.norm() / t.D);
    return {-k / 2.0 - root, -k / 2.0 + root};
}

OpenInterval unstable_range(double v0_norm, double D) {
    if (!(v0_norm > 0.0) || !(D > 0.0)) throw std::invalid_argument("unstable_range needs positive inputs");
    return {0.0, v0_norm / D};
}

namespace {

Eigen::Matrix2d metric(double gamma) {
    const Eigen::Matrix2d T = transform(gamma).T;
    return T.transpose() * T;
}

}  // namespace

ContestedEquilibrium find_equilibrium(const TwoVehicleTuning& t) {
    t.validate();
    const Eigen::Matrix2d G = metric(t.gamma);
    // G s = -c v0 on s^T G s = D^2.
    const Eigen::Vector2d g_inv_v0 = G.ldlt().solve(t.v0);
    Eigen::Vector2d s = -g_inv_v0 * (t.D / std::sqrt(t.v0.dot(g_inv_v0)));

    // Newton on f(s) = (s^T G s - D^2, cross(G s, v0)).
    for (int it = 0; it < 20; ++it) {
        const Eigen::Vector2d gs = G * s;
        const Eigen::Vector2d f(s.dot(gs) - t.D * t.D, gs.x() * t.v0.y() - gs.y() * t.v0.x());
        if (f.cwiseAbs().maxCoeff() < 1e-14 * t.D * t.D) break;
        Eigen::Matrix2d J;
        J.row(0) = 2.0 * gs.transpose();
        J.row(1) = (G.row(0) * t.v0.y() - G.row(1) * t.v0.x());
        s -= J.partialPivLu().solve(f);
    }
    return {s, transform(t.gamma).T * s};
}

double tangential_gain(const TwoVehicleTuning& t) {
    const ContestedEquilibrium eq = find_equilibrium(t);
    const Eigen::Matrix2d G = metric(t.gamma);
    const Eigen::Vector2d gs = G * eq.s;
    const Eigen::Vector2d p = Eigen::Vector2d(-gs.y(), gs.x()).normalized();
    return t.v0.norm() * p.dot(G * p) / gs.norm();
}

MuEigenvalues mu_eigenvalues_general(const TwoVehicleTuning& t) {
    const double k = t.kappa;
    const double root = std::sqrt(k * k / 4.0 + k * tangential_gain(t));
    return {-k / 2.0 - root, -k / 2.0 + root};
}

Eigen::Vector2d ContestedLoop::control(const Eigen::Vector4d& x) const {
    const TwoVehicleTuning& t = tuning;
    const double tau = gains.tau_f;
    const double w = 1.0 / (tau * t.kappa);  // 1 + alpha m
    const Eigen::Matrix2d G = metric(t.gamma);
    const Eigen::Vector2d s = x.head<2>();
    const Eigen::Vector2d v = x.tail<2>();

    // Cost w (u - v_bar)^2 per agent; barrier row a0 + b^T u >= 0.
    const Eigen::Vector2d v_bar = (t.v0 + (w - 1.0) * v) / w;
    const double h = s.dot(G * s) - t.D * t.D;
    const double h_rate = 2.0 * s.dot(G * v);
    const Eigen::Vector2d b = (2.0 / tau) * (G * s);
    const double a0 = 2.0 * v.dot(G * v) + (gains.l1() - 1.0 / tau) * h_rate + gains.l0() * h;
    const double mu = -(a0 + b.dot(v_bar)) / b.squaredNorm();  // row held active
    return v_bar + mu * b;
}

Eigen::Vector4d ContestedLoop::rhs(const Eigen::Vector4d& x) const {
    const Eigen::Vector2d u = control(x);
    Eigen::Vector4d dx;
    dx.head<2>() = x.tail<2>();
    dx.tail<2>() = (u - x.tail<2>()) / gains.tau_f;
    return dx;
}

Eigen::Matrix4d fd_jacobian(const ContestedLoop& loop, const Eigen::Vector4d& x, double step) {
    Eigen::Matrix4d J;
    for (int k = 0; k < 4; ++k) {
        Eigen::Vector4d hi = x, lo = x;
        hi(k) += step;
        lo(k) -= step;
        J.col(k) = (loop.rhs(hi) - loop.rhs(lo)) / (2.0 * step);
    }
    return J;
}

std::vector<std::complex<double>> linearized_spectrum(const ContestedLoop& loop) {
    const ContestedEquilibrium eq = find_equilibrium(loop.tuning);
    Eigen::Vector4d x;
    x << eq.s, 0.0, 0.0;
    const Eigen::EigenSolver<Eigen::Matrix4d> es(fd_jacobian(loop, x));
    std::vector<std::complex<double>> out(es.eigenvalues().data(), es.eigenvalues().data() + 4);
    std::sort(out.begin(), out.end(), [](auto a, auto b) { return a.real() < b.real(); });
    return out;
}

std::vector<KappaRow> kappa_sweep(double v0_norm, double D, const std::vector<double>& kappas) {
    std::vector<KappaRow> rows;
    for (const double k : kappas) {
        TwoVehicleTuning t;
        t.gamma = std::numbers::pi / 2;
        t.v0 = Eigen::Vector2d(v0_norm / std::sqrt(2.0), v0_norm / std::sqrt(2.0));
        t.D = D;
        t.kappa = k;
        const MuEigenvalues e = mu_eigenvalues(t);
        rows.push_back({k, e.stable, e.unstable});
    }
    return rows;
}

}  // namespace dpcmerge
