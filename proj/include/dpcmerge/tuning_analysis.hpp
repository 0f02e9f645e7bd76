#pragma once

#include "dpcmerge/cbf_constraints.hpp"

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace dpcmerge {

// Two equal-size agents contesting the merge point.
struct TwoVehicleTuning {
    double gamma = 0.0;              // merge angle, rad
    Eigen::Vector2d v0{0.0, 0.0};    // desired speeds (highway, merge), m/s
    double D = 0.0;                  // 2 (1 + beta) r, m
    double kappa = 0.0;              // 1 / (tau_f (1 + alpha m)), 1/s

    void validate() const;  // throws std::invalid_argument
};

double kappa_for(double tau_f, double alpha, double mass_kg);

// Fleet midpoints: r = 3 m, both desired speeds 22.5 m/s, beta = 0.1, and
// kappa from the default alpha at the mean mass.
TwoVehicleTuning fleet_average_tuning(double gamma);

struct TransformPair {
    Eigen::Matrix2d T;
    Eigen::Matrix2d T_inv;
};

// z = T s maps arc positions to coordinates in which |z| is the centre
// distance. T = [[1, -cos g], [0, sin g]]; g in (0, pi/2], where pi/2 gives
// the identity.
TransformPair transform(double gamma);

struct MuEigenvalues {
    double stable = 0.0;
    double unstable = 0.0;
};

// -k/2 -+ sqrt(k^2/4 + k |v0| / D).
MuEigenvalues mu_eigenvalues(const TwoVehicleTuning& t);

struct OpenInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double x) const { return lo < x && x < hi; }
};

// (0, |v0| / D).
OpenInterval unstable_range(double v0_norm, double D);

struct ContestedEquilibrium {
    Eigen::Vector2d s;  // arc positions (both negative)
    Eigen::Vector2d z;  // T s
};

// Rest point of the contested closed loop: h = 0, zero speed, and the barrier
// gradient G s (G = T^T T) anti-parallel to v0. Newton-polished.
ContestedEquilibrium find_equilibrium(const TwoVehicleTuning& t);

// Stiffness of the tangential mode at any angle:
// q = |v0| (p^T G p) / |G s_e| with p the unit tangent of h = 0 at s_e.
// Equals |v0| / D when gamma = pi/2.
double tangential_gain(const TwoVehicleTuning& t);

// -k/2 -+ sqrt(k^2/4 + k q).
MuEigenvalues mu_eigenvalues_general(const TwoVehicleTuning& t);

// Closed loop x = (s1, s2, v1, v2) under the constrained joint-QP law with
// the barrier row active, filtered-velocity actuation.
struct ContestedLoop {
    TwoVehicleTuning tuning;
    BarrierGains gains;

    Eigen::Vector2d control(const Eigen::Vector4d& x) const;
    Eigen::Vector4d rhs(const Eigen::Vector4d& x) const;
};

// Central differences on every state.
Eigen::Matrix4d fd_jacobian(const ContestedLoop& loop, const Eigen::Vector4d& x, double step = 1e-5);

// Spectrum of the finite-difference Jacobian at the equilibrium, sorted by real part.
std::vector<std::complex<double>> linearized_spectrum(const ContestedLoop& loop);

struct KappaRow {
    double kappa;
    double stable;
    double unstable;
};

std::vector<KappaRow> kappa_sweep(double v0_norm, double D, const std::vector<double>& kappas);

}  // namespace dpcmerge
