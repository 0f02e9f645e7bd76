#pragma once

#include "dpcmerge/geometry.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace dpcmerge {

// Gains of the second-order barrier condition  h'' + l1 h' + l0 h >= 0.
struct BarrierGains {
    double lambda1 = 0.6;  // 1/s, the smaller root; bounds the admissible set
    double lambda2 = 2.0;  // 1/s
    double beta = 0.1;     // barrier radius margin
    double tau_f = 0.4;    // s, velocity filter time constant of the controller model

    double l0() const { return lambda1 * lambda2; }
    double l1() const { return lambda1 + lambda2; }
    void validate() const;

    bool operator==(const BarrierGains&) const = default;
};

struct AccelLimits {
    double min = -6.0;  // m/s^2
    double max = 5.0;   // m/s^2

    bool operator==(const AccelLimits&) const = default;
};

// h = xi'xi - ((1 + beta)(r_i + r_j))^2
double barrier_value(const Vec2& xi, double r_i, double r_j, double beta);

// Time derivative of the barrier along the relative motion, 2 xi'v_rel.
inline double barrier_rate(const Vec2& xi, const Vec2& v_rel) { return 2.0 * xi.dot(v_rel); }

// Planar form of one pairwise row: A + B . (U_i - U_j) >= 0, with U the planar
// velocity commands.
struct CbfRow {
    double A = 0.0;
    Vec2 B = Vec2::Zero();
};

// Row for the filtered-velocity controller model dv/dt = (u - v) / tau_f.
CbfRow constraint_row(const Vec2& xi, const Vec2& v_rel, double h, const BarrierGains& gains);

// Row for a pure double integrator acted on by planar accelerations:
// A = 2 v'v + 2 xi'v l1 + l0 h,  B = 2 xi'.
CbfRow double_integrator_row(const Vec2& xi, const Vec2& v_rel, double h, const BarrierGains& gains);

struct ControlBounds {
    double lower = 0.0;
    double upper = 0.0;
};

// Velocity-command bounds implied by (u - v) / tau_f in [a_min, a_max].
ControlBounds box_rows(double v, double tau_f, AccelLimits limits = {});

// One CZ agent as seen by constraint assembly.
struct AgentKinematics {
    LanePosition position;
    double speed = 0.0;
    double radius = 0.0;
};

// Pairwise row projected onto the scalar controls:
//   A + coeff_i * u_i + coeff_j * u_j >= 0,  coeff_i = B.e_i, coeff_j = -B.e_j.
struct ConstraintRow {
    std::size_t i = 0;
    std::size_t j = 0;
    double h = 0.0;
    double h0 = 0.0;  // beta = 0 value; negative means the pair is in contact
    double A = 0.0;
    Vec2 B = Vec2::Zero();
    double coeff_i = 0.0;
    double coeff_j = 0.0;
};

// Exactly one row per unordered pair (i < j), N(N-1)/2 rows in total.
std::vector<ConstraintRow> pairwise_rows(std::span<const AgentKinematics> agents,
                                         const RoadNetwork& net, const BarrierGains& gains);

// Membership test for the admissible set C1 = {h > 0, lambda1 h + h' >= 0}.
bool in_admissible_set(double h, double h_rate, const BarrierGains& gains);

}  // namespace dpcmerge
