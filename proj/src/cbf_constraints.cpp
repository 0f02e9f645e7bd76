#include "dpcmerge/cbf_constraints.hpp"

#include <stdexcept>

namespace dpcmerge {

void BarrierGains::validate() const {
    if (!(lambda1 > 0.0) || !(lambda2 > 0.0)) throw std::invalid_argument("barrier roots must be positive");
    if (!(beta >= 0.0)) throw std::invalid_argument("barrier margin must be nonnegative");
    if (!(tau_f > 0.0)) throw std::invalid_argument("filter time constant must be positive");
}

double barrier_value(const Vec2& xi, double r_i, double r_j, double beta) {
    const double reach = (1.0 + beta) * (r_i + r_j);
    return xi.squaredNorm() - reach * reach;
}

CbfRow constraint_row(const Vec2& xi, const Vec2& v_rel, double h, const BarrierGains& gains) {
    CbfRow row;
    row.A = 2.0 * v_rel.squaredNorm() + 2.0 * xi.dot(v_rel) * (gains.l1() - 1.0 / gains.tau_f) +
            gains.l0() * h;
    row.B = (2.0 / gains.tau_f) * xi;
    return row;
}

CbfRow double_integrator_row(const Vec2& xi, const Vec2& v_rel, double h, const BarrierGains& gains) {
    CbfRow row;
    row.A = 2.0 * v_rel.squaredNorm() + 2.0 * xi.dot(v_rel) * gains.l1() + gains.l0() * h;
    row.B = 2.0 * xi;
    return row;
}

ControlBounds box_rows(double v, double tau_f, AccelLimits limits) {
    if (limits.min > limits.max) throw std::invalid_argument("acceleration limits out of order");
    return {v + tau_f * limits.min, v + tau_f * limits.max};
}

std::vector<ConstraintRow> pairwise_rows(std::span<const AgentKinematics> agents,
                                         const RoadNetwork& net, const BarrierGains& gains) {
    const std::size_t n = agents.size();
    std::vector<PlanarState> planar;
    std::vector<Vec2> dirs;
    planar.reserve(n);
    dirs.reserve(n);
    for (const auto& a : agents) {
        planar.push_back(to_plane(a.position, a.speed, net));
        dirs.push_back(heading(a.position, net));
    }

    std::vector<ConstraintRow> rows;
    rows.reserve(n * (n - (n > 0 ? 1 : 0)) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const Vec2 xi = planar[i].position - planar[j].position;
            const Vec2 v_rel = planar[i].velocity - planar[j].velocity;
            ConstraintRow r;
            r.i = i;
            r.j = j;
            r.h = barrier_value(xi, agents[i].radius, agents[j].radius, gains.beta);
            r.h0 = barrier_value(xi, agents[i].radius, agents[j].radius, 0.0);
            const CbfRow planar_row = constraint_row(xi, v_rel, r.h, gains);
            r.A = planar_row.A;
            r.B = planar_row.B;
            r.coeff_i = r.B.dot(dirs[i]);
            r.coeff_j = -r.B.dot(dirs[j]);
            rows.push_back(r);
        }
    }
    return rows;
}

bool in_admissible_set(double h, double h_rate, const BarrierGains& gains) {
    return h > 0.0 && gains.lambda1 * h + h_rate >= 0.0;
}

}  // namespace dpcmerge
