#include "dpcmerge/geometry.hpp"

#include <cmath>
#include <sstream>

namespace dpcmerge {

const char* to_string(Lane lane) {
    return lane == Lane::Highway ? "highway" : "merge";
}

Lane lane_from_string(const std::string& name) {
    if (name == "highway" || name == "H") return Lane::Highway;
    if (name == "merge" || name == "M") return Lane::Merge;
    throw std::invalid_argument("unknown lane '" + name + "'");
}

void RoadNetwork::validate() const {
    if (!(merge_angle_rad > 0.0 && merge_angle_rad < std::numbers::pi / 2.0))
        throw std::invalid_argument("merge angle must lie in (0, pi/2)");
    if (!(cz_upstream_m > 0.0) || !(cz_downstream_m > 0.0))
        throw std::invalid_argument("control-zone lengths must be positive");
}

Vec2 heading(const LanePosition& p, const RoadNetwork& net) {
    if (p.lane == Lane::Merge && p.s < 0.0)
        return {std::cos(net.merge_angle_rad), std::sin(net.merge_angle_rad)};
    return {1.0, 0.0};
}

PlanarState to_plane(const LanePosition& p, double speed, const RoadNetwork& net) {
    if (!net.in_zone(p.s)) {
        std::ostringstream os;
        os << "arc position s=" << p.s << " outside control zone [" << -net.cz_upstream_m
           << ", " << net.cz_downstream_m << "]";
        throw OutOfZoneError(os.str());
    }
    const Vec2 dir = heading(p, net);
    return {p.s * dir, speed * dir};
}

PairSeparation pair_separation(const LanePosition& pi, const LanePosition& pj, double vi,
                               double vj, const RoadNetwork& net) {
    const PlanarState a = to_plane(pi, vi, net);
    const PlanarState b = to_plane(pj, vj, net);
    return {a.position - b.position, a.velocity - b.velocity};
}

}  // namespace dpcmerge
