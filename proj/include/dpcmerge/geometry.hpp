#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dpcmerge {

using Vec2 = Eigen::Vector2d;

enum class Lane : std::uint8_t { Highway, Merge };

const char* to_string(Lane lane);
Lane lane_from_string(const std::string& name);

// Two-lane merge network with the merge point at the origin. The highway runs
// along +x; the merge road approaches from y < 0 at merge_angle_rad to it.
struct RoadNetwork {
    double merge_angle_rad = std::numbers::pi / 6.0;
    double cz_upstream_m = 200.0;
    double cz_downstream_m = 350.0;

    void validate() const;

    // Control-zone membership: s in [-cz_upstream_m, +cz_downstream_m].
    bool in_zone(double s) const { return s >= -cz_upstream_m && s <= cz_downstream_m; }

    bool operator==(const RoadNetwork&) const = default;
};

// Signed arc distance to the merge point; negative upstream. Vehicles carry
// the Merge tag only while s < 0.
struct LanePosition {
    Lane lane = Lane::Highway;
    double s = 0.0;

    bool operator==(const LanePosition&) const = default;
};

struct PlanarState {
    Vec2 position;
    Vec2 velocity;
};

struct PairSeparation {
    Vec2 xi;     // position_i - position_j
    Vec2 v_rel;  // velocity_i - velocity_j
};

class OutOfZoneError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// Unit direction of travel. The merge heading switches to the highway heading
// at s = 0 with no transition curve.
Vec2 heading(const LanePosition& p, const RoadNetwork& net);

PlanarState to_plane(const LanePosition& p, double speed, const RoadNetwork& net);

PairSeparation pair_separation(const LanePosition& pi, const LanePosition& pj, double vi,
                               double vj, const RoadNetwork& net);

}  // namespace dpcmerge
