#include "dpcmerge/geometry.hpp"

#include <doctest.h>

#include <numbers>

using namespace dpcmerge;
using doctest::Approx;

namespace {
RoadNetwork net30() {
    RoadNetwork n;
    n.merge_angle_rad = std::numbers::pi / 6.0;
    return n;
}
}  // namespace

TEST_CASE("to_plane: merge point is the origin") {
    const PlanarState p = to_plane({Lane::Highway, 0.0}, 20.0, net30());
    CHECK(p.position.norm() == 0.0);
    CHECK(p.velocity.x() == Approx(20.0));
    CHECK(p.velocity.y() == Approx(0.0));
}

TEST_CASE("to_plane: merge lane upstream") {
    const PlanarState p = to_plane({Lane::Merge, -100.0}, 20.0, net30());
    CHECK(p.position.x() == Approx(-86.6025).epsilon(1e-5));
    CHECK(p.position.y() == Approx(-50.0));
    CHECK(p.velocity.x() == Approx(17.3205).epsilon(1e-5));
    CHECK(p.velocity.y() == Approx(10.0));
}

TEST_CASE("to_plane: upstream highway lies on the x axis") {
    const PlanarState p = to_plane({Lane::Highway, -50.0}, 25.0, net30());
    CHECK(p.position.x() == Approx(-50.0));
    CHECK(p.position.y() == 0.0);
    CHECK(p.velocity.x() == Approx(25.0));
}

TEST_CASE("pair_separation") {
    const RoadNetwork n = net30();
    SUBCASE("self difference") {
        const PairSeparation d = pair_separation({Lane::Merge, -40.0}, {Lane::Merge, -40.0}, 21.0, 21.0, n);
        CHECK(d.xi.norm() == 0.0);
        CHECK(d.v_rel.norm() == 0.0);
    }
    SUBCASE("same lane") {
        const PairSeparation d = pair_separation({Lane::Highway, -10.0}, {Lane::Highway, -40.0}, 20.0, 20.0, n);
        CHECK(d.xi.x() == Approx(30.0));
        CHECK(d.xi.y() == Approx(0.0));
        CHECK(d.v_rel.norm() == Approx(0.0));
    }
    SUBCASE("across lanes at equal distance") {
        const PairSeparation d = pair_separation({Lane::Highway, -10.0}, {Lane::Merge, -10.0}, 20.0, 20.0, n);
        CHECK(d.xi.x() == Approx(-1.3397).epsilon(1e-4));
        CHECK(d.xi.y() == Approx(5.0));
        CHECK(d.v_rel.x() == Approx(2.6795).epsilon(1e-4));
        CHECK(d.v_rel.y() == Approx(-10.0));
    }
}

TEST_CASE("merge heading switches to the highway at the merge point") {
    const RoadNetwork n = net30();
    CHECK(heading({Lane::Merge, -1e-9}, n).y() > 0.4);
    CHECK(heading({Lane::Highway, 5.0}, n).y() == 0.0);
}

TEST_CASE("lane names round-trip") {
    CHECK(lane_from_string(to_string(Lane::Merge)) == Lane::Merge);
    CHECK(lane_from_string(to_string(Lane::Highway)) == Lane::Highway);
    CHECK_THROWS(lane_from_string("shoulder"));
}

TEST_CASE("road validation") {
    RoadNetwork n;
    n.merge_angle_rad = 0.0;
    CHECK_THROWS(n.validate());
    n = RoadNetwork{};
    n.cz_upstream_m = -1.0;
    CHECK_THROWS(n.validate());
    CHECK_NOTHROW(RoadNetwork{}.validate());
}

TEST_CASE("positions outside the control zone are rejected") {
    CHECK_THROWS_AS(to_plane({Lane::Highway, -200.5}, 20.0, net30()), OutOfZoneError);
    CHECK_THROWS_AS(to_plane({Lane::Highway, 350.5}, 20.0, net30()), OutOfZoneError);
}
