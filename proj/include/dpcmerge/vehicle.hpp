#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dpcmerge {

using VehicleId = std::uint32_t;

inline constexpr double kKgPerLb = 0.45359237;

// Road-load (coast-down) force F = C0 + C1 v + C2 v^2.
struct CoastDown {
    double c0_n = 0.0;
    double c1_nspm = 0.0;
    double c2_ns2pm2 = 0.0;

    bool operator==(const CoastDown&) const = default;
};

// Throws std::invalid_argument for v < 0.
double road_load_force(double v, const CoastDown& coast);

struct VehicleParams {
    double mass_kg = 1500.0;
    double radius_m = 2.0;
    CoastDown coast;
    double desired_speed = 20.0;  // m/s

    bool operator==(const VehicleParams&) const = default;
};

// Coast-down coefficients keyed by test mass; coefficients for intermediate
// masses are linearly interpolated and clamped to the end rows outside.
class CoastDownTable {
public:
    struct Row {
        double mass_kg;
        CoastDown coast;

        bool operator==(const Row&) const = default;
    };

    explicit CoastDownTable(std::vector<Row> rows);

    // Representative Mirage-class to Silverado-EV-class fleet (same values as
    // data/coastdown.csv).
    static const CoastDownTable& builtin();

    // CSV with header `mass_kg,c0_n,c1_nspm,c2_ns2pm2`.
    static CoastDownTable parse_csv(std::istream& in);
    static CoastDownTable load_csv(const std::string& path);

    CoastDown at_mass(double mass_kg) const;
    const std::vector<Row>& rows() const { return rows_; }

private:
    std::vector<Row> rows_;
};

}  // namespace dpcmerge
