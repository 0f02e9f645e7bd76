#include "dpcmerge/vehicle.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dpcmerge {

double road_load_force(double v, const CoastDown& coast) {
    if (v < 0.0) throw std::invalid_argument("road load is defined for v >= 0");
    return coast.c0_n + coast.c1_nspm * v + coast.c2_ns2pm2 * v * v;
}

CoastDownTable::CoastDownTable(std::vector<Row> rows) : rows_(std::move(rows)) {
    if (rows_.empty()) throw std::invalid_argument("coast-down table is empty");
    std::sort(rows_.begin(), rows_.end(),
              [](const Row& a, const Row& b) { return a.mass_kg < b.mass_kg; });
    for (std::size_t k = 0; k < rows_.size(); ++k) {
        const Row& r = rows_[k];
        if (!(r.mass_kg > 0.0)) throw std::invalid_argument("coast-down row mass must be positive");
        if (!(r.coast.c0_n > 0.0) || r.coast.c1_nspm < 0.0 || r.coast.c2_ns2pm2 < 0.0)
            throw std::invalid_argument("coast-down force must be positive for v > 0");
        if (k > 0 && r.mass_kg == rows_[k - 1].mass_kg)
            throw std::invalid_argument("duplicate mass in coast-down table");
    }
}

const CoastDownTable& CoastDownTable::builtin() {
    static const CoastDownTable table({
        {1077.29, {106.76, 1.4926, 0.38953}},
        {1474.18, {124.55, 1.9901, 0.40066}},
        {2041.17, {155.69, 2.9852, 0.57873}},
        {2948.35, {213.51, 3.9802, 0.75680}},
        {4309.15, {275.79, 4.9753, 0.86809}},
    });
    return table;
}

CoastDownTable CoastDownTable::parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("coast-down CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "mass_kg,c0_n,c1_nspm,c2_ns2pm2")
        throw std::invalid_argument("unexpected coast-down CSV header: " + line);
    std::vector<Row> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string cell;
        double v[4];
        for (double& value : v) {
            if (!std::getline(fields, cell, ','))
                throw std::invalid_argument("coast-down CSV line " + std::to_string(lineno) +
                                            ": expected 4 fields");
            try {
                std::size_t used = 0;
                value = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw std::invalid_argument("coast-down CSV line " + std::to_string(lineno) +
                                            ": bad number '" + cell + "'");
            }
        }
        rows.push_back({v[0], {v[1], v[2], v[3]}});
    }
    return CoastDownTable(std::move(rows));
}

CoastDownTable CoastDownTable::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open coast-down table " + path);
    return parse_csv(in);
}

CoastDown CoastDownTable::at_mass(double mass_kg) const {
    if (mass_kg <= rows_.front().mass_kg) return rows_.front().coast;
    if (mass_kg >= rows_.back().mass_kg) return rows_.back().coast;
    const auto hi = std::upper_bound(rows_.begin(), rows_.end(), mass_kg,
                                     [](double m, const Row& r) { return m < r.mass_kg; });
    const auto lo = hi - 1;
    const double w = (mass_kg - lo->mass_kg) / (hi->mass_kg - lo->mass_kg);
    auto lerp = [w](double a, double b) { return a + w * (b - a); };
    return {lerp(lo->coast.c0_n, hi->coast.c0_n), lerp(lo->coast.c1_nspm, hi->coast.c1_nspm),
            lerp(lo->coast.c2_ns2pm2, hi->coast.c2_ns2pm2)};
}

}  // namespace dpcmerge
