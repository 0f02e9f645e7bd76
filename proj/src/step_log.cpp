#include "dpcmerge/step_log.hpp"

#include <cmath>
#include <cstring>
#include <ostream>

namespace dpcmerge {

namespace {

// Bitwise comparison, so NaN placeholders compare equal across replays.
bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

}  // namespace

bool StepRecord::operator==(const StepRecord& other) const {
    return same_bits(time, other.time) && vehicles == other.vehicles &&
           same_bits(h0_min, other.h0_min) && w_hat_self == other.w_hat_self;
}

bool RunDiagnostics::operator==(const RunDiagnostics& other) const {
    // Wall-clock solve time is excluded.
    return infeasible_flags == other.infeasible_flags && collision_steps == other.collision_steps &&
           gridlock == other.gridlock && injected == other.injected && exited == other.exited &&
           same_bits(end_time, other.end_time) && merge_crossings == other.merge_crossings &&
           exit_order == other.exit_order && entry_order == other.entry_order;
}

void write_step_log_csv(std::ostream& out, const RunLog& log) {
    out << "time_s,id,lane,s_m,speed_mps,u_mps,accel_mps2,faulted,h0_min_m2\n";
    const auto old_precision = out.precision(17);
    for (const StepRecord& step : log.steps) {
        for (const VehicleRecord& v : step.vehicles) {
            out << step.time << ',' << v.id << ',' << to_string(v.lane) << ',' << v.s << ','
                << v.speed << ',' << v.u << ',' << v.accel << ',' << (v.faulted ? 1 : 0) << ',';
            if (std::isnan(step.h0_min))
                out << "nan";
            else
                out << step.h0_min;
            out << '\n';
        }
    }
    out.precision(old_precision);
}

}  // namespace dpcmerge
