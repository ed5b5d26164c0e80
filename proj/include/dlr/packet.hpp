#ifndef DLR_PACKET_HPP
#define DLR_PACKET_HPP

#include <optional>
#include <string>

#include "dlr/fleet.hpp"
#include "dlr/pwl.hpp"

namespace dlr {

// The tradable flexibility product: discharge capacity, recharge energy (loss)
// and minimum recovery time, the latter two parameterized by the minimum
// discharge time x*.
struct DlrPacket {
    EpCurve discharge;
    MonotoneCurve loss;
    MonotoneCurve recovery;
    int n_devices = 0;
    std::optional<double> max_completion_h; // reserved, no semantics attached

    void validate() const;
};

DlrPacket packet_from_device(const Device& device);
DlrPacket packet_from_fleet(const FleetState& fleet);

// Discharge curves add by segment merge, losses pointwise, recovery times by
// pointwise max. Commutative and associative.
DlrPacket aggregate_packets(const DlrPacket& a, const DlrPacket& b);

// A committed discharge energy with its derived truncation level and the
// two-parameter recharge virtual battery.
struct Reservation {
    double ed_mwh = 0.0;
    double x_star_h = 0.0;
    double er_mwh = 0.0;
    double y_star_h = 0.0;
    EpCurve truncated_capacity;

    // Maximum admissible recharge power, er / y*.
    double recharge_power_bound_mw() const;
};

// Converts a reserved discharge energy into the truncation level x*, the
// recharge requirement and the truncated capacity curve.
Reservation reserve(const DlrPacket& packet, double ed_mwh);

struct VirtualBattery {
    double p_max_mw = 0.0;
    double e_mwh = 0.0;
};

// The recharge phase seen as a single virtual battery: energy er at a maximum
// power rating er / y*.
VirtualBattery recharge_virtual_battery(const Reservation& r);

// Partial utilisation, option taken between discharge and recharge: lower the
// recharge energy while keeping the (now conservative) rate bound's y*.
Reservation with_reduced_recharge(const Reservation& r, double er_mwh);

// Partial utilisation, option taken before delivery: shrink the reserved
// energy and recompute the reservation.
Reservation reduce_reservation(const DlrPacket& packet, const Reservation& r, double ed_mwh);

struct Admissibility {
    bool admissible = false;
    std::string violated_clause; // empty when admissible

    explicit operator bool() const { return admissible; }
};

// A cycle is admissible iff the discharge part is dominated by the truncated
// capacity, its energy equals ed, the recharge energy equals er and every
// recharge level respects the er/y* rate bound.
Admissibility check_cycle_admissible(const Reservation& r, const StaircaseSignal& signal);

} // namespace dlr

#endif
