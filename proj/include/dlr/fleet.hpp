#ifndef DLR_FLEET_HPP
#define DLR_FLEET_HPP

#include <vector>

#include "dlr/pwl.hpp"

namespace dlr {

// Physical storage unit. `eta` is the round-trip efficiency measured on the
// external meter; `no_recovery` marks pure demand turn-down (infinite eta),
// which never recharges. Efficiencies above 1 model demand response with
// incomplete recovery and require the demand_response flag.
struct Device {
    double p_discharge_max_mw = 0.0;
    double p_charge_max_mw = 0.0;
    double eta = 1.0;
    bool no_recovery = false;
    bool demand_response = false;
    double e_mwh = 0.0;
    double e_max_mwh = 0.0;

    // Fully charged unit specified by its maximum time-to-go.
    static Device from_time_to_go(double p_max_mw, double x_h, double p_charge_mw, double eta,
                                  bool no_recovery = false, bool demand_response = false);

    void validate() const;
};

// Remaining full-power discharge duration, e / p_max.
double time_to_go(const Device& d);

// Remaining full-power recharge duration, (e_max - e) / (eta * p_charge).
// Zero for no-recovery units.
double time_to_charge(const Device& d);

double max_time_to_go(const Device& d);

struct FleetState {
    std::vector<Device> devices;

    void validate() const;
    double total_energy_mwh() const;
};

// Piecewise-constant power request over uniform steps; discharge positive,
// recharge negative.
struct StaircaseSignal {
    double dt_h = 1.0;
    std::vector<double> levels_mw;

    void validate() const;
    double energy_mwh() const; // signed sum
    bool is_pure_discharge() const;
};

struct RoundTripSignal {
    StaircaseSignal discharge;
    StaircaseSignal recharge; // non-positive levels
};

// Splits a discharge-then-recharge signal at the first negative level.
// Throws NotRoundTripSignal if a positive level follows a negative one.
RoundTripSignal split_round_trip(const StaircaseSignal& signal);

// Exact E-p transform of a pure-discharge staircase: the energy requested
// above each power threshold. Throws NotDischargeSignal on negative levels.
EpCurve ep_transform(const StaircaseSignal& signal);

// Discharging capacity curve: the E-p transform of the worst-case request the
// fleet can meet, one segment per distinct time-to-go.
EpCurve capacity(const FleetState& fleet);

// Capacity curve in recharging coordinates (charge powers vs time-to-charge).
// No-recovery units contribute nothing.
EpCurve recharge_capacity(const FleetState& fleet);

// A discharge request is feasible iff its E-p transform is dominated by the
// fleet capacity curve.
bool is_feasible(const FleetState& fleet, const StaircaseSignal& signal);

} // namespace dlr

#endif
