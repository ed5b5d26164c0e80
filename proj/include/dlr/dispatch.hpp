#ifndef DLR_DISPATCH_HPP
#define DLR_DISPATCH_HPP

#include <span>
#include <vector>

#include "dlr/fleet.hpp"
#include "dlr/packet.hpp"

namespace dlr {

enum class DispatchMode { discharge, recharge };

const char* dispatch_mode_name(DispatchMode mode);

// One executed step: the broadcast target level (time-to-go for discharge,
// time-to-charge for recharge) and the per-device inputs it induced.
struct DispatchStep {
    DispatchMode mode = DispatchMode::discharge;
    double target_level_h = 0.0;
    std::vector<double> u_mw;
    double request_mw = 0.0;
    double delivered_mw = 0.0;
};

struct SimulationLog {
    std::vector<DispatchStep> steps;
    std::vector<std::vector<double>> states_h;  // real time-to-go after each step
    std::vector<double> initial_states_h;
    std::vector<double> final_virtual_states_h; // truncated coordinates
    double x_star_h = 0.0;
    double total_discharged_mwh = 0.0;
    double total_recharged_mwh = 0.0;
};

// Target level z with sum_i powers_i * clamp(states_i - z, 0, dt) = energy.
// The left side is piecewise linear and non-increasing in z; the solution is
// found by interpolating on the first strictly bracketing breakpoint interval,
// which makes the broadcast deterministic when the equation has an interval
// of solutions. Throws InfeasibleStep when energy exceeds the step capability.
double water_fill_level(std::span<const double> states, std::span<const double> powers,
                        double energy_mwh, double dt_h);

// Per-device response to a broadcast level: power * clamp((state - level)/dt, 0, 1).
double device_response(double power_mw, double state_h, double level_h, double dt_h);

// Broadcast discharge target for a constant request p_discharge_mw over dt_h.
double solve_z_hat(const FleetState& fleet, double p_discharge_mw, double dt_h);

// Broadcast recharge target in time-to-charge coordinates for a (non-positive)
// constant request p_recharge_mw over dt_h.
double solve_y_hat(const FleetState& fleet, double p_recharge_mw, double dt_h);

// Executes a reserved discharge-then-recharge cycle. Dispatch operates on the
// truncated (virtual) states x~ = min(x, x*) while the real states follow the
// same inputs; the recharge phase refills exactly the virtual depletion.
SimulationLog simulate_cycle(const FleetState& fleet, const Reservation& reservation,
                             const StaircaseSignal& signal);

} // namespace dlr

#endif
