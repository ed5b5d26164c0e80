#include "dlr/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dlr {

const char* dispatch_mode_name(DispatchMode mode) {
    return mode == DispatchMode::discharge ? "discharge" : "recharge";
}

double device_response(double power_mw, double state_h, double level_h, double dt_h) {
    return power_mw * std::clamp((state_h - level_h) / dt_h, 0.0, 1.0);
}

namespace {

double step_energy(std::span<const double> states, std::span<const double> powers, double level,
                   double dt_h) {
    double total = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i)
        total += powers[i] * std::clamp(states[i] - level, 0.0, dt_h);
    return total;
}

} // namespace

double water_fill_level(std::span<const double> states, std::span<const double> powers,
                        double energy_mwh, double dt_h) {
    const double tol = tolerance();
    if (states.size() != powers.size())
        raise(ErrorCode::InvalidArgument, "state and power vectors differ in length");
    if (!(dt_h > 0.0)) raise(ErrorCode::InvalidArgument, "step length must be positive");
    if (energy_mwh < -tol) raise(ErrorCode::InvalidArgument, "step energy must be non-negative");

    const double capability = step_energy(states, powers, 0.0, dt_h);
    if (energy_mwh > capability + tol)
        raise(ErrorCode::InfeasibleStep, "request exceeds step capability");
    const double target = std::clamp(energy_mwh, 0.0, capability);

    std::vector<double> breakpoints{0.0};
    for (double s : states) {
        if (s > 0.0) breakpoints.push_back(s);
        if (s - dt_h > 0.0) breakpoints.push_back(s - dt_h);
    }
    std::sort(breakpoints.begin(), breakpoints.end());
    breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());

    std::vector<double> values(breakpoints.size());
    for (std::size_t i = 0; i < breakpoints.size(); ++i)
        values[i] = step_energy(states, powers, breakpoints[i], dt_h);

    // First interval on which the delivered energy strictly brackets the
    // target; flat stretches at the target are ruled by the interpolation
    // endpoint, keeping broadcasts deterministic.
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        if (values[i] >= target && target >= values[i + 1] && values[i] > values[i + 1]) {
            const double t = (values[i] - target) / (values[i] - values[i + 1]);
            return breakpoints[i] + t * (breakpoints[i + 1] - breakpoints[i]);
        }
    }
    return breakpoints.back();
}

double solve_z_hat(const FleetState& fleet, double p_discharge_mw, double dt_h) {
    fleet.validate();
    if (p_discharge_mw < 0.0)
        raise(ErrorCode::InvalidArgument, "discharge request must be non-negative");
    std::vector<double> states, powers;
    states.reserve(fleet.devices.size());
    powers.reserve(fleet.devices.size());
    for (const Device& d : fleet.devices) {
        states.push_back(time_to_go(d));
        powers.push_back(d.p_discharge_max_mw);
    }
    return water_fill_level(states, powers, p_discharge_mw * dt_h, dt_h);
}

double solve_y_hat(const FleetState& fleet, double p_recharge_mw, double dt_h) {
    fleet.validate();
    if (p_recharge_mw > 0.0)
        raise(ErrorCode::InvalidArgument, "recharge request must be non-positive");
    std::vector<double> states, powers;
    states.reserve(fleet.devices.size());
    powers.reserve(fleet.devices.size());
    for (const Device& d : fleet.devices) {
        states.push_back(time_to_charge(d));
        powers.push_back(d.p_charge_max_mw);
    }
    return water_fill_level(states, powers, -p_recharge_mw * dt_h, dt_h);
}

SimulationLog simulate_cycle(const FleetState& fleet, const Reservation& reservation,
                             const StaircaseSignal& signal) {
    fleet.validate();
    const double tol = tolerance();
    const double dt = signal.dt_h;
    const RoundTripSignal parts = split_round_trip(signal);

    if (std::abs(parts.discharge.energy_mwh() - reservation.ed_mwh) > tol)
        raise(ErrorCode::ReservationViolated, "discharge energy differs from reserved ed");
    if (std::abs(-parts.recharge.energy_mwh() - reservation.er_mwh) > tol)
        raise(ErrorCode::ReservationViolated, "recharge energy differs from reserved er");

    const std::size_t n = fleet.devices.size();
    std::vector<double> x(n), p_dis(n), p_chg(n), eta(n);
    std::vector<bool> no_recovery(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Device& d = fleet.devices[i];
        x[i] = time_to_go(d);
        p_dis[i] = d.p_discharge_max_mw;
        p_chg[i] = d.p_charge_max_mw;
        eta[i] = d.eta;
        no_recovery[i] = d.no_recovery;
    }

    std::vector<double> x_virtual(n), x_virtual_full(n);
    for (std::size_t i = 0; i < n; ++i) {
        x_virtual[i] = std::min(x[i], reservation.x_star_h);
        x_virtual_full[i] = x_virtual[i];
    }

    SimulationLog log;
    log.initial_states_h = x;
    log.x_star_h = reservation.x_star_h;

    std::size_t step_index = 0;
    for (double level : parts.discharge.levels_mw) {
        double z_hat = 0.0;
        try {
            z_hat = water_fill_level(x_virtual, p_dis, level * dt, dt);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::InfeasibleStep) throw;
            raise(ErrorCode::InfeasibleSignal,
                  "discharge step " + std::to_string(step_index) + " is infeasible");
        }
        DispatchStep step;
        step.mode = DispatchMode::discharge;
        step.target_level_h = z_hat;
        step.request_mw = level;
        step.u_mw.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = device_response(p_dis[i], x_virtual[i], z_hat, dt);
            step.u_mw[i] = u;
            step.delivered_mw += u;
            x_virtual[i] -= u * dt / p_dis[i];
            x[i] -= u * dt / p_dis[i];
        }
        log.total_discharged_mwh += step.delivered_mw * dt;
        log.steps.push_back(std::move(step));
        log.states_h.push_back(x);
        ++step_index;
    }

    for (double level : parts.recharge.levels_mw) {
        std::vector<double> y(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (no_recovery[i]) continue;
            y[i] = p_dis[i] * (x_virtual_full[i] - x_virtual[i]) / (eta[i] * p_chg[i]);
        }
        double y_hat = 0.0;
        try {
            y_hat = water_fill_level(y, p_chg, -level * dt, dt);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::InfeasibleStep) throw;
            raise(ErrorCode::InfeasibleSignal,
                  "recharge step " + std::to_string(step_index) + " is infeasible");
        }
        DispatchStep step;
        step.mode = DispatchMode::recharge;
        step.target_level_h = y_hat;
        step.request_mw = level;
        step.u_mw.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = -device_response(p_chg[i], y[i], y_hat, dt);
            step.u_mw[i] = u;
            step.delivered_mw += u;
            const double gained_h = eta[i] * (-u) * dt / p_dis[i];
            x_virtual[i] += gained_h;
            x[i] += gained_h;
        }
        log.total_recharged_mwh += -step.delivered_mw * dt;
        log.steps.push_back(std::move(step));
        log.states_h.push_back(x);
        ++step_index;
    }

    log.final_virtual_states_h = x_virtual;
    return log;
}

} // namespace dlr
