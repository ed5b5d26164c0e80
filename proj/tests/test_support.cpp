#include "test_support.hpp"

#include <algorithm>
#include <cmath>

namespace dlr::testing {

FleetState three_battery_fleet() {
    FleetState fleet;
    fleet.devices = {
        Device::from_time_to_go(3.0, 4.0, 4.0, 0.7),
        Device::from_time_to_go(3.0, 2.0, 3.0, 0.6),
        Device::from_time_to_go(6.0, 1.0, 3.0, 0.9),
    };
    return fleet;
}

FleetState two_battery_fleet() {
    FleetState fleet;
    fleet.devices = {
        Device::from_time_to_go(7.0, 1.0, 7.0, 0.7),
        Device::from_time_to_go(6.0, 1.0, 1.0, 0.6),
    };
    return fleet;
}

double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Device random_device(Rng& rng, bool full_charge) {
    const double p_max = uniform(rng, 0.5, 10.0);
    const double x_max = uniform(rng, 0.5, 10.0);
    const double p_charge = uniform(rng, 0.5, 10.0);
    const double eta = uniform(rng, 0.5, 1.0);
    Device d = Device::from_time_to_go(p_max, x_max, p_charge, eta);
    if (!full_charge) d.e_mwh = uniform(rng, 0.0, d.e_max_mwh);
    return d;
}

FleetState random_fleet(Rng& rng, std::size_t n_max, bool full_charge) {
    const auto n = static_cast<std::size_t>(uniform(rng, 1.0, static_cast<double>(n_max) + 1.0));
    FleetState fleet;
    for (std::size_t i = 0; i < std::max<std::size_t>(n, 1); ++i)
        fleet.devices.push_back(random_device(rng, full_charge));
    return fleet;
}

EpCurve random_curve(Rng& rng, std::size_t max_segments) {
    const auto n = static_cast<std::size_t>(
        uniform(rng, 1.0, static_cast<double>(max_segments) + 1.0));
    std::vector<SlopeSegment> segs;
    for (std::size_t i = 0; i < std::max<std::size_t>(n, 1); ++i)
        segs.push_back({uniform(rng, 0.5, 10.0), uniform(rng, 0.5, 10.0)});
    return EpCurve::from_segments(std::move(segs));
}

StaircaseSignal random_staircase(Rng& rng, std::size_t max_steps, double max_level_mw,
                                 double dt_h) {
    const auto n =
        static_cast<std::size_t>(uniform(rng, 1.0, static_cast<double>(max_steps) + 1.0));
    StaircaseSignal signal;
    signal.dt_h = dt_h;
    for (std::size_t i = 0; i < std::max<std::size_t>(n, 1); ++i)
        signal.levels_mw.push_back(uniform(rng, 0.0, max_level_mw));
    return signal;
}

double water_fill_lhs(std::span<const double> states, std::span<const double> powers,
                      double level_h, double dt_h) {
    double total = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i)
        total += powers[i] * std::clamp(states[i] - level_h, 0.0, dt_h);
    return total;
}

StaircaseSignal random_feasible_discharge(Rng& rng, std::vector<double> states_h,
                                          const std::vector<double>& powers_mw, double dt_h,
                                          double energy_mwh) {
    StaircaseSignal signal;
    signal.dt_h = dt_h;
    double remaining = energy_mwh;
    while (remaining > 1e-12) {
        const double cap = water_fill_lhs(states_h, powers_mw, 0.0, dt_h);
        double take;
        if (remaining <= cap + 1e-9) {
            // finishable: close out exactly half the time, and always once the
            // leftover is negligible against the target
            const bool close = remaining < 1e-6 * (energy_mwh + 1.0) ||
                               uniform(rng, 0.0, 1.0) < 0.5;
            take = close ? remaining : uniform(rng, remaining / 2, remaining);
        } else {
            take = uniform(rng, 0.3, 1.0) * cap;
        }
        take = std::min(take, std::min(cap, remaining));
        const double level = take / dt_h;
        const double z = water_fill_level(states_h, powers_mw, take, dt_h);
        for (std::size_t i = 0; i < states_h.size(); ++i) {
            const double u = device_response(powers_mw[i], states_h[i], z, dt_h);
            states_h[i] -= u * dt_h / powers_mw[i];
        }
        signal.levels_mw.push_back(level);
        remaining -= take;
    }
    if (signal.levels_mw.empty()) signal.levels_mw.push_back(0.0);
    return signal;
}

double bisect_water_fill(std::span<const double> states, std::span<const double> powers,
                         double energy_mwh, double dt_h) {
    double hi = 0.0;
    for (double s : states) hi = std::max(hi, s);
    if (water_fill_lhs(states, powers, hi, dt_h) > energy_mwh) hi += 1.0;
    double lo = 0.0;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (water_fill_lhs(states, powers, mid, dt_h) >= energy_mwh)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

bool dominated_on_grid(const EpCurve& cap, const EpCurve& request, std::size_t points) {
    const double p_hi = std::max(cap.p_max(), request.p_max()) * 1.1 + 1.0;
    for (std::size_t i = 0; i <= points; ++i) {
        const double p = p_hi * static_cast<double>(i) / static_cast<double>(points);
        if (request.evaluate(p) > cap.evaluate(p) + tolerance()) return false;
    }
    return true;
}

bool function_equal(const EpCurve& a, const EpCurve& b, double tol) {
    std::vector<double> grid;
    for (const EpCurve::Vertex& v : a.vertices()) grid.push_back(v.p_mw);
    for (const EpCurve::Vertex& v : b.vertices()) grid.push_back(v.p_mw);
    std::sort(grid.begin(), grid.end());
    std::vector<double> probes = grid;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) probes.push_back(0.5 * (grid[i] + grid[i + 1]));
    for (double p : probes)
        if (std::abs(a.evaluate(p) - b.evaluate(p)) > tol) return false;
    return true;
}

bool dispatch_succeeds(const FleetState& fleet, const StaircaseSignal& signal,
                       std::vector<double>* final_states) {
    std::vector<double> states, powers;
    for (const Device& d : fleet.devices) {
        states.push_back(time_to_go(d));
        powers.push_back(d.p_discharge_max_mw);
    }
    for (double level : signal.levels_mw) {
        const double energy = level * signal.dt_h;
        if (energy > water_fill_lhs(states, powers, 0.0, signal.dt_h) + tolerance())
            return false; // shortfall: the fleet cannot source this step
        const double z = water_fill_level(states, powers, energy, signal.dt_h);
        for (std::size_t i = 0; i < states.size(); ++i) {
            const double u = device_response(powers[i], states[i], z, signal.dt_h);
            states[i] -= u * signal.dt_h / powers[i];
        }
    }
    if (final_states) *final_states = states;
    return true;
}

} // namespace dlr::testing
