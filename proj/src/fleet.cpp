#include "dlr/fleet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dlr {

Device Device::from_time_to_go(double p_max_mw, double x_h, double p_charge_mw, double eta,
                               bool no_recovery, bool demand_response) {
    Device d;
    d.p_discharge_max_mw = p_max_mw;
    d.p_charge_max_mw = p_charge_mw;
    d.eta = no_recovery ? 1.0 : eta;
    d.no_recovery = no_recovery;
    d.demand_response = demand_response || no_recovery;
    d.e_mwh = p_max_mw * x_h;
    d.e_max_mwh = d.e_mwh;
    d.validate();
    return d;
}

void Device::validate() const {
    if (!(p_discharge_max_mw > 0.0))
        raise(ErrorCode::InvalidDevice, "discharge power rating must be positive");
    if (!(p_charge_max_mw > 0.0))
        raise(ErrorCode::InvalidDevice, "charge power rating must be positive");
    if (!(eta > 0.0) || !std::isfinite(eta))
        raise(ErrorCode::InvalidDevice, "efficiency must be positive and finite (or no_recovery)");
    if (eta > 1.0 && !demand_response && !no_recovery)
        raise(ErrorCode::InvalidDevice, "efficiency above 1 requires the demand_response flag");
    const double tol = tolerance();
    if (e_mwh < -tol || e_mwh > e_max_mwh + tol)
        raise(ErrorCode::InvalidDevice, "energy must lie in [0, e_max]");
}

double time_to_go(const Device& d) { return std::max(d.e_mwh, 0.0) / d.p_discharge_max_mw; }

double time_to_charge(const Device& d) {
    if (d.no_recovery) return 0.0;
    return std::max(d.e_max_mwh - d.e_mwh, 0.0) / (d.eta * d.p_charge_max_mw);
}

double max_time_to_go(const Device& d) { return d.e_max_mwh / d.p_discharge_max_mw; }

void FleetState::validate() const {
    if (devices.empty()) raise(ErrorCode::InvalidDevice, "fleet has no devices");
    for (const Device& d : devices) d.validate();
}

double FleetState::total_energy_mwh() const {
    double total = 0.0;
    for (const Device& d : devices) total += std::max(d.e_mwh, 0.0);
    return total;
}

void StaircaseSignal::validate() const {
    if (!(dt_h > 0.0)) raise(ErrorCode::InvalidArgument, "signal step must be positive");
}

double StaircaseSignal::energy_mwh() const {
    double total = 0.0;
    for (double level : levels_mw) total += level * dt_h;
    return total;
}

bool StaircaseSignal::is_pure_discharge() const {
    return std::all_of(levels_mw.begin(), levels_mw.end(), [](double v) { return v >= 0.0; });
}

RoundTripSignal split_round_trip(const StaircaseSignal& signal) {
    signal.validate();
    std::size_t first_negative = signal.levels_mw.size();
    for (std::size_t i = 0; i < signal.levels_mw.size(); ++i) {
        if (signal.levels_mw[i] < 0.0) {
            first_negative = i;
            break;
        }
    }
    for (std::size_t i = first_negative; i < signal.levels_mw.size(); ++i) {
        if (signal.levels_mw[i] > 0.0)
            raise(ErrorCode::NotRoundTripSignal,
                  "positive level at step " + std::to_string(i) + " after recharging has begun");
    }
    RoundTripSignal out;
    out.discharge.dt_h = signal.dt_h;
    out.recharge.dt_h = signal.dt_h;
    out.discharge.levels_mw.assign(signal.levels_mw.begin(),
                                   signal.levels_mw.begin() + static_cast<long>(first_negative));
    out.recharge.levels_mw.assign(signal.levels_mw.begin() + static_cast<long>(first_negative),
                                  signal.levels_mw.end());
    return out;
}

EpCurve ep_transform(const StaircaseSignal& signal) {
    signal.validate();
    const double tol = tolerance();
    std::vector<double> levels;
    levels.reserve(signal.levels_mw.size());
    for (std::size_t i = 0; i < signal.levels_mw.size(); ++i) {
        const double level = signal.levels_mw[i];
        if (level < 0.0)
            raise(ErrorCode::NotDischargeSignal,
                  "negative level at step " + std::to_string(i));
        if (level > 0.0) levels.push_back(level);
    }
    if (levels.empty()) return EpCurve();

    std::sort(levels.begin(), levels.end());
    // E(p) evaluated via suffix sums of the levels strictly above p; the
    // transform is linear between distinct levels. Breakpoints closer than the
    // tolerance collapse onto one representative so the vertex spacing stays
    // resolvable; values at emitted breakpoints are exact.
    std::vector<double> suffix(levels.size() + 1, 0.0);
    for (std::size_t i = levels.size(); i-- > 0;) suffix[i] = suffix[i + 1] + levels[i];

    std::vector<std::size_t> emitted;
    double last_p = levels.back() + 1.0;
    for (std::size_t i = levels.size(); i-- > 0;) {
        if (last_p - levels[i] <= tol) continue;
        if (levels[i] <= tol) break;
        emitted.push_back(i);
        last_p = levels[i];
    }
    if (emitted.empty()) return EpCurve(); // every level is below the tolerance

    std::vector<EpCurve::Vertex> pts;
    pts.push_back({0.0, signal.dt_h * suffix[0]});
    for (auto it = emitted.rbegin(); it != emitted.rend(); ++it) {
        const std::size_t i = *it;
        const double above = suffix[i + 1] - levels[i] * static_cast<double>(levels.size() - i - 1);
        pts.push_back({levels[i], signal.dt_h * above});
    }
    pts.back().e_mwh = 0.0;
    return EpCurve(std::move(pts));
}

EpCurve capacity(const FleetState& fleet) {
    fleet.validate();
    std::vector<SlopeSegment> segs;
    segs.reserve(fleet.devices.size());
    for (const Device& d : fleet.devices) segs.push_back({d.p_discharge_max_mw, time_to_go(d)});
    return EpCurve::from_segments(std::move(segs));
}

EpCurve recharge_capacity(const FleetState& fleet) {
    fleet.validate();
    std::vector<SlopeSegment> segs;
    segs.reserve(fleet.devices.size());
    for (const Device& d : fleet.devices) {
        if (d.no_recovery) continue;
        segs.push_back({d.p_charge_max_mw, time_to_charge(d)});
    }
    return EpCurve::from_segments(std::move(segs));
}

bool is_feasible(const FleetState& fleet, const StaircaseSignal& signal) {
    return dominates(capacity(fleet), ep_transform(signal));
}

} // namespace dlr
