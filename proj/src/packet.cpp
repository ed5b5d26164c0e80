#include "dlr/packet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dlr {

void DlrPacket::validate() const {
    const double tol = tolerance();
    if (std::abs(loss.x_max() - recovery.x_max()) > tol)
        raise(ErrorCode::InvalidCurve, "loss and recovery domains disagree");
    if (!discharge.is_zero() && std::abs(-discharge.initial_slope() - loss.x_max()) > tol)
        raise(ErrorCode::InvalidCurve, "discharge initial slope must equal -x*_max");
    if (n_devices < 0) raise(ErrorCode::InvalidArgument, "negative device count");
}

DlrPacket packet_from_device(const Device& device) {
    device.validate();
    const double x = time_to_go(device);
    const double p = device.p_discharge_max_mw;

    DlrPacket packet;
    packet.n_devices = 1;
    if (x <= 0.0) return packet; // empty unit: all three curves are zero
    packet.discharge = EpCurve({{0.0, p * x}, {p, 0.0}});
    if (device.no_recovery) {
        packet.loss = MonotoneCurve({{0.0, 0.0}, {x, 0.0}});
        packet.recovery = MonotoneCurve({{0.0, 0.0}, {x, 0.0}});
    } else {
        packet.loss = MonotoneCurve::ramp(x, p * x / device.eta);
        packet.recovery = MonotoneCurve::ramp(x, p * x / (device.eta * device.p_charge_max_mw));
    }
    packet.validate();
    return packet;
}

namespace {

// Appends a vertex, overwriting the previous one when the abscissae are
// closer than the tolerance (sub-tolerance spacing is not resolvable). The
// origin vertex is never displaced.
void push_vertex(std::vector<MonotoneCurve::Vertex>& pts, double x, double value) {
    if (x <= tolerance()) return;
    if (!pts.empty() && pts.back().x_h > 0.0 && x - pts.back().x_h <= tolerance())
        pts.back() = {std::max(x, pts.back().x_h), value};
    else
        pts.push_back({x, value});
}

// Loss function sum_i (p_i / eta_i) min(x_i, x*): concave, with breakpoints at
// the distinct time-to-go values. Swept in ascending x with running sums of
// the saturated energy and the still-active recharge rate.
MonotoneCurve fleet_loss(const FleetState& fleet) {
    struct Unit {
        double x;
        double rate; // p / eta, zero for turn-down units
    };
    std::vector<Unit> units;
    units.reserve(fleet.devices.size());
    for (const Device& d : fleet.devices)
        units.push_back(
            {time_to_go(d), d.no_recovery ? 0.0 : d.p_discharge_max_mw / d.eta});
    std::sort(units.begin(), units.end(), [](const Unit& a, const Unit& b) { return a.x < b.x; });

    double active_rate = 0.0;
    for (const Unit& u : units) active_rate += u.rate;

    std::vector<MonotoneCurve::Vertex> pts{{0.0, 0.0}};
    double saturated = 0.0;
    std::size_t i = 0;
    while (i < units.size()) {
        const double x = units[i].x;
        while (i < units.size() && units[i].x == x) {
            saturated += units[i].rate * x;
            active_rate -= units[i].rate;
            ++i;
        }
        if (x > 0.0) push_vertex(pts, x, saturated + active_rate * x);
    }
    return MonotoneCurve(std::move(pts));
}

// Recovery function max_i c_i min(x_i, x*): the upper envelope of saturating
// ramps, swept over the saturation points in ascending order. On each
// interval the envelope is max(A, B x*) with A the best saturated value and B
// the steepest still-rising slope, so each interval contributes at most one
// crossover vertex.
MonotoneCurve fleet_recovery(const FleetState& fleet) {
    struct Ramp {
        double x;
        double c;
    };
    std::vector<Ramp> ramps;
    double x_domain = 0.0;
    for (const Device& d : fleet.devices) {
        const double x = time_to_go(d);
        x_domain = std::max(x_domain, x);
        if (d.no_recovery || x <= 0.0) continue;
        ramps.push_back({x, d.p_discharge_max_mw / (d.eta * d.p_charge_max_mw)});
    }
    if (ramps.empty()) {
        if (x_domain <= 0.0) return MonotoneCurve();
        return MonotoneCurve({{0.0, 0.0}, {x_domain, 0.0}});
    }
    std::sort(ramps.begin(), ramps.end(), [](const Ramp& a, const Ramp& b) { return a.x < b.x; });

    // Steepest slope among ramps saturating at or after each position.
    std::vector<double> rising(ramps.size() + 1, 0.0);
    for (std::size_t i = ramps.size(); i-- > 0;)
        rising[i] = std::max(rising[i + 1], ramps[i].c);

    std::vector<MonotoneCurve::Vertex> pts{{0.0, 0.0}};
    double best_saturated = 0.0;
    double x_prev = 0.0;
    for (std::size_t i = 0; i < ramps.size(); ++i) {
        const double x_next = ramps[i].x;
        if (x_next > x_prev) {
            const double slope = rising[i];
            if (best_saturated > slope * x_prev) {
                // flat leader; add the crossover if the ramp overtakes in-cell
                const double xc = slope > 0.0 ? best_saturated / slope : x_next;
                if (xc < x_next) push_vertex(pts, std::max(xc, x_prev), best_saturated);
            }
            push_vertex(pts, x_next, std::max(best_saturated, slope * x_next));
            x_prev = x_next;
        }
        best_saturated = std::max(best_saturated, ramps[i].c * ramps[i].x);
    }
    if (x_domain > x_prev) push_vertex(pts, x_domain, best_saturated);
    return MonotoneCurve(std::move(pts));
}

} // namespace

DlrPacket packet_from_fleet(const FleetState& fleet) {
    fleet.validate();
    DlrPacket packet;
    packet.discharge = capacity(fleet);
    packet.loss = fleet_loss(fleet);
    packet.recovery = fleet_recovery(fleet);
    packet.n_devices = static_cast<int>(fleet.devices.size());
    packet.validate();
    return packet;
}

DlrPacket aggregate_packets(const DlrPacket& a, const DlrPacket& b) {
    DlrPacket out;
    out.discharge = minkowski_add(a.discharge, b.discharge);
    out.loss = pointwise_sum(a.loss, b.loss);
    out.recovery = pointwise_max(a.recovery, b.recovery);
    out.n_devices = a.n_devices + b.n_devices;
    if (a.max_completion_h || b.max_completion_h)
        out.max_completion_h = std::min(a.max_completion_h.value_or(1e300),
                                        b.max_completion_h.value_or(1e300));
    out.validate();
    return out;
}

double Reservation::recharge_power_bound_mw() const {
    return y_star_h > 0.0 ? er_mwh / y_star_h : 0.0;
}

Reservation reserve(const DlrPacket& packet, double ed_mwh) {
    Reservation r;
    r.x_star_h = solve_truncation_time(packet.discharge, ed_mwh);
    r.ed_mwh = std::clamp(ed_mwh, 0.0, packet.discharge.total_energy());
    r.er_mwh = packet.loss.evaluate(r.x_star_h);
    r.y_star_h = packet.recovery.evaluate(r.x_star_h);
    r.truncated_capacity = convex_hull_truncate(packet.discharge, ed_mwh);
    return r;
}

VirtualBattery recharge_virtual_battery(const Reservation& r) {
    return {r.recharge_power_bound_mw(), r.er_mwh};
}

Reservation with_reduced_recharge(const Reservation& r, double er_mwh) {
    if (er_mwh < -tolerance() || er_mwh > r.er_mwh + tolerance())
        raise(ErrorCode::InvalidArgument, "updated recharge energy must lie in [0, er]");
    Reservation out = r;
    out.er_mwh = std::clamp(er_mwh, 0.0, r.er_mwh);
    return out;
}

Reservation reduce_reservation(const DlrPacket& packet, const Reservation& r, double ed_mwh) {
    if (ed_mwh > r.ed_mwh + tolerance())
        raise(ErrorCode::InvalidArgument, "reservation updates may only shrink ed");
    return reserve(packet, ed_mwh);
}

Admissibility check_cycle_admissible(const Reservation& r, const StaircaseSignal& signal) {
    const double tol = tolerance();
    RoundTripSignal parts;
    try {
        parts = split_round_trip(signal);
    } catch (const Error&) {
        return {false, "not_round_trip"};
    }
    if (!dominates(r.truncated_capacity, ep_transform(parts.discharge)))
        return {false, "discharge_not_dominated"};
    if (std::abs(parts.discharge.energy_mwh() - r.ed_mwh) > tol)
        return {false, "discharge_energy_mismatch"};
    if (std::abs(-parts.recharge.energy_mwh() - r.er_mwh) > tol)
        return {false, "recharge_energy_mismatch"};
    const double bound = r.recharge_power_bound_mw();
    for (double level : parts.recharge.levels_mw)
        if (-level > bound + tol) return {false, "recharge_rate_exceeded"};
    return {true, ""};
}

} // namespace dlr
