#include "dlr/hierarchy.hpp"

#include <algorithm>
#include <cmath>

namespace dlr {

void TreeNode::validate() const {
    if (is_leaf()) {
        if (!children.empty())
            raise(ErrorCode::InvalidArgument, "leaf node '" + id + "' must not have children");
        device->validate();
        return;
    }
    if (children.empty())
        raise(ErrorCode::InvalidArgument, "internal node '" + id + "' has no children");
    for (const TreeNode& child : children) child.validate();
}

TreeNode flat_tree(const FleetState& fleet) {
    fleet.validate();
    TreeNode root;
    root.id = "root";
    root.children.reserve(fleet.devices.size());
    for (std::size_t i = 0; i < fleet.devices.size(); ++i) {
        TreeNode leaf;
        leaf.id = "unit-" + std::to_string(i);
        leaf.device = fleet.devices[i];
        root.children.push_back(std::move(leaf));
    }
    return root;
}

const char* message_kind_name(MessageKind kind) {
    switch (kind) {
        case MessageKind::packet_up: return "PacketUp";
        case MessageKind::reserve_ed: return "ReserveEd";
        case MessageKind::broadcast_x_star: return "BroadcastXStar";
        case MessageKind::broadcast_z_hat: return "BroadcastZHat";
        case MessageKind::broadcast_y_hat: return "BroadcastYHat";
    }
    return "Unknown";
}

ProtocolSimulation::ProtocolSimulation(TreeNode root) : root_(std::move(root)) {
    root_.validate();
    collect_leaves(root_);
    if (leaves_.empty()) raise(ErrorCode::InvalidArgument, "tree has no leaves");
}

void ProtocolSimulation::collect_leaves(const TreeNode& node) {
    if (node.is_leaf()) {
        LeafRuntime leaf;
        leaf.id = node.id;
        leaf.device = *node.device;
        leaf.x_h = time_to_go(leaf.device);
        leaves_.push_back(std::move(leaf));
        return;
    }
    internal_ids_.push_back(node.id); // root first, then sub-aggregators
    for (const TreeNode& child : node.children) collect_leaves(child);
}

std::size_t ProtocolSimulation::packet_scalar_count(const DlrPacket& packet) {
    return 2 * (packet.discharge.vertices().size() + packet.loss.vertices().size() +
                packet.recovery.vertices().size());
}

DlrPacket ProtocolSimulation::aggregate_node(const TreeNode& node, const std::string& parent_id) {
    DlrPacket packet;
    if (node.is_leaf()) {
        packet = packet_from_device(*node.device);
    } else {
        bool first = true;
        for (const TreeNode& child : node.children) {
            DlrPacket child_packet = aggregate_node(child, node.id);
            packet = first ? std::move(child_packet) : aggregate_packets(packet, child_packet);
            first = false;
        }
    }
    messages_.push_back(
        {"aggregation", MessageKind::packet_up, node.id, parent_id, packet_scalar_count(packet)});
    return packet;
}

const DlrPacket& ProtocolSimulation::aggregate_up() {
    if (!root_packet_) root_packet_ = aggregate_node(root_, "dispatcher");
    return *root_packet_;
}

void ProtocolSimulation::broadcast_message(const std::string& phase, MessageKind kind,
                                           std::size_t scalars) {
    // Sub-aggregators rebroadcast the value unchanged; nothing cascades.
    for (const std::string& sender : internal_ids_)
        messages_.push_back({phase, kind, sender, "*", scalars});
    if (internal_ids_.empty()) messages_.push_back({phase, kind, root_.id, "*", scalars});
}

std::vector<double> ProtocolSimulation::reserve_down(double ed_mwh) {
    aggregate_up();
    messages_.push_back({"reservation", MessageKind::reserve_ed, "dispatcher", root_.id, 1});
    reservation_ = reserve(*root_packet_, ed_mwh);
    broadcast_message("reservation", MessageKind::broadcast_x_star, 1);

    const double x_star = reservation_->x_star_h;
    mirror_.clear();
    mirror_.reserve(leaves_.size());
    std::vector<double> x_tilde;
    x_tilde.reserve(leaves_.size());
    for (LeafRuntime& leaf : leaves_) {
        leaf.x_virtual_h = std::min(leaf.x_h, x_star);
        leaf.x_virtual_full_h = leaf.x_virtual_h;
        x_tilde.push_back(leaf.x_virtual_h);
        mirror_.push_back({leaf.device.p_discharge_max_mw, leaf.device.p_charge_max_mw,
                           leaf.device.eta, leaf.device.no_recovery, leaf.x_virtual_h,
                           leaf.x_virtual_h});
    }
    return x_tilde;
}

std::vector<double> ProtocolSimulation::broadcast_dispatch(double level_mw, double dt_h,
                                                           DispatchMode mode) {
    if (!reservation_) raise(ErrorCode::InvalidArgument, "reserve_down must run before dispatch");

    // The root solves the target on its mirror of the virtual fleet.
    std::vector<double> states(mirror_.size()), powers(mirror_.size());
    for (std::size_t i = 0; i < mirror_.size(); ++i) {
        if (mode == DispatchMode::discharge) {
            states[i] = mirror_[i].x_virtual_h;
            powers[i] = mirror_[i].p_discharge_mw;
        } else {
            states[i] = mirror_[i].no_recovery
                            ? 0.0
                            : mirror_[i].p_discharge_mw *
                                  (mirror_[i].x_virtual_full_h - mirror_[i].x_virtual_h) /
                                  (mirror_[i].eta * mirror_[i].p_charge_mw);
            powers[i] = mirror_[i].p_charge_mw;
        }
    }
    const double energy = std::abs(level_mw) * dt_h;
    const double target = water_fill_level(states, powers, energy, dt_h);
    last_target_level_h_ = target;

    const MessageKind kind = mode == DispatchMode::discharge ? MessageKind::broadcast_z_hat
                                                             : MessageKind::broadcast_y_hat;
    broadcast_message("dispatch", kind, 1);
    ++dispatch_steps_;

    for (std::size_t i = 0; i < mirror_.size(); ++i) {
        const double u = device_response(powers[i], states[i], target, dt_h);
        if (mode == DispatchMode::discharge)
            mirror_[i].x_virtual_h -= u * dt_h / mirror_[i].p_discharge_mw;
        else
            mirror_[i].x_virtual_h += mirror_[i].eta * u * dt_h / mirror_[i].p_discharge_mw;
    }

    // Every leaf answers the broadcast on its own.
    std::vector<double> u_leaves(leaves_.size());
    for (std::size_t i = 0; i < leaves_.size(); ++i) {
        LeafRuntime& leaf = leaves_[i];
        if (mode == DispatchMode::discharge) {
            const double u = device_response(leaf.device.p_discharge_max_mw, leaf.x_virtual_h,
                                             target, dt_h);
            leaf.x_virtual_h -= u * dt_h / leaf.device.p_discharge_max_mw;
            leaf.x_h -= u * dt_h / leaf.device.p_discharge_max_mw;
            u_leaves[i] = u;
        } else {
            const double y = leaf.device.no_recovery
                                 ? 0.0
                                 : leaf.device.p_discharge_max_mw *
                                       (leaf.x_virtual_full_h - leaf.x_virtual_h) /
                                       (leaf.device.eta * leaf.device.p_charge_max_mw);
            const double u = device_response(leaf.device.p_charge_max_mw, y, target, dt_h);
            const double gained_h = leaf.device.eta * u * dt_h / leaf.device.p_discharge_max_mw;
            leaf.x_virtual_h += gained_h;
            leaf.x_h += gained_h;
            u_leaves[i] = -u;
        }
    }
    return u_leaves;
}

SimulationLog ProtocolSimulation::run_cycle(double ed_mwh, const StaircaseSignal& signal) {
    const RoundTripSignal parts = split_round_trip(signal);
    reserve_down(ed_mwh);

    const double tol = tolerance();
    if (std::abs(parts.discharge.energy_mwh() - reservation_->ed_mwh) > tol)
        raise(ErrorCode::ReservationViolated, "discharge energy differs from reserved ed");
    if (std::abs(-parts.recharge.energy_mwh() - reservation_->er_mwh) > tol)
        raise(ErrorCode::ReservationViolated, "recharge energy differs from reserved er");

    SimulationLog log;
    log.initial_states_h = leaf_states_h();
    log.x_star_h = reservation_->x_star_h;

    std::size_t step_index = 0;
    auto run_phase = [&](const StaircaseSignal& phase, DispatchMode mode) {
        for (double level : phase.levels_mw) {
            std::vector<double> u;
            try {
                u = broadcast_dispatch(level, signal.dt_h, mode);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::InfeasibleStep) throw;
                raise(ErrorCode::InfeasibleSignal,
                      std::string(dispatch_mode_name(mode)) + " step " +
                          std::to_string(step_index) + " is infeasible");
            }
            DispatchStep step;
            step.mode = mode;
            step.request_mw = level;
            step.target_level_h = last_target_level_h_;
            step.u_mw = u;
            for (double ui : u) step.delivered_mw += ui;
            if (mode == DispatchMode::discharge)
                log.total_discharged_mwh += step.delivered_mw * signal.dt_h;
            else
                log.total_recharged_mwh += -step.delivered_mw * signal.dt_h;
            log.steps.push_back(std::move(step));
            log.states_h.push_back(leaf_states_h());
            ++step_index;
        }
    };
    run_phase(parts.discharge, DispatchMode::discharge);
    run_phase(parts.recharge, DispatchMode::recharge);
    log.final_virtual_states_h = leaf_virtual_states_h();
    return log;
}

MessageAudit ProtocolSimulation::audit() const {
    MessageAudit a;
    a.dispatch_steps = dispatch_steps_;
    for (const ProtocolMessage& m : messages_) {
        if (m.phase == "aggregation") {
            ++a.aggregation_messages;
            a.aggregation_scalars += m.scalar_count;
            a.max_packet_scalars = std::max(a.max_packet_scalars, m.scalar_count);
        } else if (m.phase == "reservation") {
            ++a.reservation_messages;
            a.reservation_scalars += m.scalar_count;
        } else {
            if (m.sender == root_.id) {
                ++a.dispatch_root_broadcasts;
                a.dispatch_root_scalars += m.scalar_count;
            } else {
                ++a.dispatch_forward_messages;
            }
        }
    }
    return a;
}

const Reservation& ProtocolSimulation::reservation() const {
    if (!reservation_) raise(ErrorCode::InvalidArgument, "no reservation has been made");
    return *reservation_;
}

std::vector<double> ProtocolSimulation::leaf_states_h() const {
    std::vector<double> out;
    out.reserve(leaves_.size());
    for (const LeafRuntime& leaf : leaves_) out.push_back(leaf.x_h);
    return out;
}

std::vector<double> ProtocolSimulation::leaf_virtual_states_h() const {
    std::vector<double> out;
    out.reserve(leaves_.size());
    for (const LeafRuntime& leaf : leaves_) out.push_back(leaf.x_virtual_h);
    return out;
}

std::vector<std::string> ProtocolSimulation::leaf_ids() const {
    std::vector<std::string> out;
    out.reserve(leaves_.size());
    for (const LeafRuntime& leaf : leaves_) out.push_back(leaf.id);
    return out;
}

} // namespace dlr
