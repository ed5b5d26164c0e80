#ifndef DLR_HIERARCHY_HPP
#define DLR_HIERARCHY_HPP

#include <optional>
#include <string>
#include <vector>

#include "dlr/dispatch.hpp"
#include "dlr/fleet.hpp"
#include "dlr/packet.hpp"

namespace dlr {

// Aggregation hierarchy node: either a leaf holding one device or an internal
// aggregator with children.
struct TreeNode {
    std::string id;
    std::optional<Device> device;
    std::vector<TreeNode> children;

    bool is_leaf() const { return device.has_value(); }
    void validate() const;
};

TreeNode flat_tree(const FleetState& fleet);

enum class MessageKind { packet_up, reserve_ed, broadcast_x_star, broadcast_z_hat, broadcast_y_hat };

const char* message_kind_name(MessageKind kind);

struct ProtocolMessage {
    std::string phase; // aggregation | reservation | dispatch
    MessageKind kind = MessageKind::packet_up;
    std::string sender;
    std::string receiver; // "*" for broadcasts
    std::size_t scalar_count = 0;
};

struct MessageAudit {
    std::size_t aggregation_messages = 0;
    std::size_t aggregation_scalars = 0;
    std::size_t max_packet_scalars = 0;
    std::size_t reservation_messages = 0;
    std::size_t reservation_scalars = 0;
    std::size_t dispatch_steps = 0;
    std::size_t dispatch_root_broadcasts = 0;
    std::size_t dispatch_root_scalars = 0;
    std::size_t dispatch_forward_messages = 0;
};

// In-process execution of the three-phase protocol: packets fold up the tree,
// a reserved energy turns into a single x* broadcast, and each dispatch step
// is a one-scalar broadcast to which every leaf responds locally. The root
// solves broadcast targets on its own mirror of the contracted virtual fleet,
// so no leaf reports state after reservation.
class ProtocolSimulation {
public:
    explicit ProtocolSimulation(TreeNode root);

    const DlrPacket& aggregate_up();

    // Returns the per-leaf truncation x~ = min(x, x*).
    std::vector<double> reserve_down(double ed_mwh);

    // Returns the per-leaf inputs induced by the broadcast target.
    std::vector<double> broadcast_dispatch(double level_mw, double dt_h, DispatchMode mode);

    // Convenience: reserve then dispatch an entire admissible cycle,
    // producing a log identical to the flat-fleet simulator's.
    SimulationLog run_cycle(double ed_mwh, const StaircaseSignal& signal);

    const std::vector<ProtocolMessage>& messages() const { return messages_; }
    MessageAudit audit() const;
    double last_target_level_h() const { return last_target_level_h_; }

    const Reservation& reservation() const;
    std::vector<double> leaf_states_h() const;
    std::vector<double> leaf_virtual_states_h() const;
    std::vector<std::string> leaf_ids() const;
    std::size_t leaf_count() const { return leaves_.size(); }

private:
    struct LeafRuntime {
        std::string id;
        Device device;
        double x_h = 0.0;
        double x_virtual_h = 0.0;
        double x_virtual_full_h = 0.0;
    };

    // The root's own copy of the contracted virtual fleet, advanced from
    // broadcast values alone.
    struct MirrorUnit {
        double p_discharge_mw = 0.0;
        double p_charge_mw = 0.0;
        double eta = 1.0;
        bool no_recovery = false;
        double x_virtual_h = 0.0;
        double x_virtual_full_h = 0.0;
    };

    DlrPacket aggregate_node(const TreeNode& node, const std::string& parent_id);
    void collect_leaves(const TreeNode& node);
    void broadcast_message(const std::string& phase, MessageKind kind, std::size_t scalars);
    static std::size_t packet_scalar_count(const DlrPacket& packet);

    TreeNode root_;
    std::vector<LeafRuntime> leaves_;
    std::vector<MirrorUnit> mirror_;
    std::vector<ProtocolMessage> messages_;
    std::optional<DlrPacket> root_packet_;
    std::optional<Reservation> reservation_;
    std::vector<std::string> internal_ids_; // root first, traversal order
    std::size_t dispatch_steps_ = 0;
    double last_target_level_h_ = 0.0;
};

} // namespace dlr

#endif
