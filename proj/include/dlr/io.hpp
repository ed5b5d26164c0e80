#ifndef DLR_IO_HPP
#define DLR_IO_HPP

#include <string>
#include <vector>

#include "dlr/dispatch.hpp"
#include "dlr/fleet.hpp"
#include "dlr/hierarchy.hpp"
#include "dlr/packet.hpp"
#include "dlr/pwl.hpp"
#include "dlr/trace.hpp"

namespace dlr::io {

// 17 significant digits: enough for doubles to round-trip bit-exactly.
std::string format_double(double value);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// --- curves -----------------------------------------------------------------
std::string ep_curve_to_json(const EpCurve& curve);
EpCurve ep_curve_from_json(const std::string& text);
std::string ep_curve_to_csv(const EpCurve& curve);
EpCurve ep_curve_from_csv(const std::string& text);

std::string monotone_curve_to_csv(const MonotoneCurve& curve, const std::string& value_header);
MonotoneCurve monotone_curve_from_csv(const std::string& text);

// --- fleets -----------------------------------------------------------------
std::string fleet_to_json(const FleetState& fleet);
FleetState fleet_from_json(const std::string& text);
std::string fleet_to_csv(const FleetState& fleet);
FleetState fleet_from_csv(const std::string& text);
FleetState load_fleet(const std::string& path); // sniffs json vs csv

// --- signals ----------------------------------------------------------------
std::string signal_to_csv(const StaircaseSignal& signal);
StaircaseSignal signal_from_csv(const std::string& text);

// --- packets and reservations -------------------------------------------------
std::string packet_to_json(const DlrPacket& packet);
DlrPacket packet_from_json(const std::string& text);

std::string reservation_to_json(const Reservation& r);
Reservation reservation_from_json(const std::string& text);

// --- aggregation trees --------------------------------------------------------
std::string tree_to_json(const TreeNode& root);
TreeNode tree_from_json(const std::string& text);

// --- request traces -----------------------------------------------------------
enum class TraceColumns { sniff, signed_power, up_down };
RequestTrace trace_from_csv(const std::string& text, double dt_h,
                            TraceColumns columns = TraceColumns::sniff);

// --- simulation and protocol logs ----------------------------------------------
std::string simulation_steps_to_csv(const SimulationLog& log);
std::string simulation_states_to_csv(const SimulationLog& log,
                                     const std::vector<std::string>& device_ids = {});
std::string protocol_messages_to_csv(const std::vector<ProtocolMessage>& messages);

std::string window_stats_to_csv(const std::vector<WindowStats>& stats, double dt_h);
std::string histogram_to_csv(const std::vector<HistogramBin>& bins);

} // namespace dlr::io

#endif
