#include "dlr/io.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dlr::io {

using nlohmann::json;

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::ParseError, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::ParseError, "cannot write '" + path + "'");
    out << content;
}

namespace {

struct CsvRow {
    std::size_t line_no = 0;
    std::vector<std::string> fields;
};

std::string trim(const std::string& s) {
    std::size_t lo = 0;
    std::size_t hi = s.size();
    while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
    while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
    return s.substr(lo, hi - lo);
}

std::vector<CsvRow> parse_csv(const std::string& text) {
    std::vector<CsvRow> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        CsvRow row;
        row.line_no = line_no;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) row.fields.push_back(trim(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

double parse_number(const std::string& field, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(field, &used);
        if (used != field.size())
            raise(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": bad number '" + field + "'");
        return v;
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        raise(ErrorCode::ParseError,
              "line " + std::to_string(line_no) + ": bad number '" + field + "'");
    }
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        raise(ErrorCode::ParseError, e.what());
    }
}

double json_number(const json& j, const char* key, std::size_t index) {
    if (!j.contains(key) || !j[key].is_number())
        raise(ErrorCode::ParseError,
              "device " + std::to_string(index) + ": missing numeric field '" + key + "'");
    return j[key].get<double>();
}

std::vector<std::array<double, 2>> json_pairs(const json& j, const std::string& what) {
    if (!j.is_array()) raise(ErrorCode::ParseError, what + " must be an array of [x, y] pairs");
    std::vector<std::array<double, 2>> out;
    out.reserve(j.size());
    for (const json& item : j) {
        if (!item.is_array() || item.size() != 2 || !item[0].is_number() || !item[1].is_number())
            raise(ErrorCode::ParseError, what + " must be an array of [x, y] pairs");
        out.push_back({item[0].get<double>(), item[1].get<double>()});
    }
    return out;
}

} // namespace

std::string ep_curve_to_json(const EpCurve& curve) {
    json arr = json::array();
    for (const EpCurve::Vertex& v : curve.vertices()) arr.push_back({v.p_mw, v.e_mwh});
    return arr.dump();
}

EpCurve ep_curve_from_json(const std::string& text) {
    std::vector<EpCurve::Vertex> pts;
    for (const auto& [p, e] : json_pairs(parse_json(text), "curve")) pts.push_back({p, e});
    return EpCurve(std::move(pts));
}

std::string ep_curve_to_csv(const EpCurve& curve) {
    std::string out = "p_mw,e_mwh\n";
    for (const EpCurve::Vertex& v : curve.vertices())
        out += format_double(v.p_mw) + "," + format_double(v.e_mwh) + "\n";
    return out;
}

EpCurve ep_curve_from_csv(const std::string& text) {
    const std::vector<CsvRow> rows = parse_csv(text);
    if (rows.empty() || rows[0].fields != std::vector<std::string>{"p_mw", "e_mwh"})
        raise(ErrorCode::ParseError, "expected header 'p_mw,e_mwh'");
    std::vector<EpCurve::Vertex> pts;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].fields.size() != 2)
            raise(ErrorCode::ParseError,
                  "line " + std::to_string(rows[i].line_no) + ": expected two fields");
        pts.push_back({parse_number(rows[i].fields[0], rows[i].line_no),
                       parse_number(rows[i].fields[1], rows[i].line_no)});
    }
    return EpCurve(std::move(pts));
}

std::string monotone_curve_to_csv(const MonotoneCurve& curve, const std::string& value_header) {
    std::string out = "x_star_h," + value_header + "\n";
    for (const MonotoneCurve::Vertex& v : curve.vertices())
        out += format_double(v.x_h) + "," + format_double(v.value) + "\n";
    return out;
}

MonotoneCurve monotone_curve_from_csv(const std::string& text) {
    const std::vector<CsvRow> rows = parse_csv(text);
    if (rows.empty() || rows[0].fields.size() != 2 || rows[0].fields[0] != "x_star_h")
        raise(ErrorCode::ParseError, "expected header 'x_star_h,<value>'");
    std::vector<MonotoneCurve::Vertex> pts;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].fields.size() != 2)
            raise(ErrorCode::ParseError,
                  "line " + std::to_string(rows[i].line_no) + ": expected two fields");
        pts.push_back({parse_number(rows[i].fields[0], rows[i].line_no),
                       parse_number(rows[i].fields[1], rows[i].line_no)});
    }
    return MonotoneCurve(std::move(pts));
}

namespace {

json device_to_json(const Device& d) {
    json j;
    j["p_max_mw"] = d.p_discharge_max_mw;
    j["e_mwh"] = d.e_mwh;
    j["e_max_mwh"] = d.e_max_mwh;
    j["p_charge_mw"] = d.p_charge_max_mw;
    if (d.no_recovery)
        j["eta"] = "inf";
    else
        j["eta"] = d.eta;
    if (d.demand_response) j["demand_response"] = true;
    return j;
}

Device device_from_json(const json& j, std::size_t index) {
    Device d;
    d.p_discharge_max_mw = json_number(j, "p_max_mw", index);
    d.p_charge_max_mw = json_number(j, "p_charge_mw", index);

    if (!j.contains("eta"))
        raise(ErrorCode::ParseError, "device " + std::to_string(index) + ": missing 'eta'");
    if (j["eta"].is_string()) {
        if (j["eta"] != "inf")
            raise(ErrorCode::ParseError,
                  "device " + std::to_string(index) + ": eta must be a number or \"inf\"");
        d.no_recovery = true;
        d.eta = 1.0;
    } else if (j["eta"].is_number()) {
        d.eta = j["eta"].get<double>();
        if (std::isinf(d.eta)) {
            d.no_recovery = true;
            d.eta = 1.0;
        }
    } else {
        raise(ErrorCode::ParseError,
              "device " + std::to_string(index) + ": eta must be a number or \"inf\"");
    }
    d.demand_response = j.value("demand_response", false) || d.no_recovery;

    const bool has_x = j.contains("x_h");
    const bool has_e = j.contains("e_mwh") || j.contains("e_max_mwh");
    if (has_x == has_e)
        raise(ErrorCode::ParseError, "device " + std::to_string(index) +
                                         ": specify exactly one of x_h or e_mwh+e_max_mwh");
    if (has_x) {
        const double x = json_number(j, "x_h", index);
        d.e_mwh = d.p_discharge_max_mw * x;
        d.e_max_mwh = d.e_mwh;
    } else {
        d.e_mwh = json_number(j, "e_mwh", index);
        d.e_max_mwh = json_number(j, "e_max_mwh", index);
    }
    d.validate();
    return d;
}

} // namespace

std::string fleet_to_json(const FleetState& fleet) {
    json arr = json::array();
    for (const Device& d : fleet.devices) arr.push_back(device_to_json(d));
    return arr.dump(2) + "\n";
}

FleetState fleet_from_json(const std::string& text) {
    const json j = parse_json(text);
    if (!j.is_array()) raise(ErrorCode::ParseError, "fleet file must be a JSON array of devices");
    FleetState fleet;
    for (std::size_t i = 0; i < j.size(); ++i) fleet.devices.push_back(device_from_json(j[i], i));
    fleet.validate();
    return fleet;
}

std::string fleet_to_csv(const FleetState& fleet) {
    std::string out = "p_max_mw,x_h,p_charge_mw,eta\n";
    for (const Device& d : fleet.devices) {
        out += format_double(d.p_discharge_max_mw) + "," + format_double(time_to_go(d)) + "," +
               format_double(d.p_charge_max_mw) + "," +
               (d.no_recovery ? std::string("inf") : format_double(d.eta)) + "\n";
    }
    return out;
}

FleetState fleet_from_csv(const std::string& text) {
    const std::vector<CsvRow> rows = parse_csv(text);
    const std::vector<std::string> header{"p_max_mw", "x_h", "p_charge_mw", "eta"};
    if (rows.empty() || rows[0].fields != header)
        raise(ErrorCode::ParseError, "expected header 'p_max_mw,x_h,p_charge_mw,eta'");
    FleetState fleet;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const CsvRow& row = rows[i];
        if (row.fields.size() != 4)
            raise(ErrorCode::ParseError,
                  "line " + std::to_string(row.line_no) + ": expected four fields");
        const double p_max = parse_number(row.fields[0], row.line_no);
        const double x = parse_number(row.fields[1], row.line_no);
        const double p_charge = parse_number(row.fields[2], row.line_no);
        const bool no_recovery = row.fields[3] == "inf";
        const double eta = no_recovery ? 1.0 : parse_number(row.fields[3], row.line_no);
        // CSV has no flag column; efficiencies above 1 imply demand response.
        fleet.devices.push_back(
            Device::from_time_to_go(p_max, x, p_charge, eta, no_recovery, eta > 1.0));
    }
    fleet.validate();
    return fleet;
}

FleetState load_fleet(const std::string& path) {
    const std::string text = read_file(path);
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        return c == '[' ? fleet_from_json(text) : fleet_from_csv(text);
    }
    raise(ErrorCode::ParseError, "fleet file '" + path + "' is empty");
}

std::string signal_to_csv(const StaircaseSignal& signal) {
    std::string out = "dt_h," + format_double(signal.dt_h) + "\n";
    out += "t_index,power_mw\n";
    for (std::size_t i = 0; i < signal.levels_mw.size(); ++i)
        out += std::to_string(i) + "," + format_double(signal.levels_mw[i]) + "\n";
    return out;
}

StaircaseSignal signal_from_csv(const std::string& text) {
    const std::vector<CsvRow> rows = parse_csv(text);
    if (rows.size() < 2 || rows[0].fields.size() != 2 || rows[0].fields[0] != "dt_h")
        raise(ErrorCode::ParseError, "expected leading 'dt_h,<value>' line");
    StaircaseSignal signal;
    signal.dt_h = parse_number(rows[0].fields[1], rows[0].line_no);
    if (rows[1].fields != std::vector<std::string>{"t_index", "power_mw"})
        raise(ErrorCode::ParseError, "expected header 't_index,power_mw'");
    for (std::size_t i = 2; i < rows.size(); ++i) {
        const CsvRow& row = rows[i];
        if (row.fields.size() != 2)
            raise(ErrorCode::ParseError,
                  "line " + std::to_string(row.line_no) + ": expected two fields");
        const double idx = parse_number(row.fields[0], row.line_no);
        if (idx != static_cast<double>(i - 2))
            raise(ErrorCode::ParseError,
                  "line " + std::to_string(row.line_no) + ": t_index out of order");
        signal.levels_mw.push_back(parse_number(row.fields[1], row.line_no));
    }
    signal.validate();
    return signal;
}

namespace {

json monotone_to_json_pairs(const MonotoneCurve& curve) {
    json arr = json::array();
    for (const MonotoneCurve::Vertex& v : curve.vertices()) arr.push_back({v.x_h, v.value});
    return arr;
}

MonotoneCurve monotone_from_json_pairs(const json& j, const std::string& what) {
    std::vector<MonotoneCurve::Vertex> pts;
    for (const auto& [x, v] : json_pairs(j, what)) pts.push_back({x, v});
    return MonotoneCurve(std::move(pts));
}

json ep_to_json_pairs(const EpCurve& curve) {
    json arr = json::array();
    for (const EpCurve::Vertex& v : curve.vertices()) arr.push_back({v.p_mw, v.e_mwh});
    return arr;
}

EpCurve ep_from_json_pairs(const json& j, const std::string& what) {
    std::vector<EpCurve::Vertex> pts;
    for (const auto& [p, e] : json_pairs(j, what)) pts.push_back({p, e});
    return EpCurve(std::move(pts));
}

} // namespace

std::string packet_to_json(const DlrPacket& packet) {
    json j;
    j["format"] = "dlr/1";
    j["discharge"] = ep_to_json_pairs(packet.discharge);
    j["loss"] = monotone_to_json_pairs(packet.loss);
    j["recovery"] = monotone_to_json_pairs(packet.recovery);
    j["meta"]["n_devices"] = packet.n_devices;
    if (packet.max_completion_h) j["meta"]["max_completion_h"] = *packet.max_completion_h;
    return j.dump(2) + "\n";
}

DlrPacket packet_from_json(const std::string& text) {
    const json j = parse_json(text);
    if (!j.is_object() || j.value("format", "") != "dlr/1")
        raise(ErrorCode::FormatMismatch, "expected a packet file with format tag 'dlr/1'");
    DlrPacket packet;
    packet.discharge = ep_from_json_pairs(j.at("discharge"), "discharge");
    packet.loss = monotone_from_json_pairs(j.at("loss"), "loss");
    packet.recovery = monotone_from_json_pairs(j.at("recovery"), "recovery");
    if (j.contains("meta")) {
        packet.n_devices = j["meta"].value("n_devices", 0);
        if (j["meta"].contains("max_completion_h") && j["meta"]["max_completion_h"].is_number())
            packet.max_completion_h = j["meta"]["max_completion_h"].get<double>();
    }
    packet.validate();
    return packet;
}

std::string reservation_to_json(const Reservation& r) {
    json j;
    j["format"] = "dlr-reservation/1";
    j["ed_mwh"] = r.ed_mwh;
    j["x_star_h"] = r.x_star_h;
    j["er_mwh"] = r.er_mwh;
    j["y_star_h"] = r.y_star_h;
    j["recharge_power_mw"] = r.recharge_power_bound_mw();
    j["truncated_capacity"] = ep_to_json_pairs(r.truncated_capacity);
    return j.dump(2) + "\n";
}

Reservation reservation_from_json(const std::string& text) {
    const json j = parse_json(text);
    if (!j.is_object() || j.value("format", "") != "dlr-reservation/1")
        raise(ErrorCode::FormatMismatch,
              "expected a reservation file with format tag 'dlr-reservation/1'");
    Reservation r;
    r.ed_mwh = j.at("ed_mwh").get<double>();
    r.x_star_h = j.at("x_star_h").get<double>();
    r.er_mwh = j.at("er_mwh").get<double>();
    r.y_star_h = j.at("y_star_h").get<double>();
    r.truncated_capacity = ep_from_json_pairs(j.at("truncated_capacity"), "truncated_capacity");
    return r;
}

namespace {

json tree_to_json_node(const TreeNode& node) {
    json j;
    j["id"] = node.id;
    if (node.is_leaf()) {
        j["device"] = device_to_json(*node.device);
    } else {
        j["children"] = json::array();
        for (const TreeNode& child : node.children) j["children"].push_back(tree_to_json_node(child));
    }
    return j;
}

TreeNode tree_from_json_node(const json& j, std::size_t& leaf_index) {
    if (!j.is_object()) raise(ErrorCode::ParseError, "tree nodes must be JSON objects");
    TreeNode node;
    node.id = j.value("id", "");
    if (j.contains("device")) {
        if (node.id.empty()) node.id = "unit-" + std::to_string(leaf_index);
        node.device = device_from_json(j["device"], leaf_index);
        ++leaf_index;
        return node;
    }
    if (!j.contains("children"))
        raise(ErrorCode::ParseError, "tree node '" + node.id + "' needs children or a device");
    if (node.id.empty()) node.id = "aggregator";
    for (const json& child : j["children"]) node.children.push_back(tree_from_json_node(child, leaf_index));
    return node;
}

} // namespace

std::string tree_to_json(const TreeNode& root) { return tree_to_json_node(root).dump(2) + "\n"; }

TreeNode tree_from_json(const std::string& text) {
    std::size_t leaf_index = 0;
    TreeNode root = tree_from_json_node(parse_json(text), leaf_index);
    root.validate();
    return root;
}

RequestTrace trace_from_csv(const std::string& text, double dt_h, TraceColumns columns) {
    const std::vector<CsvRow> rows = parse_csv(text);
    if (rows.empty()) raise(ErrorCode::ParseError, "trace file is empty");

    const std::vector<std::string>& header = rows[0].fields;
    auto find_col = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    };
    const int col_power = find_col("power_mw");
    const int col_up = find_col("up_mw");
    const int col_down = find_col("down_mw");
    const int col_time = find_col("timestamp");

    TraceColumns mode = columns;
    if (mode == TraceColumns::sniff) {
        if (col_up >= 0 && col_down >= 0)
            mode = TraceColumns::up_down;
        else if (col_power >= 0)
            mode = TraceColumns::signed_power;
        else
            raise(ErrorCode::ParseError,
                  "expected a 'power_mw' column or 'up_mw'/'down_mw' columns");
    }
    if (mode == TraceColumns::signed_power && col_power < 0)
        raise(ErrorCode::ParseError, "missing 'power_mw' column");
    if (mode == TraceColumns::up_down && (col_up < 0 || col_down < 0))
        raise(ErrorCode::ParseError, "missing 'up_mw'/'down_mw' columns");

    RequestTrace trace;
    trace.dt_h = dt_h;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const CsvRow& row = rows[i];
        if (row.fields.size() != header.size())
            raise(ErrorCode::ParseError,
                  "line " + std::to_string(row.line_no) + ": wrong field count");
        if (i == 1 && col_time >= 0) trace.origin = row.fields[static_cast<std::size_t>(col_time)];
        if (mode == TraceColumns::signed_power) {
            trace.samples_mw.push_back(
                parse_number(row.fields[static_cast<std::size_t>(col_power)], row.line_no));
        } else {
            const double up =
                parse_number(row.fields[static_cast<std::size_t>(col_up)], row.line_no);
            const double down =
                parse_number(row.fields[static_cast<std::size_t>(col_down)], row.line_no);
            trace.samples_mw.push_back(up - down);
        }
    }
    trace.validate();
    return trace;
}

std::string simulation_steps_to_csv(const SimulationLog& log) {
    std::string out = "step,mode,z_hat_h,p_request_mw,p_delivered_mw\n";
    for (std::size_t i = 0; i < log.steps.size(); ++i) {
        const DispatchStep& s = log.steps[i];
        out += std::to_string(i) + "," + dispatch_mode_name(s.mode) + "," +
               format_double(s.target_level_h) + "," + format_double(s.request_mw) + "," +
               format_double(s.delivered_mw) + "\n";
    }
    return out;
}

std::string simulation_states_to_csv(const SimulationLog& log,
                                     const std::vector<std::string>& device_ids) {
    std::string out = "step,device,x_h,u_mw\n";
    for (std::size_t i = 0; i < log.steps.size(); ++i) {
        const DispatchStep& s = log.steps[i];
        for (std::size_t d = 0; d < s.u_mw.size(); ++d) {
            out += std::to_string(i) + ",";
            out += d < device_ids.size() ? device_ids[d] : std::to_string(d);
            out += "," + format_double(log.states_h[i][d]) + "," + format_double(s.u_mw[d]) + "\n";
        }
    }
    return out;
}

std::string protocol_messages_to_csv(const std::vector<ProtocolMessage>& messages) {
    std::string out = "phase,message_kind,sender,receiver,scalar_count\n";
    for (const ProtocolMessage& m : messages) {
        out += m.phase + "," + message_kind_name(m.kind) + "," + m.sender + "," + m.receiver +
               "," + std::to_string(m.scalar_count) + "\n";
    }
    return out;
}

std::string window_stats_to_csv(const std::vector<WindowStats>& stats, double dt_h) {
    std::string out = "window_start_h,direction,max_power_mw,energy_mwh,effective_time_h\n";
    for (const WindowStats& s : stats) {
        out += format_double(static_cast<double>(s.start_index) * dt_h) + "," +
               direction_name(s.direction) + "," + format_double(s.max_power_mw) + "," +
               format_double(s.energy_mwh) + "," + format_double(s.effective_time_h) + "\n";
    }
    return out;
}

std::string histogram_to_csv(const std::vector<HistogramBin>& bins) {
    std::string out = "bin_lo_h,bin_hi_h,count\n";
    for (const HistogramBin& b : bins)
        out += format_double(b.lo_h) + "," + format_double(b.hi_h) + "," +
               std::to_string(b.count) + "\n";
    return out;
}

} // namespace dlr::io
