#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dlr/dispatch.hpp"
#include "dlr/fleet.hpp"
#include "dlr/hierarchy.hpp"
#include "dlr/io.hpp"
#include "dlr/packet.hpp"
#include "dlr/trace.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRejected = 1;
constexpr int kExitInputError = 2;

int exit_code_for(dlr::ErrorCode code) {
    switch (code) {
        case dlr::ErrorCode::EnergyExceedsFleet:
        case dlr::ErrorCode::NotDischargeSignal:
        case dlr::ErrorCode::NotRoundTripSignal:
        case dlr::ErrorCode::InfeasibleStep:
        case dlr::ErrorCode::InfeasibleSignal:
        case dlr::ErrorCode::ReservationViolated:
            return kExitRejected;
        default:
            return kExitInputError;
    }
}

void write_packet_outputs(const dlr::DlrPacket& packet, const std::string& out,
                          const std::string& csv_prefix) {
    dlr::io::write_file(out, dlr::io::packet_to_json(packet));
    if (csv_prefix.empty()) return;
    dlr::io::write_file(csv_prefix + "_discharge.csv", dlr::io::ep_curve_to_csv(packet.discharge));
    dlr::io::write_file(csv_prefix + "_loss.csv",
                        dlr::io::monotone_curve_to_csv(packet.loss, "e_r_mwh"));
    dlr::io::write_file(csv_prefix + "_recovery.csv",
                        dlr::io::monotone_curve_to_csv(packet.recovery, "y_star_h"));
}

void print_simulation_summary(const dlr::SimulationLog& log) {
    std::cout << "steps=" << log.steps.size()
              << " discharged_mwh=" << dlr::io::format_double(log.total_discharged_mwh)
              << " recharged_mwh=" << dlr::io::format_double(log.total_recharged_mwh) << "\n";
    double max_dev = 0.0;
    for (std::size_t i = 0; i < log.initial_states_h.size(); ++i) {
        const double final_x = log.states_h.empty() ? log.initial_states_h[i] : log.states_h.back()[i];
        max_dev = std::max(max_dev, std::abs(final_x - log.initial_states_h[i]));
        std::cout << "device " << i << ": x0_h=" << dlr::io::format_double(log.initial_states_h[i])
                  << " x_final_h=" << dlr::io::format_double(final_x) << "\n";
    }
    std::cout << "max_state_deviation_h=" << dlr::io::format_double(max_dev) << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Flexibility packets for storage fleets: construction, aggregation, "
                 "reservation, dispatch simulation and request-trace analysis"};
    app.set_config("--config");
    app.require_subcommand(1);

    double tol = 1e-9;
    app.add_option("--tol", tol, "absolute tolerance (MWh/MW/h)")
        ->envname("DLR_TOL")
        ->check(CLI::PositiveNumber);

    // packet
    auto* cmd_packet = app.add_subcommand("packet", "build a flexibility packet from a fleet");
    std::string packet_fleet, packet_out, packet_csv_prefix;
    cmd_packet->add_option("--fleet", packet_fleet, "fleet JSON or CSV file")->required();
    cmd_packet->add_option("--out,-o", packet_out, "output packet JSON")->required();
    cmd_packet->add_option("--csv-prefix", packet_csv_prefix, "also write per-curve CSV files");

    // aggregate
    auto* cmd_aggregate = app.add_subcommand("aggregate", "combine packets into one");
    std::vector<std::string> aggregate_inputs;
    std::string aggregate_out;
    cmd_aggregate->add_option("inputs", aggregate_inputs, "packet JSON files")
        ->required()
        ->expected(-1);
    cmd_aggregate->add_option("--out,-o", aggregate_out, "output packet JSON")->required();

    // reserve
    auto* cmd_reserve = app.add_subcommand("reserve", "reserve a discharge energy from a packet");
    std::string reserve_packet, reserve_out;
    double reserve_ed = 0.0;
    cmd_reserve->add_option("--packet", reserve_packet, "packet JSON file")->required();
    cmd_reserve->add_option("--ed", reserve_ed, "reserved discharge energy (MWh)")->required();
    cmd_reserve->add_option("--out,-o", reserve_out, "output reservation JSON")->required();

    // check
    auto* cmd_check = app.add_subcommand("check", "test a cycle against a reservation");
    std::string check_reservation, check_signal;
    cmd_check->add_option("--reservation", check_reservation, "reservation JSON file")->required();
    cmd_check->add_option("--signal", check_signal, "signal CSV file")->required();

    // simulate
    auto* cmd_simulate = app.add_subcommand("simulate", "dispatch a reserved cycle against a fleet");
    std::string sim_fleet, sim_reservation, sim_signal, sim_tree, sim_prefix;
    cmd_simulate->add_option("--fleet", sim_fleet, "fleet JSON or CSV file");
    cmd_simulate->add_option("--reservation", sim_reservation, "reservation JSON file")->required();
    cmd_simulate->add_option("--signal", sim_signal, "signal CSV file")->required();
    cmd_simulate->add_option("--tree", sim_tree, "aggregation tree JSON (broadcast protocol run)");
    cmd_simulate->add_option("--out-prefix", sim_prefix, "prefix for log CSV files")->required();

    // trace
    auto* cmd_trace = app.add_subcommand("trace", "windowed request-trace statistics");
    std::string trace_input, trace_prefix, trace_direction = "up", trace_columns = "sniff";
    double trace_window = 0.25;
    double trace_dt = 1.0 / 60.0;
    double trace_bin_width = 1.0 / 60.0;
    std::size_t trace_samples = 50;
    std::uint64_t trace_seed = 0;
    cmd_trace->add_option("--input", trace_input, "trace CSV file")->required();
    cmd_trace->add_option("--window", trace_window, "window length (h)")->required();
    cmd_trace->add_option("--direction", trace_direction, "service direction")
        ->check(CLI::IsMember({"up", "down"}));
    cmd_trace->add_option("--dt", trace_dt, "sample granularity (h)")->check(CLI::PositiveNumber);
    cmd_trace->add_option("--columns", trace_columns, "input column layout")
        ->check(CLI::IsMember({"sniff", "signed", "updown"}));
    cmd_trace->add_option("--samples", trace_samples, "number of sampled E-p curves");
    cmd_trace->add_option("--seed", trace_seed, "sampling seed");
    cmd_trace->add_option("--bin-width", trace_bin_width, "histogram bin width (h)")
        ->check(CLI::PositiveNumber);
    cmd_trace->add_option("--out-prefix", trace_prefix, "prefix for output CSV files")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        dlr::set_tolerance(tol);

        if (cmd_packet->parsed()) {
            const dlr::FleetState fleet = dlr::io::load_fleet(packet_fleet);
            write_packet_outputs(dlr::packet_from_fleet(fleet), packet_out, packet_csv_prefix);
            return kExitOk;
        }

        if (cmd_aggregate->parsed()) {
            dlr::DlrPacket packet =
                dlr::io::packet_from_json(dlr::io::read_file(aggregate_inputs.front()));
            for (std::size_t i = 1; i < aggregate_inputs.size(); ++i)
                packet = dlr::aggregate_packets(
                    packet, dlr::io::packet_from_json(dlr::io::read_file(aggregate_inputs[i])));
            dlr::io::write_file(aggregate_out, dlr::io::packet_to_json(packet));
            return kExitOk;
        }

        if (cmd_reserve->parsed()) {
            const dlr::DlrPacket packet =
                dlr::io::packet_from_json(dlr::io::read_file(reserve_packet));
            const dlr::Reservation r = dlr::reserve(packet, reserve_ed);
            dlr::io::write_file(reserve_out, dlr::io::reservation_to_json(r));
            return kExitOk;
        }

        if (cmd_check->parsed()) {
            const dlr::Reservation r =
                dlr::io::reservation_from_json(dlr::io::read_file(check_reservation));
            const dlr::StaircaseSignal signal =
                dlr::io::signal_from_csv(dlr::io::read_file(check_signal));
            const dlr::Admissibility verdict = dlr::check_cycle_admissible(r, signal);
            if (verdict) {
                std::cout << "admissible\n";
                return kExitOk;
            }
            std::cout << "rejected: " << verdict.violated_clause << "\n";
            return kExitRejected;
        }

        if (cmd_simulate->parsed()) {
            const dlr::Reservation r =
                dlr::io::reservation_from_json(dlr::io::read_file(sim_reservation));
            const dlr::StaircaseSignal signal =
                dlr::io::signal_from_csv(dlr::io::read_file(sim_signal));
            dlr::SimulationLog log;
            if (!sim_tree.empty()) {
                dlr::ProtocolSimulation protocol(
                    dlr::io::tree_from_json(dlr::io::read_file(sim_tree)));
                log = protocol.run_cycle(r.ed_mwh, signal);
                dlr::io::write_file(sim_prefix + "_protocol.csv",
                                    dlr::io::protocol_messages_to_csv(protocol.messages()));
            } else {
                if (sim_fleet.empty())
                    dlr::raise(dlr::ErrorCode::InvalidArgument,
                               "simulate needs --fleet or --tree");
                log = dlr::simulate_cycle(dlr::io::load_fleet(sim_fleet), r, signal);
            }
            dlr::io::write_file(sim_prefix + "_steps.csv", dlr::io::simulation_steps_to_csv(log));
            dlr::io::write_file(sim_prefix + "_states.csv",
                                dlr::io::simulation_states_to_csv(log));
            print_simulation_summary(log);
            return kExitOk;
        }

        if (cmd_trace->parsed()) {
            dlr::io::TraceColumns columns = dlr::io::TraceColumns::sniff;
            if (trace_columns == "signed") columns = dlr::io::TraceColumns::signed_power;
            if (trace_columns == "updown") columns = dlr::io::TraceColumns::up_down;
            const dlr::RequestTrace trace =
                dlr::io::trace_from_csv(dlr::io::read_file(trace_input), trace_dt, columns);
            const dlr::Direction direction =
                trace_direction == "up" ? dlr::Direction::up : dlr::Direction::down;

            const std::vector<dlr::WindowStats> stats =
                dlr::split_windows(trace, trace_window, direction);
            dlr::io::write_file(trace_prefix + "_stats.csv",
                                dlr::io::window_stats_to_csv(stats, trace.dt_h));
            dlr::io::write_file(
                trace_prefix + "_hist.csv",
                dlr::io::histogram_to_csv(dlr::effective_time_histogram(stats, trace_bin_width)));

            std::vector<dlr::WindowStats> sampled;
            std::mt19937_64 rng(trace_seed);
            std::sample(stats.begin(), stats.end(), std::back_inserter(sampled),
                        trace_samples, rng);
            for (std::size_t i = 0; i < sampled.size(); ++i) {
                char name[32];
                std::snprintf(name, sizeof(name), "_ep_%03zu.csv", i);
                dlr::io::write_file(trace_prefix + name,
                                    dlr::io::ep_curve_to_csv(dlr::ep_of_window(trace, sampled[i])));
            }

            std::cout << "windows=" << stats.size() << " sampled=" << sampled.size() << "\n";
            try {
                std::cout << "correlation=" << dlr::io::format_double(dlr::correlation(stats))
                          << "\n";
            } catch (const dlr::Error& e) {
                if (e.code() != dlr::ErrorCode::UndefinedStatistic) throw;
                std::cout << "correlation=undefined\n";
            }
            return kExitOk;
        }
    } catch (const dlr::Error& e) {
        std::cerr << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "InputError: " << e.what() << "\n";
        return kExitInputError;
    }
    return kExitInputError;
}
