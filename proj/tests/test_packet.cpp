#include "doctest.h"

#include <chrono>
#include <cmath>
#include <numeric>

#include "dlr/dispatch.hpp"
#include "dlr/packet.hpp"
#include "test_support.hpp"

using namespace dlr;
using namespace dlr::testing;

TEST_CASE("single-unit packets") {
    SUBCASE("battery") {
        const DlrPacket p = packet_from_device(Device::from_time_to_go(3.0, 4.0, 4.0, 0.7));
        CHECK(approx_equal(p.discharge, EpCurve({{0, 12}, {3, 0}}), 1e-12));
        CHECK(p.loss.evaluate(4.0) == doctest::Approx(3.0 * 4.0 / 0.7));
        CHECK(p.recovery.evaluate(4.0) == doctest::Approx(3.0 * 4.0 / (0.7 * 4.0)));
        CHECK(p.loss.vertices().size() == 2);
        CHECK(p.recovery.vertices().size() == 2);
    }
    SUBCASE("lossless symmetric unit") {
        const DlrPacket p = packet_from_device(Device::from_time_to_go(5.0, 2.0, 5.0, 1.0));
        CHECK(p.loss.evaluate(1.3) == doctest::Approx(5.0 * 1.3));
        CHECK(p.recovery.evaluate(1.3) == doctest::Approx(1.3));
    }
    SUBCASE("demand turn-down never recovers") {
        const DlrPacket p =
            packet_from_device(Device::from_time_to_go(5.0, 2.0, 5.0, 1.0, /*no_recovery=*/true));
        CHECK(p.loss.final_value() == 0.0);
        CHECK(p.recovery.final_value() == 0.0);
        CHECK(p.loss.x_max() == doctest::Approx(2.0));
    }
}

TEST_CASE("fleet packets") {
    SUBCASE("reference three-battery fleet") {
        const DlrPacket p = packet_from_fleet(three_battery_fleet());
        CHECK(p.discharge.segment_count() == 3);
        CHECK(p.loss.segment_count() == 3);
        CHECK(p.recovery.segment_count() == 5);

        const MonotoneCurve expected_loss({{0, 0},
                                           {1, 3.0 / 0.7 + 3.0 / 0.6 + 6.0 / 0.9},
                                           {2, 2 * 3.0 / 0.7 + 2 * 3.0 / 0.6 + 6.0 / 0.9},
                                           {4, 4 * 3.0 / 0.7 + 2 * 3.0 / 0.6 + 6.0 / 0.9}});
        CHECK(approx_equal(p.loss, expected_loss, 1e-9));

        const double c1 = 3.0 / (0.7 * 4.0); // saturates at 4 h
        const double c2 = 3.0 / (0.6 * 3.0); // saturates at 2 h
        const double c3 = 6.0 / (0.9 * 3.0); // saturates at 1 h
        const MonotoneCurve expected_recovery({{0, 0},
                                               {1, c3},
                                               {c3 / c2, c3},
                                               {2, 2 * c2},
                                               {2 * c2 / c1, 2 * c2},
                                               {4, 4 * c1}});
        CHECK(approx_equal(p.recovery, expected_recovery, 1e-9));
        CHECK(p.recovery.evaluate(1.0) == doctest::Approx(2.2222222222222223));
        CHECK(p.recovery.evaluate(4.0) == doctest::Approx(4.285714285714286));
    }
    SUBCASE("two-battery fleet degenerates to straight lines") {
        const DlrPacket p = packet_from_fleet(two_battery_fleet());
        CHECK(p.loss.segment_count() == 1);
        CHECK(p.recovery.segment_count() == 1);
        CHECK(p.loss.final_value() == doctest::Approx(20.0));
        CHECK(p.recovery.final_value() == doctest::Approx(10.0));
    }
    SUBCASE("single-device fleet matches the unit packet") {
        FleetState fleet;
        fleet.devices = {Device::from_time_to_go(3.0, 4.0, 4.0, 0.7)};
        const DlrPacket a = packet_from_fleet(fleet);
        const DlrPacket b = packet_from_device(fleet.devices[0]);
        CHECK(approx_equal(a.discharge, b.discharge, 1e-12));
        CHECK(approx_equal(a.loss, b.loss, 1e-12));
        CHECK(approx_equal(a.recovery, b.recovery, 1e-12));
    }
}

TEST_CASE("packet aggregation") {
    const FleetState fleet = three_battery_fleet();
    SUBCASE("two units reproduce the fleet formulas") {
        const DlrPacket p = aggregate_packets(packet_from_device(fleet.devices[0]),
                                              packet_from_device(fleet.devices[1]));
        CHECK(approx_equal(p.discharge, EpCurve({{0, 18}, {3, 6}, {6, 0}}), 1e-12));
        CHECK(p.loss.evaluate(2.0) == doctest::Approx(3.0 * 2 / 0.7 + 3.0 * 2 / 0.6));
        CHECK(p.recovery.evaluate(2.0) ==
              doctest::Approx(std::max(3.0 * 2 / (0.7 * 4), 3.0 * 2 / (0.6 * 3))));
        CHECK(p.n_devices == 2);
    }
    SUBCASE("the empty packet is the identity") {
        const DlrPacket a = packet_from_fleet(fleet);
        const DlrPacket sum = aggregate_packets(a, DlrPacket{});
        CHECK(approx_equal(sum.discharge, a.discharge, 1e-12));
        CHECK(approx_equal(sum.loss, a.loss, 1e-12));
        CHECK(approx_equal(sum.recovery, a.recovery, 1e-12));
    }
    SUBCASE("folding unit packets equals the direct construction") {
        Rng rng(10001);
        for (int i = 0; i < 150; ++i) {
            const FleetState f = random_fleet(rng, 6, false);
            DlrPacket folded = packet_from_device(f.devices[0]);
            for (std::size_t k = 1; k < f.devices.size(); ++k)
                folded = aggregate_packets(folded, packet_from_device(f.devices[k]));
            const DlrPacket direct = packet_from_fleet(f);
            CHECK(approx_equal(folded.discharge, direct.discharge, 1e-9));
            CHECK(approx_equal(folded.loss, direct.loss, 1e-9));
            CHECK(approx_equal(folded.recovery, direct.recovery, 1e-9));
        }
    }
    SUBCASE("fleet splits aggregate to the whole") {
        Rng rng(10002);
        for (int i = 0; i < 100; ++i) {
            const FleetState f = random_fleet(rng, 6, false);
            const std::size_t cut =
                1 + static_cast<std::size_t>(uniform(rng, 0.0, static_cast<double>(f.devices.size() - 1)));
            FleetState left, right;
            left.devices.assign(f.devices.begin(), f.devices.begin() + static_cast<long>(cut));
            right.devices.assign(f.devices.begin() + static_cast<long>(cut), f.devices.end());
            if (right.devices.empty()) continue;
            const DlrPacket joined =
                aggregate_packets(packet_from_fleet(left), packet_from_fleet(right));
            const DlrPacket direct = packet_from_fleet(f);
            CHECK(approx_equal(joined.discharge, direct.discharge, 1e-9));
            CHECK(approx_equal(joined.loss, direct.loss, 1e-9));
            CHECK(approx_equal(joined.recovery, direct.recovery, 1e-9));
        }
    }
    SUBCASE("packet sizes stay linear in the fleet") {
        Rng rng(10003);
        for (int i = 0; i < 100; ++i) {
            const FleetState f = random_fleet(rng, 8, false);
            const DlrPacket p = packet_from_fleet(f);
            const std::size_t n = f.devices.size();
            CHECK(p.discharge.vertices().size() <= n + 1);
            CHECK(p.loss.vertices().size() <= n + 1);
            CHECK(p.recovery.vertices().size() <= 2 * n);
        }
    }
}

TEST_CASE("loss curve shape") {
    Rng rng(10004);
    for (int i = 0; i < 200; ++i) {
        const FleetState f = random_fleet(rng, 6, false);
        const DlrPacket p = packet_from_fleet(f);
        double full_rate = 0.0;
        for (const Device& d : f.devices) full_rate += d.p_discharge_max_mw / d.eta;
        double prev_slope = full_rate + 1e-9;
        const auto& vs = p.loss.vertices();
        for (std::size_t k = 0; k + 1 < vs.size(); ++k) {
            const double slope = (vs[k + 1].value - vs[k].value) / (vs[k + 1].x_h - vs[k].x_h);
            CHECK(slope <= prev_slope + 1e-9); // concave
            CHECK(slope <= full_rate + 1e-9);
            CHECK(slope >= -1e-12);
            prev_slope = slope;
        }
        // losses are non-negative for physical efficiencies
        const double ed = p.discharge.total_energy();
        CHECK(p.loss.final_value() >= ed - 1e-9);
    }
}

TEST_CASE("reservations") {
    const DlrPacket packet = packet_from_fleet(three_battery_fleet());
    SUBCASE("half energy") {
        const Reservation r = reserve(packet, 12.0);
        CHECK(r.x_star_h == doctest::Approx(1.0));
        CHECK(r.er_mwh == doctest::Approx(15.952380952380953));
        CHECK(r.y_star_h == doctest::Approx(2.2222222222222223));
        CHECK(approx_equal(r.truncated_capacity, EpCurve({{0, 12}, {12, 0}}), 1e-9));
    }
    SUBCASE("zero energy") {
        const Reservation r = reserve(packet, 0.0);
        CHECK(r.x_star_h == 0.0);
        CHECK(r.er_mwh == 0.0);
        CHECK(r.y_star_h == 0.0);
        CHECK(recharge_virtual_battery(r).p_max_mw == 0.0);
    }
    SUBCASE("full energy") {
        const Reservation r = reserve(packet, 24.0);
        CHECK(r.x_star_h == doctest::Approx(4.0));
        CHECK(r.er_mwh == doctest::Approx(33.80952380952381));
        CHECK(r.y_star_h == doctest::Approx(4.285714285714286));
    }
    SUBCASE("beyond the fleet") {
        CHECK_THROWS_AS(reserve(packet, 24.5), Error);
    }
    SUBCASE("virtual battery ratios") {
        const Reservation r = reserve(packet, 12.0);
        const VirtualBattery vb = recharge_virtual_battery(r);
        CHECK(vb.e_mwh == doctest::Approx(15.952380952380953));
        CHECK(vb.p_max_mw == doctest::Approx(15.952380952380953 / 2.2222222222222223));

        // a single battery reserved in full charges at its own rating
        const DlrPacket single = packet_from_device(Device::from_time_to_go(3.0, 4.0, 4.0, 0.7));
        const Reservation rs = reserve(single, 12.0);
        const VirtualBattery vbs = recharge_virtual_battery(rs);
        CHECK(vbs.p_max_mw == doctest::Approx(4.0));
        CHECK(vbs.e_mwh == doctest::Approx(12.0 / 0.7));
    }
    SUBCASE("outputs are monotone in the reserved energy") {
        Rng rng(10005);
        for (int i = 0; i < 50; ++i) {
            const DlrPacket p = packet_from_fleet(random_fleet(rng, 6, false));
            double prev_x = -1.0, prev_er = -1.0, prev_y = -1.0;
            for (double f = 0.0; f <= 1.0; f += 0.1) {
                const Reservation r = reserve(p, f * p.discharge.total_energy());
                CHECK(r.x_star_h >= prev_x - 1e-12);
                CHECK(r.er_mwh >= prev_er - 1e-12);
                CHECK(r.y_star_h >= prev_y - 1e-12);
                prev_x = r.x_star_h;
                prev_er = r.er_mwh;
                prev_y = r.y_star_h;
            }
        }
    }
}

TEST_CASE("partial utilisation") {
    const DlrPacket packet = packet_from_fleet(three_battery_fleet());
    const Reservation r = reserve(packet, 12.0);
    SUBCASE("recharge shrink keeps the recovery time") {
        const Reservation updated = with_reduced_recharge(r, 10.0);
        CHECK(updated.er_mwh == doctest::Approx(10.0));
        CHECK(updated.y_star_h == doctest::Approx(r.y_star_h));
        CHECK(updated.ed_mwh == doctest::Approx(r.ed_mwh));
        CHECK_THROWS_AS(with_reduced_recharge(r, 16.0), Error);
    }
    SUBCASE("reserved-energy shrink recomputes everything") {
        const Reservation updated = reduce_reservation(packet, r, 6.0);
        const Reservation fresh = reserve(packet, 6.0);
        CHECK(updated.x_star_h == doctest::Approx(fresh.x_star_h));
        CHECK(updated.er_mwh == doctest::Approx(fresh.er_mwh));
        CHECK_THROWS_AS(reduce_reservation(packet, r, 13.0), Error);
    }
}

TEST_CASE("equal-feasibility truncation") {
    Rng rng(10006);
    for (int i = 0; i < 200; ++i) {
        const FleetState f = random_fleet(rng, 5, false);
        const EpCurve full = capacity(f);
        const double ed = uniform(rng, 0.0, full.total_energy());
        const EpCurve truncated = convex_hull_truncate(full, ed);

        const double dt = uniform(rng, 0.25, 1.0);
        StaircaseSignal sig;
        if (i % 2 == 0) {
            std::vector<double> states, powers;
            for (const Device& d : f.devices) {
                states.push_back(time_to_go(d));
                powers.push_back(d.p_discharge_max_mw);
            }
            sig = random_feasible_discharge(rng, states, powers, dt, uniform(rng, 0.0, ed));
        } else {
            sig = random_staircase(rng, 8, 12.0, dt);
            const double energy = sig.energy_mwh();
            if (energy > 0.0) {
                const double scale = uniform(rng, 0.0, ed) / energy;
                for (double& level : sig.levels_mw) level *= scale;
            }
        }
        CHECK(dominates(full, ep_transform(sig)) == dominates(truncated, ep_transform(sig)));
    }
}

TEST_CASE("admissibility of cycles") {
    const DlrPacket packet = packet_from_fleet(three_battery_fleet());
    const Reservation r = reserve(packet, 12.0);
    const double rate = r.recharge_power_bound_mw();

    auto boundary_cycle = [&](double discharge_level) {
        StaircaseSignal signal{1.0, {discharge_level}};
        double remaining = r.er_mwh;
        while (remaining > 1e-12) {
            const double take = std::min(remaining, rate);
            signal.levels_mw.push_back(-take);
            remaining -= take;
        }
        return signal;
    };

    SUBCASE("boundary cycle is admissible") {
        CHECK(check_cycle_admissible(r, boundary_cycle(12.0)).admissible);
    }
    SUBCASE("discharge energy must match") {
        StaircaseSignal signal = boundary_cycle(12.0);
        signal.levels_mw[0] = 11.0;
        const Admissibility verdict = check_cycle_admissible(r, signal);
        CHECK_FALSE(verdict.admissible);
        CHECK(verdict.violated_clause == "discharge_energy_mismatch");
    }
    SUBCASE("recharge rate bound is enforced") {
        StaircaseSignal signal{1.0, {12.0}};
        signal.levels_mw.push_back(-8.0); // bound is ~7.18 MW
        double remaining = r.er_mwh - 8.0;
        while (remaining > 1e-12) {
            const double take = std::min(remaining, rate);
            signal.levels_mw.push_back(-take);
            remaining -= take;
        }
        const Admissibility verdict = check_cycle_admissible(r, signal);
        CHECK_FALSE(verdict.admissible);
        CHECK(verdict.violated_clause == "recharge_rate_exceeded");
    }
    SUBCASE("empty signal fails the energy clause") {
        const Admissibility verdict = check_cycle_admissible(r, {1.0, {}});
        CHECK_FALSE(verdict.admissible);
        CHECK(verdict.violated_clause == "discharge_energy_mismatch");
    }
    SUBCASE("discharge beyond the truncated capacity is rejected") {
        // 24 MW for half an hour carries the right energy but exceeds the
        // 12 MW fleet rating, so the transform is positive past p = 12
        StaircaseSignal breach{0.5, {24.0}};
        double remaining = r.er_mwh;
        while (remaining > 1e-12) {
            const double take = std::min(remaining, rate * 0.5);
            breach.levels_mw.push_back(-take / 0.5);
            remaining -= take;
        }
        CHECK(ep_transform(split_round_trip(breach).discharge).evaluate(12.0) >
              r.truncated_capacity.evaluate(12.0));
        const Admissibility verdict = check_cycle_admissible(r, breach);
        CHECK_FALSE(verdict.admissible);
        CHECK(verdict.violated_clause == "discharge_not_dominated");
    }
}

TEST_CASE("admissible cycles simulate successfully") {
    Rng rng(10007);
    for (int i = 0; i < 100; ++i) {
        const FleetState f = random_fleet(rng, 5, false);
        const DlrPacket packet = packet_from_fleet(f);
        const double ed = uniform(rng, 0.0, packet.discharge.total_energy());
        const Reservation r = reserve(packet, ed);
        const double dt = uniform(rng, 0.25, 1.0);

        std::vector<double> states, powers;
        for (const Device& d : f.devices) {
            states.push_back(std::min(time_to_go(d), r.x_star_h));
            powers.push_back(d.p_discharge_max_mw);
        }
        StaircaseSignal signal = random_feasible_discharge(rng, states, powers, dt, ed);

        const double rate = r.recharge_power_bound_mw();
        double remaining = r.er_mwh;
        while (remaining > 1e-12) {
            const double take = std::min(remaining, uniform(rng, 0.5, 1.0) * rate * dt);
            signal.levels_mw.push_back(-take / dt);
            remaining -= take;
        }
        REQUIRE(check_cycle_admissible(r, signal).admissible);
        const SimulationLog log = simulate_cycle(f, r, signal);
        for (std::size_t k = 0; k < f.devices.size(); ++k) {
            const double dev_mwh = std::abs(log.states_h.back()[k] - log.initial_states_h[k]) *
                                   f.devices[k].p_discharge_max_mw;
            CHECK(dev_mwh <= 1e-9);
        }
    }
}

TEST_CASE("demand-response units through a full cycle") {
    FleetState fleet;
    fleet.devices = {
        Device::from_time_to_go(2.0, 1.0, 2.0, 1.0),               // pure shift
        Device::from_time_to_go(1.5, 2.0, 1.0, 0.8),               // excess recovery
        Device::from_time_to_go(1.0, 0.5, 1.0, 2.0, false, true),  // incomplete recovery
        Device::from_time_to_go(0.5, 4.0, 0.5, 1.0, true),         // turn-down, no recovery
    };
    const DlrPacket packet = packet_from_fleet(fleet);
    CHECK(packet.loss.final_value() == doctest::Approx(2.0 + 3.75 + 0.25));
    CHECK(packet.recovery.final_value() == doctest::Approx(3.75));

    const double ed = packet.discharge.total_energy();
    CHECK(ed == doctest::Approx(7.5));
    const Reservation r = reserve(packet, ed);
    CHECK(r.er_mwh == doctest::Approx(6.0));
    CHECK(r.y_star_h == doctest::Approx(3.75));
    CHECK(r.recharge_power_bound_mw() == doctest::Approx(1.6));

    // boundary cycle: worst-case discharge, then recharge at the rate bound
    StaircaseSignal signal{0.5, {5, 4, 2, 2, 0.5, 0.5, 0.5, 0.5}};
    double remaining = r.er_mwh;
    while (remaining > 1e-12) {
        const double take = std::min(remaining, 1.6 * 0.5);
        signal.levels_mw.push_back(-take / 0.5);
        remaining -= take;
    }
    REQUIRE(check_cycle_admissible(r, signal).admissible);
    const SimulationLog log = simulate_cycle(fleet, r, signal);

    // storage-like units recover their state; the turn-down unit stays down
    CHECK(log.states_h.back()[0] == doctest::Approx(1.0));
    CHECK(log.states_h.back()[1] == doctest::Approx(2.0));
    CHECK(log.states_h.back()[2] == doctest::Approx(0.5));
    CHECK(log.states_h.back()[3] == doctest::Approx(0.0));
    CHECK(log.total_discharged_mwh == doctest::Approx(7.5));
    CHECK(log.total_recharged_mwh == doctest::Approx(6.0));
}

TEST_CASE("large fleets build in quasilinear time") {
    Rng rng(10009);
    const std::size_t n = 20000;
    FleetState fleet;
    fleet.devices.reserve(n);
    for (std::size_t i = 0; i < n; ++i) fleet.devices.push_back(random_device(rng, false));

    const auto t0 = std::chrono::steady_clock::now();
    const DlrPacket packet = packet_from_fleet(fleet);
    const Reservation r = reserve(packet, 0.5 * packet.discharge.total_energy());
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    CHECK(packet.discharge.vertices().size() <= n + 1);
    CHECK(packet.loss.vertices().size() <= n + 1);
    CHECK(packet.recovery.vertices().size() <= 2 * n);
    CHECK(r.truncated_capacity.total_energy() ==
          doctest::Approx(0.5 * packet.discharge.total_energy()).epsilon(1e-9));
    CHECK(seconds < 2.0);
}

TEST_CASE("homogeneous fleets") {
    SUBCASE("uniform time-to-go gives a straight discharge line") {
        Rng rng(10008);
        for (int i = 0; i < 50; ++i) {
            const double x = uniform(rng, 0.5, 8.0);
            FleetState f;
            double p_sum = 0.0;
            const int n = 2 + static_cast<int>(uniform(rng, 0.0, 4.0));
            for (int k = 0; k < n; ++k) {
                const double p = uniform(rng, 0.5, 10.0);
                p_sum += p;
                f.devices.push_back(Device::from_time_to_go(p, x, uniform(rng, 0.5, 10.0),
                                                            uniform(rng, 0.5, 1.0)));
            }
            const EpCurve cap = capacity(f);
            CHECK(cap.vertices().size() == 2);
            CHECK(cap.p_max() == doctest::Approx(p_sum).epsilon(1e-12));
            CHECK(cap.total_energy() == doctest::Approx(p_sum * x).epsilon(1e-12));
        }
    }
    SUBCASE("full homogeneity collapses the recharge battery") {
        // uniform x and uniform p*x/(eta*p_charge): the recharge virtual
        // battery at full reservation carries sum p x / eta
        FleetState f;
        f.devices = {Device::from_time_to_go(4.0, 2.0, 2.0, 0.8),
                     Device::from_time_to_go(6.0, 2.0, 3.0, 0.8)};
        const DlrPacket packet = packet_from_fleet(f);
        const double total = packet.discharge.total_energy();
        const Reservation r = reserve(packet, total);
        CHECK(r.er_mwh == doctest::Approx((4.0 * 2 + 6.0 * 2) / 0.8));
    }
}
