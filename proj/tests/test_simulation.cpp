#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "comc/error.hpp"
#include "comc/metrics.hpp"
#include "comc/sim/simulation.hpp"
#include "comc/units.hpp"

namespace comc::sim {
namespace {

SimConfig empty_world(double duration = 60.0) {
  SimConfig c;
  c.duration = duration;
  c.generate_traffic = false;
  return c;
}

SimConfig scenario(double q_m_vph, double q_r_vph, bool control, double duration,
                   std::uint64_t seed = 1) {
  SimConfig c;
  c.inputs.q_m = units::vph_to_vps(q_m_vph);
  c.inputs.lambda = units::vph_to_vps(q_r_vph);
  c.control = control;
  c.duration = duration;
  c.seed = seed;
  return c;
}

VehicleState vehicle(Lane lane, double x, double v, double v_desired,
                     VehicleClass cls = VehicleClass::kMainline) {
  VehicleState s;
  s.cls = cls;
  s.lane = lane;
  s.x = x;
  s.v = v;
  s.v_desired = v_desired;
  return s;
}

TEST(Simulation, EmptyWorldStaysEmpty) {
  Simulation sim(empty_world());
  for (int i = 0; i < 100; ++i) sim.step();
  EXPECT_TRUE(sim.vehicles().empty());
  EXPECT_TRUE(sim.events().empty());
  EXPECT_TRUE(sim.trips().empty());
}

TEST(Simulation, ZeroDurationGivesEmptyOutputs) {
  auto c = scenario(2000, 500, false, 0.0);
  const RunResult r = run(c);
  EXPECT_TRUE(r.trips.empty());
  EXPECT_TRUE(r.events.empty());
  EXPECT_EQ(r.stats.ticks, 0);
}

TEST(Simulation, FreeVehicleAdvancesAtDesiredSpeed) {
  Simulation sim(empty_world());
  const double v = 120.0 / 3.6;
  sim.add_vehicle(vehicle(Lane::kInner, 100.0, v, v));
  sim.step();
  EXPECT_DOUBLE_EQ(sim.vehicles().front().x, 100.0 + v * 0.1);
  EXPECT_DOUBLE_EQ(sim.vehicles().front().v, v);
}

TEST(Simulation, PlatoonSpacingConvergesToEquilibrium) {
  SimConfig c = empty_world(90.0);
  c.micro.lc.incentive = 1e3;  // keep everyone in one lane
  Simulation sim(c);
  const double v = 20.0;
  const double v_free = 120.0 / 3.6;
  sim.add_vehicle(vehicle(Lane::kInner, 600.0, v, v));
  for (int k = 1; k < 20; ++k) sim.add_vehicle(vehicle(Lane::kInner, 600.0 - 30.0 * k, v, v_free));
  while (!sim.finished()) sim.step();
  auto vs = sim.vehicles();
  ASSERT_EQ(vs.size(), 20u);
  std::sort(vs.begin(), vs.end(), [](const auto& a, const auto& b) { return a.x > b.x; });
  const FdParams p;
  const double expected = p.cc0 + p.veh_length + p.cc1 * v;
  for (std::size_t k = 1; k < vs.size(); ++k) {
    EXPECT_EQ(vs[k].lane, Lane::kInner);
    EXPECT_NEAR(vs[k - 1].x - vs[k].x, expected, 0.02 * expected) << "follower " << k;
  }
}

TEST(Simulation, OuterVehicleBehindSlowLeaderMovesToOpenInnerLane) {
  Simulation sim(empty_world());
  const double v_free = 120.0 / 3.6;
  const int slow = sim.add_vehicle(vehicle(Lane::kOuter, 900.0, 23.7, 23.7));
  const int follower = sim.add_vehicle(vehicle(Lane::kOuter, 850.0, 33.0, v_free));
  sim.add_vehicle(vehicle(Lane::kInner, 650.0, 33.0, v_free));
  sim.step();
  for (const auto& s : sim.vehicles()) {
    if (s.id == follower) {
      EXPECT_EQ(s.lane, Lane::kInner);
    }
    if (s.id == slow) {
      EXPECT_EQ(s.lane, Lane::kOuter);
    }
  }
  EXPECT_EQ(sim.stats().lane_changes, 1);
}

TEST(Simulation, RampVehicleEntersMainlineUncontrolled) {
  Simulation sim(empty_world(60.0));
  const int id = sim.add_vehicle(vehicle(Lane::kRamp, 1500.0, 60.0 / 3.6, 60.0 / 3.6, VehicleClass::kRamp));
  while (!sim.finished()) sim.step();
  const auto vs = sim.vehicles();
  bool retired = true;
  for (const auto& s : vs) retired = retired && s.id != id;
  EXPECT_TRUE(retired);
  EXPECT_EQ(sim.stats().retired_ramp, 1);
}

// Control world with a supplied plan and a hand-built WP queue.
SimConfig control_world(const ControlPlan& plan) {
  SimConfig c = empty_world(30.0);
  c.control = true;
  c.plan = plan;
  return c;
}

void queue_ramp_vehicles(Simulation& sim, int count) {
  for (int k = 0; k < count; ++k) {
    sim.add_vehicle(vehicle(Lane::kRamp, 1699.0 - 6.5 * k, 0.0, 60.0 / 3.6, VehicleClass::kRamp));
  }
}

TEST(Coordination, QueueBelowPlatoonSizeStaysIdle) {
  const auto plan = solve(scenario(2000, 500, true, 1).inputs);
  ASSERT_TRUE(plan);
  Simulation sim(control_world(*plan));
  queue_ramp_vehicles(sim, plan->n - 1);
  for (int i = 0; i < 20; ++i) sim.step();
  EXPECT_EQ(sim.cycle().phase, CyclePhase::kIdle);
  EXPECT_EQ(sim.stats().cycles_requested, 0);
}

TEST(Coordination, FullQueueRequestsAndWaitsForFacilitator) {
  const auto plan = solve(scenario(2000, 500, true, 1).inputs);
  ASSERT_TRUE(plan);
  Simulation sim(control_world(*plan));
  queue_ramp_vehicles(sim, plan->n);
  for (int i = 0; i < 5; ++i) sim.step();
  EXPECT_EQ(sim.cycle().phase, CyclePhase::kRequested);

  const double x_f = 2000.0 - plan->d - 150.0;
  const int fac = sim.add_vehicle(vehicle(Lane::kOuter, x_f, 120.0 / 3.6, 120.0 / 3.6));
  sim.step();
  EXPECT_GE(sim.cycle().phase, CyclePhase::kGapCreation);
  EXPECT_EQ(sim.cycle().facilitator_id, fac);
  EXPECT_EQ(static_cast<int>(sim.cycle().platoon_ids.size()), plan->n);
  EXPECT_LT(sim.cycle().d_star, plan->d);
}

TEST(Coordination, FacilitatorIsFirstOuterVehicleBehindSc) {
  const auto plan = solve(scenario(2000, 500, true, 1).inputs);
  ASSERT_TRUE(plan);
  Simulation sim(control_world(*plan));
  const double sc = 2000.0 - plan->d;
  sim.add_vehicle(vehicle(Lane::kOuter, sc + 20.0, 33.0, 120.0 / 3.6));  // past SC
  const int first = sim.add_vehicle(vehicle(Lane::kOuter, sc - 40.0, 33.0, 120.0 / 3.6));
  sim.add_vehicle(vehicle(Lane::kOuter, sc - 200.0, 33.0, 120.0 / 3.6));
  queue_ramp_vehicles(sim, plan->n);
  sim.step();
  EXPECT_EQ(sim.cycle().facilitator_id, first);
}

TEST(Run, SameSeedIdenticalRecords) {
  const auto c = scenario(2000, 500, true, 900.0, 3);
  const RunResult a = run(c);
  const RunResult b = run(c);
  ASSERT_EQ(a.trips.size(), b.trips.size());
  for (std::size_t i = 0; i < a.trips.size(); ++i) {
    EXPECT_EQ(a.trips[i].vehicle_id, b.trips[i].vehicle_id);
    EXPECT_EQ(a.trips[i].entry_time, b.trips[i].entry_time);
    EXPECT_EQ(a.trips[i].exit_time, b.trips[i].exit_time);
  }
  ASSERT_EQ(a.events.size(), b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    EXPECT_EQ(a.events[i].t, b.events[i].t);
    EXPECT_EQ(a.events[i].type, b.events[i].type);
    EXPECT_EQ(a.events[i].fields, b.events[i].fields);
  }
}

TEST(Run, DifferentSeedsDiffer) {
  const RunResult a = run(scenario(2000, 500, false, 600.0, 1));
  const RunResult b = run(scenario(2000, 500, false, 600.0, 2));
  std::vector<double> ta, tb;
  for (const auto& t : a.trips) ta.push_back(t.exit_time);
  for (const auto& t : b.trips) tb.push_back(t.exit_time);
  EXPECT_NE(ta, tb);
}

TEST(Run, InfeasiblePlanRejected) {
  auto c = scenario(2000, 500, true, 60.0);
  c.inputs.rho = 0.0;
  EXPECT_THROW(Simulation{c}, InfeasiblePlanError);
}

TEST(Run, CyclesAreSerialized) {
  const RunResult r = run(scenario(2000, 500, true, 1800.0));
  int open = 0;
  int requested = 0;
  for (const auto& e : r.events) {
    if (e.type == "cycle_requested") {
      EXPECT_EQ(open, 0) << "overlapping request at t=" << e.t;
      ++open;
      ++requested;
    } else if (e.type == "cycle_idle") {
      --open;
    }
  }
  EXPECT_GT(requested, 5);
  EXPECT_EQ(r.stats.prohibited_changes, 0);
}

TEST(Run, FacilitatorAppointedBehindSc) {
  const RunResult r = run(scenario(2200, 500, true, 1800.0));
  ASSERT_TRUE(r.plan);
  int appointed = 0;
  for (const auto& e : r.events) {
    if (e.type != "facilitator_appointed") continue;
    ++appointed;
    for (const auto& [k, v] : e.fields) {
      if (k == "p_f") {
        EXPECT_GE(std::get<double>(v), r.plan->d);
      }
    }
  }
  EXPECT_GT(appointed, 0);
}

TEST(Run, LeaderMeetsCooperativeSpeedAtMp) {
  const RunResult r = run(scenario(2000, 500, true, 1800.0));
  ASSERT_FALSE(r.stats.leader_mp.empty());
  for (const auto& l : r.stats.leader_mp) {
    if (!l.degraded) {
      EXPECT_NEAR(l.v, l.v_c, 0.1) << "cycle " << l.cycle;
    }
  }
}

TEST(Run, BaseCaseLowDemandHasMinorDelays) {
  const RunResult r = run(scenario(2000, 300, false, 7200.0));
  const DelayReport rep = aggregate_report(r.trips);
  ASSERT_TRUE(rep.overall().mean_delay());
  EXPECT_LT(*rep.overall().mean_delay(), 10.0);
}

TEST(SimConfig, ValidationRejectsBadStep) {
  SimConfig c;
  c.dt = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = SimConfig{};
  c.duration = -1.0;
  EXPECT_THROW(c.validate(), ValidationError);
}

}  // namespace
}  // namespace comc::sim
