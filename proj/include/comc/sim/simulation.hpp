#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "comc/optimizer.hpp"
#include "comc/sim/car_following.hpp"
#include "comc/sim/coordination.hpp"
#include "comc/sim/lane_change.hpp"
#include "comc/sim/types.hpp"

namespace comc::sim {

struct MicroParams {
  CarFollowingParams cf;
  LaneChangeParams lc;
  double b_comfort = 1.5;       // facilitator braking to v_c [m/s^2]
  double sc_margin = 50.0;      // added to the braking distance in the d* floor [m]
  double release_margin = 0.1;  // platoon leader accelerates this much above v_c^2/(2s)
  double stop_speed = 0.1;      // ramp vehicles below this at the stop line join the queue [m/s]
  // Uncontrolled merging: once a ramp vehicle has stood in the acceleration
  // lane for yield_patience, the first outer-lane vehicle behind it that can
  // stop with at most yield_b brakes for it.
  bool yielding = true;
  double yield_b = 2.0;
  double yield_patience = 30.0;  // [s]
  double yield_range = 400.0;  // search distance behind the merging vehicle [m]
};

struct SimConfig {
  double dt = 0.1;
  double duration = 7200.0;
  std::uint64_t seed = 1;
  bool control = false;
  NetworkGeometry geometry;
  CoordinationInputs inputs;   // q_m and lambda double as the demand
  SolverSettings solver;
  MicroParams micro;
  double sample_period = 1.0;  // trajectory sampling [s]
  bool generate_traffic = true;
  // Plan executed when control is on. Solved from `inputs` when empty.
  std::optional<ControlPlan> plan;

  void validate() const;
};

struct LeaderRecord {
  int cycle = 0;
  double t = 0.0;
  double v = 0.0;    // speed when crossing MP
  double v_c = 0.0;
  bool degraded = false;
};

struct SimStats {
  long long spawned_mainline = 0;
  long long spawned_ramp = 0;
  long long retired_mainline = 0;
  long long retired_ramp = 0;
  int cycles_requested = 0;
  int cycles_completed = 0;
  int cycles_degraded = 0;
  int merge_failures = 0;  // non-degraded cycles whose platoon did not end up in the gap
  std::vector<LeaderRecord> leader_mp;
  long long lane_changes = 0;
  long long outer_to_inner_during_coordination = 0;
  long long prohibited_changes = 0;
  double coordination_time = 0.0;  // time with a non-idle cycle [s]
  int max_wp_queue = 0;
  long long ticks = 0;
};

struct RunResult {
  std::vector<Event> events;
  std::vector<TripRecord> trips;
  SimStats stats;
  std::optional<ControlPlan> plan;
};

class Simulation {
 public:
  // Throws ValidationError, InfeasibleDemandError, or InfeasiblePlanError
  // (control on and no feasible plan).
  explicit Simulation(SimConfig cfg, TrajectorySink* sink = nullptr);
  ~Simulation();
  Simulation(Simulation&&) noexcept;
  Simulation& operator=(Simulation&&) noexcept;

  // One tick. Throws SimulationInvariantError on collision, conservation or
  // speed-cap violations.
  void step();
  bool finished() const;
  double time() const;

  // Places a vehicle by hand; returns its id. Used to build test worlds.
  int add_vehicle(const VehicleState& s);

  std::vector<VehicleState> vehicles() const;
  const CoordinationCycle& cycle() const;
  const SimStats& stats() const;
  const std::vector<Event>& events() const;
  const std::vector<TripRecord>& trips() const;
  const std::optional<ControlPlan>& plan() const;

  RunResult take_result();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Steps a fresh Simulation to the end of cfg.duration.
RunResult run(const SimConfig& cfg, TrajectorySink* sink = nullptr);

}  // namespace comc::sim
