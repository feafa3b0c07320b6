#pragma once

#include <string_view>
#include <vector>

#include "comc/optimizer.hpp"

namespace comc::sim {

enum class CyclePhase { kIdle, kRequested, kGapCreation, kPlatoonReleased, kMerging, kComplete };

std::string_view to_string(CyclePhase p);

struct CoordinationCycle {
  int id = -1;
  CyclePhase phase = CyclePhase::kIdle;
  ControlPlan plan;
  double d_star = 0.0;        // adjusted speed-change position, distance to MP [m]
  double decel_start = 0.0;   // distance to MP where the facilitator starts braking [m]
  int facilitator_id = -1;
  std::vector<int> platoon_ids;  // front to back
  double release_time = 0.0;
  double leader_accel = 0.0;
  double predicted_mp_arrival = 0.0;  // facilitator
  bool degraded = false;
  double requested_at = 0.0;
};

// Speed-change position with a floor: d - (p_f - d) v_c / (v_f - v_c), never below d_min.
// Returns d unchanged when v_f <= v_c.
double adjust_sc_position(double d, double v_c, double p_f, double v_f, double d_min);

// Braking distance from v_f to v_c at rate b plus a margin.
double sc_floor(double v_f, double v_c, double b, double margin);

// Distance to MP where braking at rate b must begin so that arrival times
// downstream match an instantaneous speed change at d_star.
double decel_start_distance(double d_star, double v_f, double v_c, double b);

// Time until a vehicle p metres before MP at speed v reaches MP, cruising at
// v until `decel_start` metres before MP, then braking at b down to v_c.
double time_to_mp(double p, double v, double decel_start, double v_c, double b);

// WP-to-MP travel time of a leader starting from rest: accelerate at a to v_c,
// then cruise. Requires v_c^2 / (2a) <= s.
double leader_travel_time(double v_c, double a, double s);

struct ReleasePlan {
  double release_time = 0.0;
  double accel = 0.0;
  double leader_mp_target = 0.0;
  bool degraded = false;
};

// Leader reaches MP at v_c exactly n h_c before the facilitator. a_base is
// the preferred acceleration; it is raised, up to a_max, when the preferred
// release time has already passed. Beyond a_max the cycle is degraded and
// the leader leaves immediately at a_max.
ReleasePlan plan_platoon_release(double now, double facilitator_mp_arrival, int n, double h_c,
                                 double v_c, double s, double a_base, double a_max);

}  // namespace comc::sim
