#pragma once

#include <optional>

#include "comc/fundamental_diagram.hpp"

namespace comc::sim {

struct LaneChangeParams {
  double incentive = 3.0;     // anticipated speed gain to change [m/s]
  double lookahead = 100.0;   // leaders further away do not limit anticipated speed [m]
  double cooldown = 5.0;      // minimum time between changes of one vehicle [s]
  double b_accept = 3.0;      // follower braking tolerated by a discretionary change [m/s^2]
  // Mandatory merges from the acceleration lane: tolerated braking grows
  // linearly from merge_b_start at MP to merge_b_end at the lane end.
  double merge_b_start = 1.5;
  double merge_b_end = 4.0;
  // Mandatory merges use this fraction of the cc1 time gap.
  double merge_gap_factor = 0.6;
  // Platoon members accept this fraction of the usual safe gaps.
  double platoon_tolerance = 0.9;
};

// Net gap [m] and speed of a neighbour in the target lane.
struct Neighbor {
  double gap = 0.0;
  double v = 0.0;
};

enum class LaneChangeDecision { kKeep, kChange };

// cc0 + f cc1 v_follower + max(0, v_follower - v_leader)^2 / (2 b)
double required_gap(double v_follower, double v_leader, const FdParams& p, double b,
                    double f = 1.0);

// Speed a driver expects in a lane given its leader there.
double anticipated_speed(double v_desired, const std::optional<Neighbor>& lead,
                         const LaneChangeParams& lc);

struct LaneChangeQuery {
  double v = 0.0;
  double v_desired = 0.0;
  std::optional<Neighbor> current_lead;
  std::optional<Neighbor> target_lead;
  std::optional<Neighbor> target_lag;
  bool direction_allowed = true;  // false inside an active prohibition segment
  bool role_allows = true;        // false for facilitators and platoon vehicles
};

// Discretionary change between mainline lanes: direction, incentive, safety.
LaneChangeDecision lane_change_decision(const LaneChangeQuery& q, const FdParams& p,
                                        const LaneChangeParams& lc);

// Safety part only: tolerated follower braking b, time-gap factor f, and an
// overall scale on both required gaps.
bool gaps_acceptable(double v, const std::optional<Neighbor>& lead,
                     const std::optional<Neighbor>& lag, const FdParams& p, double b,
                     double f = 1.0, double scale = 1.0);

// Tolerated follower braking for a merge at `progress` in [0, 1] along the
// acceleration lane.
double merge_braking(double progress, const LaneChangeParams& lc);

}  // namespace comc::sim
