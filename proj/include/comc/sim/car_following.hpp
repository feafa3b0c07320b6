#pragma once

#include <limits>

#include "comc/fundamental_diagram.hpp"

namespace comc::sim {

struct CarFollowingParams {
  double a_max = 2.0;   // normal vehicles [m/s^2]
  double b_max = 6.0;   // hardest braking per tick [m/s^2]
  double b_safe = 2.75; // braking assumed when closing on a slower leader [m/s^2]
};

inline constexpr double kNoLeader = std::numeric_limits<double>::infinity();

// Largest speed that keeps `gap` consistent with the equilibrium spacing and
// still allows stopping behind a leader braking to v_leader at b_safe.
// (gap - cc0)/cc1 alone reproduces the W99 headway in steady state.
double safe_speed(double gap, double v_leader, const FdParams& p, double b_safe);

// One tick of the safe-speed rule:
//   v' = max(min(v + a_max dt, v_desired, v_safe), max(0, v - b_max dt))
// gap is the net distance to the leader's rear; kNoLeader for free flow.
// Throws SimulationInvariantError when gap <= 0.
double car_following_update(double v, double v_desired, double gap, double v_leader,
                            const FdParams& p, double dt, double a_max, double b_max,
                            double b_safe);

}  // namespace comc::sim
