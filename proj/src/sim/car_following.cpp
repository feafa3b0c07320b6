#include "comc/sim/car_following.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "comc/error.hpp"

namespace comc::sim {

double safe_speed(double gap, double v_leader, const FdParams& p, double b_safe) {
  if (gap == kNoLeader) return kNoLeader;
  const double slack = std::max(0.0, gap - p.cc0);
  const double equilibrium = slack / p.cc1;
  const double braking = std::sqrt(v_leader * v_leader + 2.0 * b_safe * slack);
  return std::min(equilibrium, braking);
}

double car_following_update(double v, double v_desired, double gap, double v_leader,
                            const FdParams& p, double dt, double a_max, double b_max,
                            double b_safe) {
  if (!(gap > 0.0)) {
    std::ostringstream os;
    os << "non-positive gap " << gap << " m at speed " << v << " m/s";
    throw SimulationInvariantError(os.str());
  }
  const double upper = std::min({v + a_max * dt, v_desired, safe_speed(gap, v_leader, p, b_safe)});
  const double lower = std::max(0.0, v - b_max * dt);
  return std::max(upper, lower);
}

}  // namespace comc::sim
