#include "comc/sim/coordination.hpp"

#include <algorithm>
#include <cmath>

#include "comc/error.hpp"

namespace comc::sim {

std::string_view to_string(CyclePhase p) {
  switch (p) {
    case CyclePhase::kIdle:
      return "idle";
    case CyclePhase::kRequested:
      return "requested";
    case CyclePhase::kGapCreation:
      return "gap_creation";
    case CyclePhase::kPlatoonReleased:
      return "platoon_released";
    case CyclePhase::kMerging:
      return "merging";
    case CyclePhase::kComplete:
      return "complete";
  }
  return "unknown";
}

double adjust_sc_position(double d, double v_c, double p_f, double v_f, double d_min) {
  if (v_f <= v_c) return d;
  const double d_star = d - (p_f - d) * v_c / (v_f - v_c);
  return std::max(d_star, d_min);
}

double sc_floor(double v_f, double v_c, double b, double margin) {
  return std::max(0.0, v_f * v_f - v_c * v_c) / (2.0 * b) + margin;
}

double decel_start_distance(double d_star, double v_f, double v_c, double b) {
  return d_star + v_f * std::max(0.0, v_f - v_c) / (2.0 * b);
}

double time_to_mp(double p, double v, double decel_start, double v_c, double b) {
  if (p <= 0.0) return 0.0;
  if (!(v > 0.0)) throw DomainError("time_to_mp needs a moving vehicle");
  double t = 0.0;
  if (p > decel_start) {
    t += (p - decel_start) / v;
    p = decel_start;
  }
  if (v <= v_c) return t + p / v;
  const double tau = (v - v_c) / b;
  const double brake_len = 0.5 * (v + v_c) * tau;
  if (brake_len <= p) return t + tau + (p - brake_len) / v_c;
  // MP reached while still braking: p = v s - b s^2 / 2.
  return t + (v - std::sqrt(v * v - 2.0 * b * p)) / b;
}

double leader_travel_time(double v_c, double a, double s) {
  return v_c / (2.0 * a) + s / v_c;
}

ReleasePlan plan_platoon_release(double now, double facilitator_mp_arrival, int n, double h_c,
                                 double v_c, double s, double a_base, double a_max) {
  ReleasePlan plan;
  plan.leader_mp_target = facilitator_mp_arrival - n * h_c;
  plan.accel = a_base;
  plan.release_time = plan.leader_mp_target - leader_travel_time(v_c, a_base, s);
  if (plan.release_time >= now) return plan;
  plan.release_time = now;
  const double accel_time = plan.leader_mp_target - now - s / v_c;  // v_c / (2a)
  if (accel_time > 0.0 && v_c / (2.0 * accel_time) <= a_max) {
    plan.accel = v_c / (2.0 * accel_time);
  } else {
    plan.accel = a_max;
    plan.degraded = true;
  }
  return plan;
}

}  // namespace comc::sim
