#include "comc/sim/lane_change.hpp"

#include <algorithm>

namespace comc::sim {

double required_gap(double v_follower, double v_leader, const FdParams& p, double b,
                    double f) {
  const double closing = std::max(0.0, v_follower - v_leader);
  return p.cc0 + f * p.cc1 * v_follower + closing * closing / (2.0 * b);
}

double anticipated_speed(double v_desired, const std::optional<Neighbor>& lead,
                         const LaneChangeParams& lc) {
  if (!lead || lead->gap > lc.lookahead) return v_desired;
  return std::min(v_desired, lead->v);
}

bool gaps_acceptable(double v, const std::optional<Neighbor>& lead,
                     const std::optional<Neighbor>& lag, const FdParams& p, double b,
                     double f, double scale) {
  if (lead && !(lead->gap > 0.0 && lead->gap >= scale * required_gap(v, lead->v, p, b, f))) {
    return false;
  }
  if (lag && !(lag->gap > 0.0 && lag->gap >= scale * required_gap(lag->v, v, p, b, f))) {
    return false;
  }
  return true;
}

LaneChangeDecision lane_change_decision(const LaneChangeQuery& q, const FdParams& p,
                                        const LaneChangeParams& lc) {
  if (!q.direction_allowed || !q.role_allows) return LaneChangeDecision::kKeep;
  const double gain = anticipated_speed(q.v_desired, q.target_lead, lc) -
                      anticipated_speed(q.v_desired, q.current_lead, lc);
  if (gain < lc.incentive) return LaneChangeDecision::kKeep;
  if (!gaps_acceptable(q.v, q.target_lead, q.target_lag, p, lc.b_accept)) {
    return LaneChangeDecision::kKeep;
  }
  return LaneChangeDecision::kChange;
}

double merge_braking(double progress, const LaneChangeParams& lc) {
  const double u = std::clamp(progress, 0.0, 1.0);
  return lc.merge_b_start + (lc.merge_b_end - lc.merge_b_start) * u;
}

}  // namespace comc::sim
