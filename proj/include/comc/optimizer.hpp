#pragma once

#include <optional>
#include <string_view>

#include "comc/fundamental_diagram.hpp"

namespace comc {

// Which headway bounds the gap a facilitator opens ahead of itself.
//
//  kFreeFlowMinimum  the facilitator's leader is assumed to run at the
//                    equilibrium minimum headway at v_O (worst case). This is
//                    the reading under which the reference control plans sit
//                    exactly on the gap constraint.
//  kOriginalState    the leader is at the demand headway h_O of the original
//                    state, i.e. the gap constraint as literally written.
enum class GapReference { kFreeFlowMinimum, kOriginalState };

std::string_view to_string(GapReference g);
GapReference gap_reference_from_string(std::string_view s);

// Inner-lane capacity [veh/h] that reproduces the reference control plans,
// sweeps and ramp-flow frontier. The W99 diagram itself gives 3345.4 veh/h.
inline constexpr double kCalibratedInnerCapacityVph = 3080.0;

// Aggregate traffic state the plan is computed from. SI units throughout.
struct CoordinationInputs {
  double q_m = 2000.0 / 3600.0;   // upstream mainline volume per lane [veh/s]
  double lambda = 500.0 / 3600.0; // ramp arrival rate [veh/s]
  double rho = 0.5;               // lane-change fraction of reserved inner capacity
  double w_m = 0.5;
  double w_r = 0.5;
  double v_r = 60.0 / 3.6;        // ramp arrival speed [m/s]
  double d_prime = 457.2;         // MP to EM [m]
  double b = 2.75;                // ramp braking rate [m/s^2]
  double a_max = 2.75;            // platoon acceleration limit [m/s^2]
  int n_max = 20;
  double s_accel = 300.0;         // WP to MP [m]
  FdParams fd;
  // Capacity C used for the effective outer-lane flow. Empty means the
  // fundamental-diagram capacity.
  std::optional<double> inner_capacity = kCalibratedInnerCapacityVph / 3600.0;
  GapReference gap_reference = GapReference::kFreeFlowMinimum;

  void validate() const;
  double capacity() const;
};

// Grid resolution for solve(). Defaults: 0.5 km/h x 10 m coarse, 0.05 km/h x
// 1 m fine.
struct SolverSettings {
  double v_step_coarse = 0.5 / 3.6;
  double v_step_fine = 0.05 / 3.6;
  double d_step_coarse = 10.0;
  double d_step_fine = 1.0;
  double d_max = 2000.0;

  void validate() const;
};

struct ControlPlan {
  int n = 0;
  double d = 0.0;
  double v_c = 0.0;
  int m = 0;
  double omega = 0.0;
  double r = 0.0;           // cycles per hour
  double delay_main = 0.0;  // per-cycle sum [s]
  double delay_ramp = 0.0;  // per-cycle sum [s]
  double objective = 0.0;   // weighted delay [s/h]
  double a_req = 0.0;
  TrafficFlowState state_o;
  TrafficFlowState state_c;
};

// Constraint residuals for one candidate. Non-negative residuals mean the
// constraint holds.
struct FeasibilityReport {
  double gap = 0.0;          // created gap minus (n+1) h_C [s]
  double stability = 0.0;    // n/lambda - (d+d')/omega [s]
  double speed_low = 0.0;    // v_C - v_crit [m/s]
  double speed_high = 0.0;   // v_O - v_C [m/s]
  double accel = 0.0;        // a_max - a_req [m/s^2]
  bool n_valid = false;      // 1 <= n <= n_max
  bool d_valid = false;      // d > 0
  bool omega_valid = false;  // 0 < omega < v_O
  double omega = 0.0;
  // d - n h_C v_C. Negative values make the ramp cruise term of the delay
  // model negative; reported, never enforced.
  double ramp_cruise_margin = 0.0;

  bool feasible() const;
};

struct WeightedDelay {
  double r = 0.0;          // cycles per hour
  double objective = 0.0;  // [s/h]
};

// q_m - rho (C - q_m). Throws InfeasibleDemandError when q_m > C and
// DegenerateDemandError when the result is not positive.
double effective_outer_flow(double q_m, double rho, double capacity);

// (q_C - q_O) / (k_C - k_O). Throws SingularStateError on equal densities.
double shockwave_speed(const TrafficFlowState& state_o, const TrafficFlowState& state_c);

// Number of mainline vehicles caught by the wave before it dissipates.
int cooperative_count(double d, double d_prime, double omega, const TrafficFlowState& state_o);

// Summed delay of the m cooperative vehicles in one cycle [s].
double mainline_delay(int m, double d, double d_prime, double v_c, double omega,
                      const TrafficFlowState& state_o);

// Summed delay of the n platoon vehicles in one cycle [s].
double ramp_delay(int n, double d, double d_prime, double v_c, double h_c, double v_o,
                  double v_r, double b, double lambda);

WeightedDelay objective(double delay_main, double delay_ramp, double w_m, double w_r, int n,
                        double lambda);

// Constant acceleration that brings a vehicle standing at WP to v_c exactly at
// MP, s_accel downstream.
double required_platoon_acceleration(double v_c, double s_accel);

// Precomputed original state and constants for one set of inputs.
class CoordinationModel {
 public:
  explicit CoordinationModel(const CoordinationInputs& inputs);

  const CoordinationInputs& inputs() const { return in_; }
  const TrafficFlowState& original_state() const { return state_o_; }
  double outer_flow() const { return state_o_.q; }
  double capacity() const { return capacity_; }
  // Headway ahead of the facilitator used by the gap constraint.
  double gap_headway() const { return gap_headway_; }

  FeasibilityReport check(int n, double d, double v_c) const;
  // Full plan for a candidate. Requires 0 < omega < v_O.
  ControlPlan evaluate(int n, double d, double v_c) const;

 private:
  CoordinationInputs in_;
  W99Diagram fd_;
  double capacity_;
  TrafficFlowState state_o_;
  double gap_headway_;
};

FeasibilityReport check_feasibility(int n, double d, double v_c, const CoordinationInputs& inputs);

// Coarse-to-fine exhaustive grid search. Empty when no grid point is feasible.
std::optional<ControlPlan> solve(const CoordinationInputs& inputs,
                                 const SolverSettings& settings = {});

// Strict weak ordering used for the argmin: objective, then smaller n, smaller
// d, larger v_c.
bool plan_preferred(const ControlPlan& a, const ControlPlan& b);

}  // namespace comc
