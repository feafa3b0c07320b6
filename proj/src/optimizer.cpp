#include "comc/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "comc/error.hpp"

namespace comc {

std::string_view to_string(GapReference g) {
  switch (g) {
    case GapReference::kFreeFlowMinimum:
      return "free_flow_minimum";
    case GapReference::kOriginalState:
      return "original_state";
  }
  return "unknown";
}

GapReference gap_reference_from_string(std::string_view s) {
  if (s == "free_flow_minimum") return GapReference::kFreeFlowMinimum;
  if (s == "original_state") return GapReference::kOriginalState;
  throw ValidationError("coordination.gap_reference",
                        "expected free_flow_minimum or original_state, got '" + std::string(s) + "'");
}

void CoordinationInputs::validate() const {
  fd.validate();
  auto positive = [](double v, const char* field) {
    if (!(v > 0.0)) throw ValidationError(field, "must be > 0");
  };
  positive(q_m, "coordination.q_m");
  positive(lambda, "coordination.lambda");
  positive(v_r, "coordination.v_r");
  positive(d_prime, "coordination.d_prime");
  positive(b, "coordination.b");
  positive(a_max, "coordination.a_max");
  positive(s_accel, "coordination.s_accel");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ValidationError("coordination.rho", "must lie in [0, 1]");
  if (!(w_m >= 0.0)) throw ValidationError("coordination.w_m", "must be >= 0");
  if (!(w_r >= 0.0)) throw ValidationError("coordination.w_r", "must be >= 0");
  if (!(w_m + w_r > 0.0)) throw ValidationError("coordination.w_m", "w_m + w_r must be > 0");
  if (n_max < 1) throw ValidationError("coordination.n_max", "must be >= 1");
  if (inner_capacity && !(*inner_capacity > 0.0)) {
    throw ValidationError("coordination.inner_capacity", "must be > 0");
  }
}

double CoordinationInputs::capacity() const {
  return inner_capacity ? *inner_capacity : lane_capacity(fd);
}

void SolverSettings::validate() const {
  auto positive = [](double v, const char* field) {
    if (!(v > 0.0)) throw ValidationError(field, "must be > 0");
  };
  positive(v_step_coarse, "solver.v_step_coarse");
  positive(v_step_fine, "solver.v_step_fine");
  positive(d_step_coarse, "solver.d_step_coarse");
  positive(d_step_fine, "solver.d_step_fine");
  positive(d_max, "solver.d_max");
}

bool FeasibilityReport::feasible() const {
  return n_valid && d_valid && omega_valid && gap >= 0.0 && stability >= 0.0 &&
         speed_low >= 0.0 && speed_high >= 0.0 && accel >= 0.0;
}

double effective_outer_flow(double q_m, double rho, double capacity) {
  if (q_m > capacity) {
    std::ostringstream os;
    os << "mainline volume " << q_m * 3600.0 << " veh/h exceeds capacity " << capacity * 3600.0
       << " veh/h";
    throw InfeasibleDemandError(os.str());
  }
  const double q_o = q_m - rho * (capacity - q_m);
  if (!(q_o > 0.0)) {
    std::ostringstream os;
    os << "effective outer-lane flow " << q_o * 3600.0 << " veh/h is not positive";
    throw DegenerateDemandError(os.str());
  }
  return q_o;
}

double shockwave_speed(const TrafficFlowState& state_o, const TrafficFlowState& state_c) {
  const double dk = state_c.k - state_o.k;
  if (dk == 0.0) throw SingularStateError("original and cooperative states share a density");
  return (state_c.q - state_o.q) / dk;
}

int cooperative_count(double d, double d_prime, double omega, const TrafficFlowState& state_o) {
  if (!(omega > 0.0 && omega < state_o.v)) {
    throw DomainError("shockwave speed must lie in (0, v_O)");
  }
  const double raw = (d + d_prime) / state_o.h * (1.0 / omega - 1.0 / state_o.v);
  // Guard against 12.000000000001 rounding up to 13.
  const double m = std::ceil(raw - 1e-9);
  return static_cast<int>(std::max(0.0, m));
}

double mainline_delay(int m, double d, double d_prime, double v_c, double omega,
                      const TrafficFlowState& state_o) {
  const double v_o = state_o.v;
  if (!(v_c > 0.0) || v_c > v_o) throw DomainError("cooperative speed must lie in (0, v_O]");
  if (!(omega < v_o)) throw DomainError("shockwave speed must be below v_O");
  const double wave = (m - 1) * omega * state_o.h / (2.0 * (v_o - omega));
  return m * (v_o - v_c) / v_c * ((d + d_prime) / v_o - wave);
}

double ramp_delay(int n, double d, double d_prime, double v_c, double h_c, double v_o,
                  double v_r, double b, double lambda) {
  if (n < 1) throw DomainError("platoon size must be >= 1");
  const double per_vehicle = v_r / (2.0 * b) + (d + d_prime) / v_c - n * h_c -
                             (d - n * h_c * v_c) / (2.0 * v_r) - d_prime / v_o +
                             (n - 1) / (2.0 * lambda);
  return n * per_vehicle;
}

WeightedDelay objective(double delay_main, double delay_ramp, double w_m, double w_r, int n,
                        double lambda) {
  if (n < 1) throw DomainError("platoon size must be >= 1");
  WeightedDelay out;
  out.r = 3600.0 * lambda / n;
  out.objective = (w_m * delay_main + w_r * delay_ramp) * out.r;
  return out;
}

double required_platoon_acceleration(double v_c, double s_accel) {
  if (!(s_accel > 0.0)) throw DomainError("acceleration distance must be > 0");
  return v_c * v_c / (2.0 * s_accel);
}

CoordinationModel::CoordinationModel(const CoordinationInputs& inputs)
    : in_(inputs), fd_((inputs.validate(), inputs.fd)), capacity_(inputs.capacity()) {
  const double q_o = effective_outer_flow(in_.q_m, in_.rho, capacity_);
  state_o_ = state_from_demand(q_o, in_.fd.v_free, in_.fd);
  gap_headway_ = in_.gap_reference == GapReference::kFreeFlowMinimum
                     ? fd_.headway(in_.fd.v_free)
                     : state_o_.h;
}

FeasibilityReport CoordinationModel::check(int n, double d, double v_c) const {
  FeasibilityReport rep;
  const double v_o = state_o_.v;
  rep.n_valid = n >= 1 && n <= in_.n_max;
  rep.d_valid = d > 0.0;
  rep.speed_low = v_c - in_.fd.v_crit;
  rep.speed_high = v_o - v_c;
  rep.accel = in_.a_max - required_platoon_acceleration(std::max(v_c, 0.0), in_.s_accel);
  if (!(v_c > 0.0) || v_c > v_o) {
    rep.gap = rep.stability = -std::numeric_limits<double>::infinity();
    return rep;
  }
  const TrafficFlowState state_c = fd_.state_at_speed(v_c);
  rep.ramp_cruise_margin = d - n * state_c.h * v_c;
  rep.gap = gap_headway_ + d / v_c - d / v_o - (n + 1) * state_c.h;
  if (state_c.k == state_o_.k) {
    rep.stability = -std::numeric_limits<double>::infinity();
    return rep;
  }
  rep.omega = shockwave_speed(state_o_, state_c);
  rep.omega_valid = rep.omega > 0.0 && rep.omega < v_o;
  rep.stability = rep.omega_valid ? n / in_.lambda - (d + in_.d_prime) / rep.omega
                                  : -std::numeric_limits<double>::infinity();
  return rep;
}

ControlPlan CoordinationModel::evaluate(int n, double d, double v_c) const {
  ControlPlan p;
  p.n = n;
  p.d = d;
  p.v_c = v_c;
  p.state_o = state_o_;
  p.state_c = fd_.state_at_speed(v_c);
  p.omega = shockwave_speed(state_o_, p.state_c);
  p.m = cooperative_count(d, in_.d_prime, p.omega, state_o_);
  p.delay_main = mainline_delay(p.m, d, in_.d_prime, v_c, p.omega, state_o_);
  p.delay_ramp = ramp_delay(n, d, in_.d_prime, v_c, p.state_c.h, state_o_.v, in_.v_r, in_.b,
                            in_.lambda);
  const WeightedDelay wd = objective(p.delay_main, p.delay_ramp, in_.w_m, in_.w_r, n, in_.lambda);
  p.r = wd.r;
  p.objective = wd.objective;
  p.a_req = required_platoon_acceleration(v_c, in_.s_accel);
  return p;
}

FeasibilityReport check_feasibility(int n, double d, double v_c, const CoordinationInputs& inputs) {
  return CoordinationModel(inputs).check(n, d, v_c);
}

bool plan_preferred(const ControlPlan& a, const ControlPlan& b) {
  const double scale = std::max({std::abs(a.objective), std::abs(b.objective), 1.0});
  if (std::abs(a.objective - b.objective) > 1e-12 * scale) return a.objective < b.objective;
  if (a.n != b.n) return a.n < b.n;
  if (a.d != b.d) return a.d < b.d;
  return a.v_c > b.v_c;
}

namespace {

class GridSearch {
 public:
  GridSearch(const CoordinationModel& model, double d_max) : model_(model), d_max_(d_max) {}

  // Best plan at speed v over {origin + i*step : i in [i_min, i_max]}. Only the
  // index window that can satisfy the two d-monotone constraints (gap grows with
  // d, stability shrinks with d) is visited; each visited point is still
  // decided by CoordinationModel::check.
  std::optional<ControlPlan> scan_row(int n, double v, double origin, double step, long i_min,
                                      long i_max) const {
    const CoordinationInputs& in = model_.inputs();
    const FeasibilityReport probe = model_.check(n, step, v);
    if (!probe.omega_valid || probe.speed_low < 0.0 || probe.speed_high < 0.0 ||
        probe.accel < 0.0 || !probe.n_valid) {
      return std::nullopt;
    }
    const double v_o = model_.original_state().v;
    const double h_c = equilibrium_headway(v, in.fd);
    const double slope = 1.0 / v - 1.0 / v_o;
    const double gap_short = (n + 1) * h_c - model_.gap_headway();
    long lo = i_min;
    long hi = i_max;
    if (slope > 0.0) {
      lo = std::max(lo, static_cast<long>(std::floor((gap_short / slope - origin) / step)) - 1);
    } else if (gap_short > 0.0) {
      return std::nullopt;
    }
    const double d_hi = n * probe.omega / in.lambda - in.d_prime;
    hi = std::min(hi, static_cast<long>(std::ceil((d_hi - origin) / step)) + 1);

    std::optional<ControlPlan> best;
    for (long i = lo; i <= hi; ++i) {
      const double d = origin + i * step;
      if (!(d > 0.0) || d > d_max_ + 1e-9) continue;
      if (!model_.check(n, d, v).feasible()) continue;
      ControlPlan plan = model_.evaluate(n, d, v);
      if (!best || plan_preferred(plan, *best)) best = std::move(plan);
    }
    return best;
  }

 private:
  const CoordinationModel& model_;
  double d_max_;
};

void keep_better(std::optional<ControlPlan>& best, const std::optional<ControlPlan>& cand) {
  if (cand && (!best || plan_preferred(*cand, *best))) best = cand;
}

std::vector<double> speed_grid(double from, double to, double step) {
  std::vector<double> out;
  const long count = static_cast<long>(std::floor((to - from) / step + 1e-9));
  for (long i = 0; i <= count; ++i) out.push_back(std::min(from + i * step, to));
  return out;
}

// center + j*step for |j| <= half, restricted to [lo, hi]. j = 0 reproduces
// center bit-for-bit.
std::vector<double> speed_window(double center, long half, double step, double lo, double hi) {
  std::vector<double> out;
  for (long j = -half; j <= half; ++j) {
    const double v = center + j * step;
    if (v < lo - 1e-12 || v > hi + 1e-12) continue;
    out.push_back(std::clamp(v, lo, hi));
  }
  return out;
}

}  // namespace

std::optional<ControlPlan> solve(const CoordinationInputs& inputs, const SolverSettings& settings) {
  settings.validate();
  const CoordinationModel model(inputs);
  const double v_lo = inputs.fd.v_crit;
  const double v_hi = inputs.fd.v_free;
  const GridSearch search(model, settings.d_max);

  const std::vector<double> coarse_speeds = speed_grid(v_lo, v_hi, settings.v_step_coarse);
  const long v_half =
      static_cast<long>(std::ceil(settings.v_step_coarse / settings.v_step_fine - 1e-9));

  const long d_coarse_count =
      static_cast<long>(std::floor(settings.d_max / settings.d_step_coarse + 1e-9));
  const long d_fine_count = static_cast<long>(std::floor(settings.d_max / settings.d_step_fine + 1e-9));
  const long d_half =
      static_cast<long>(std::ceil(settings.d_step_coarse / settings.d_step_fine - 1e-9));

  std::optional<ControlPlan> best;
  for (int n = 1; n <= inputs.n_max; ++n) {
    // Coarse pass, then d refinement inside every coarse speed row so that rows
    // are ranked without the coarse d rounding penalty.
    std::optional<ControlPlan> best_row;
    for (double v : coarse_speeds) {
      std::optional<ControlPlan> row =
          search.scan_row(n, v, 0.0, settings.d_step_coarse, 1, d_coarse_count);
      if (row) {
        keep_better(row, search.scan_row(n, v, row->d, settings.d_step_fine, -d_half, d_half));
      } else {
        // Feasible band narrower than a coarse d step (both constraints nearly
        // active): look at it on the fine grid directly.
        row = search.scan_row(n, v, 0.0, settings.d_step_fine, 1, d_fine_count);
      }
      keep_better(best_row, row);
    }
    if (!best_row) continue;

    // Fine speeds over one coarse cell around the best row, full fine d range.
    std::optional<ControlPlan> best_n = best_row;
    for (double v : speed_window(best_row->v_c, v_half, settings.v_step_fine, v_lo, v_hi)) {
      keep_better(best_n, search.scan_row(n, v, 0.0, settings.d_step_fine, 1, d_fine_count));
    }
    keep_better(best, best_n);
  }
  return best;
}

}  // namespace comc
