#pragma once

#include <memory>

namespace comc {

// Car-following calibration that defines the equilibrium (uncongested)
// branch of the fundamental diagram. All fields SI.
struct FdParams {
  double cc0 = 1.5;            // standstill gap [m]
  double cc1 = 0.9;            // time-gap coefficient [s]
  double veh_length = 4.37;    // [m]
  double v_free = 120.0 / 3.6; // free-flow speed v_O [m/s]
  double v_crit = 75.0 / 3.6;  // critical speed [m/s]

  // Throws ValidationError naming the offending field.
  void validate() const;
};

struct TrafficFlowState {
  double v = 0.0;  // speed [m/s]
  double q = 0.0;  // flow [veh/s]
  double k = 0.0;  // density [veh/m]
  double h = 0.0;  // time headway [s]
};

// Equilibrium speed-headway relation. Only the W99-derived form ships, but
// the optimizer is written against this interface.
class FundamentalDiagram {
 public:
  virtual ~FundamentalDiagram() = default;

  virtual double headway(double v) const = 0;
  virtual double free_speed() const = 0;
  // Flow maximum over (0, free_speed()].
  virtual double capacity() const = 0;

  TrafficFlowState state_at_speed(double v) const;
};

class W99Diagram final : public FundamentalDiagram {
 public:
  explicit W99Diagram(FdParams p);

  double headway(double v) const override;
  double free_speed() const override { return p_.v_free; }
  // q(v) = v / (cc0 + L + cc1 v) is strictly increasing, so the maximum is at
  // v_free.
  double capacity() const override;

  const FdParams& params() const { return p_; }

 private:
  FdParams p_;
};

// h = (cc0 + L + cc1 v) / v. Throws DomainError for v <= 0.
double equilibrium_headway(double v, const FdParams& p);

// Equilibrium state at speed v in (0, v_free]; q = 1/h, k = q/v.
TrafficFlowState fd_state_at_speed(double v, const FdParams& p);

// Flow at v_free [veh/s].
double lane_capacity(const FdParams& p);

// Original (uncongested) state carrying demand q at speed v. Throws
// InfeasibleDemandError when 1/q is shorter than the equilibrium headway.
TrafficFlowState state_from_demand(double q, double v, const FdParams& p);

}  // namespace comc
