#include "comc/fundamental_diagram.hpp"

#include <cmath>
#include <sstream>

#include "comc/error.hpp"

namespace comc {

void FdParams::validate() const {
  if (!(cc0 > 0.0)) throw ValidationError("fd.cc0", "must be > 0");
  if (!(cc1 > 0.0)) throw ValidationError("fd.cc1", "must be > 0");
  if (!(veh_length > 0.0)) throw ValidationError("fd.veh_length", "must be > 0");
  if (!(v_crit > 0.0)) throw ValidationError("fd.v_crit", "must be > 0");
  if (!(v_crit < v_free)) throw ValidationError("fd.v_free", "must exceed v_crit");
}

TrafficFlowState FundamentalDiagram::state_at_speed(double v) const {
  if (!(v > 0.0) || v > free_speed()) {
    std::ostringstream os;
    os << "speed " << v << " m/s outside (0, " << free_speed() << "]";
    throw DomainError(os.str());
  }
  TrafficFlowState s;
  s.v = v;
  s.h = headway(v);
  s.q = 1.0 / s.h;
  s.k = s.q / v;
  return s;
}

W99Diagram::W99Diagram(FdParams p) : p_(p) { p_.validate(); }

double W99Diagram::headway(double v) const { return equilibrium_headway(v, p_); }

double W99Diagram::capacity() const { return 1.0 / headway(p_.v_free); }

double equilibrium_headway(double v, const FdParams& p) {
  if (!(v > 0.0)) {
    std::ostringstream os;
    os << "equilibrium headway undefined for speed " << v;
    throw DomainError(os.str());
  }
  return (p.cc0 + p.veh_length + p.cc1 * v) / v;
}

TrafficFlowState fd_state_at_speed(double v, const FdParams& p) {
  return W99Diagram(p).state_at_speed(v);
}

double lane_capacity(const FdParams& p) { return W99Diagram(p).capacity(); }

TrafficFlowState state_from_demand(double q, double v, const FdParams& p) {
  if (!(q > 0.0)) throw DomainError("demand must be positive");
  const double h_min = equilibrium_headway(v, p);
  const double h = 1.0 / q;
  if (h < h_min) {
    std::ostringstream os;
    os << "demand " << q * 3600.0 << " veh/h exceeds equilibrium flow "
       << 3600.0 / h_min << " veh/h at " << v * 3.6 << " km/h";
    throw InfeasibleDemandError(os.str());
  }
  return TrafficFlowState{v, q, q / v, h};
}

}  // namespace comc
