#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "comc/optimizer.hpp"

namespace comc {

enum class SweepAxis { kWeights, kRho };

std::string_view to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(std::string_view s);

struct SweepRow {
  double axis_value = 0.0;
  std::optional<ControlPlan> plan;  // empty: no feasible grid point
};

// 0.0, 0.1, ..., 1.0
std::vector<double> unit_grid(int steps = 10);

// One solve per grid value. On the weights axis the value is w_m and
// w_r = 1 - w_m. Rows come back in grid order whatever the worker count.
std::vector<SweepRow> parameter_sweep(const CoordinationInputs& inputs, SweepAxis axis,
                                      const std::vector<double>& grid,
                                      const SolverSettings& settings = {}, int workers = 1);

// Largest ramp arrival rate [veh/s] with a feasible plan, bisected to
// `resolution` (1 veh/h by default). 0 when nothing is feasible.
double max_ramp_flow(const CoordinationInputs& inputs, const SolverSettings& settings = {},
                     double resolution = 1.0 / 3600.0);

struct FrontierPoint {
  double q_m = 0.0;       // [veh/s]
  double rho = 0.0;
  double max_lambda = 0.0;  // [veh/s]
};

// max_ramp_flow over the q_m x rho product, row-major in q_m.
std::vector<FrontierPoint> ramp_flow_frontier(const CoordinationInputs& inputs,
                                              const std::vector<double>& q_m_grid,
                                              const std::vector<double>& rho_grid,
                                              const SolverSettings& settings = {},
                                              int workers = 1);

}  // namespace comc
