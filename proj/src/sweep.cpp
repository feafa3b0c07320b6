#include "comc/sweep.hpp"

#include <cmath>
#include <string>

#include "comc/error.hpp"
#include "comc/parallel.hpp"

namespace comc {

std::string_view to_string(SweepAxis a) {
  return a == SweepAxis::kWeights ? "weights" : "rho";
}

SweepAxis sweep_axis_from_string(std::string_view s) {
  if (s == "weights") return SweepAxis::kWeights;
  if (s == "rho") return SweepAxis::kRho;
  throw ValidationError("axis", "expected weights or rho, got '" + std::string(s) + "'");
}

std::vector<double> unit_grid(int steps) {
  std::vector<double> out;
  for (int i = 0; i <= steps; ++i) out.push_back(static_cast<double>(i) / steps);
  return out;
}

namespace {

std::optional<ControlPlan> try_solve(const CoordinationInputs& in, const SolverSettings& s) {
  try {
    return solve(in, s);
  } catch (const InfeasibleDemandError&) {
    return std::nullopt;
  } catch (const DegenerateDemandError&) {
    return std::nullopt;
  }
}

}  // namespace

std::vector<SweepRow> parameter_sweep(const CoordinationInputs& inputs, SweepAxis axis,
                                      const std::vector<double>& grid,
                                      const SolverSettings& settings, int workers) {
  for (double g : grid) {
    if (!(g >= 0.0 && g <= 1.0)) {
      throw ValidationError("sweep.grid", "axis values must lie in [0, 1]");
    }
  }
  settings.validate();
  return parallel_map(grid.size(), workers, [&](std::size_t i) {
    CoordinationInputs in = inputs;
    if (axis == SweepAxis::kWeights) {
      in.w_m = grid[i];
      in.w_r = 1.0 - grid[i];
    } else {
      in.rho = grid[i];
    }
    return SweepRow{grid[i], try_solve(in, settings)};
  });
}

double max_ramp_flow(const CoordinationInputs& inputs, const SolverSettings& settings,
                     double resolution) {
  if (!(resolution > 0.0)) throw ValidationError("resolution", "must be > 0");
  auto feasible = [&](double lambda) {
    CoordinationInputs in = inputs;
    in.lambda = lambda;
    return try_solve(in, settings).has_value();
  };
  double lo = 0.0;
  double hi = 1.0;  // 3600 veh/h
  if (!feasible(resolution)) return 0.0;
  lo = resolution;
  if (feasible(hi)) return hi;
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  return lo;
}

std::vector<FrontierPoint> ramp_flow_frontier(const CoordinationInputs& inputs,
                                              const std::vector<double>& q_m_grid,
                                              const std::vector<double>& rho_grid,
                                              const SolverSettings& settings, int workers) {
  const std::size_t cols = rho_grid.size();
  return parallel_map(q_m_grid.size() * cols, workers, [&](std::size_t i) {
    CoordinationInputs in = inputs;
    in.q_m = q_m_grid[i / cols];
    in.rho = rho_grid[i % cols];
    return FrontierPoint{in.q_m, in.rho, max_ramp_flow(in, settings)};
  });
}

}  // namespace comc
