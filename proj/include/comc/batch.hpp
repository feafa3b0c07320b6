#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "comc/metrics.hpp"
#include "comc/report_io.hpp"
#include "comc/sim/simulation.hpp"

namespace comc {

// Process exit codes shared by the CLI and batch failure records.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitValidation = 2,
  kExitInfeasiblePlan = 3,
  kExitInvariant = 4,
};

// Maps the exception currently being handled to an exit code.
int exit_code_for_current_exception();

struct RunSpec {
  Provenance provenance;   // seed filled from config.seed when empty
  sim::SimConfig config;   // seed and control already set
  ContourWindow contour;
  std::optional<std::filesystem::path> trajectory_csv;
};

struct RunOutcome {
  std::string scenario;
  std::uint64_t seed = 0;
  bool control = false;
  int status = kExitOk;
  std::string error;  // empty on success
  sim::RunResult result;
  DelayReport report;
  std::optional<SpeedContour> contour;

  bool ok() const { return status == kExitOk; }
};

// Runs one simulation; failures are captured, never thrown.
RunOutcome execute_run(const RunSpec& spec);

// Runs up to `parallelism` specs at once. Outcomes come back in spec order,
// so pooled results do not depend on the parallelism.
std::vector<RunOutcome> batch_execute(const std::vector<RunSpec>& specs, int parallelism);

// Pools successful outcomes in order. Empty contour when none succeeded.
struct PooledOutcome {
  int runs = 0;
  int failures = 0;
  DelayReport report;
  std::optional<SpeedContour> contour;
};
PooledOutcome pool(const std::vector<RunOutcome>& outcomes);

}  // namespace comc
