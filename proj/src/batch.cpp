#include "comc/batch.hpp"

#include <exception>
#include <memory>

#include "comc/error.hpp"
#include "comc/parallel.hpp"

namespace comc {

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const ValidationError&) {
    return kExitValidation;
  } catch (const InfeasibleDemandError&) {
    return kExitValidation;
  } catch (const DegenerateDemandError&) {
    return kExitValidation;
  } catch (const InfeasiblePlanError&) {
    return kExitInfeasiblePlan;
  } catch (const SimulationInvariantError&) {
    return kExitInvariant;
  } catch (...) {
    return kExitFailure;
  }
}

namespace {

class FanOut : public sim::TrajectorySink {
 public:
  void add(sim::TrajectorySink* s) {
    if (s) sinks_.push_back(s);
  }
  bool empty() const { return sinks_.empty(); }
  void on_sample(const sim::TrajectorySample& s) override {
    for (auto* k : sinks_) k->on_sample(s);
  }

 private:
  std::vector<sim::TrajectorySink*> sinks_;
};

}  // namespace

RunOutcome execute_run(const RunSpec& spec) {
  RunOutcome out;
  out.scenario = spec.provenance.scenario;
  out.seed = spec.config.seed;
  out.control = spec.config.control;
  try {
    SpeedContour contour(spec.contour);
    std::unique_ptr<TrajectoryCsvSink> csv;
    if (spec.trajectory_csv) {
      Provenance pv = spec.provenance;
      if (!pv.seed) pv.seed = spec.config.seed;
      csv = std::make_unique<TrajectoryCsvSink>(*spec.trajectory_csv, pv);
    }
    FanOut sinks;
    sinks.add(&contour);
    sinks.add(csv.get());
    out.result = sim::run(spec.config, &sinks);
    out.report = aggregate_report(out.result.trips);
    out.contour = std::move(contour);
  } catch (const std::exception& e) {
    out.status = exit_code_for_current_exception();
    out.error = e.what();
  } catch (...) {
    out.status = kExitFailure;
    out.error = "unknown error";
  }
  return out;
}

std::vector<RunOutcome> batch_execute(const std::vector<RunSpec>& specs, int parallelism) {
  return parallel_map(specs.size(), parallelism,
                      [&](std::size_t i) { return execute_run(specs[i]); });
}

PooledOutcome pool(const std::vector<RunOutcome>& outcomes) {
  PooledOutcome p;
  for (const auto& o : outcomes) {
    if (!o.ok()) {
      ++p.failures;
      continue;
    }
    ++p.runs;
    p.report.merge(o.report);
    if (o.contour) {
      if (p.contour) {
        p.contour->merge(*o.contour);
      } else {
        p.contour = o.contour;
      }
    }
  }
  return p;
}

}  // namespace comc
