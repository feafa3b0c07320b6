#include <gtest/gtest.h>

#include <sstream>

#include "comc/batch.hpp"
#include "comc/error.hpp"
#include "comc/report_io.hpp"
#include "comc/units.hpp"

namespace comc {
namespace {

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::string second_line(const std::string& s) {
  const auto a = s.find('\n') + 1;
  return s.substr(a, s.find('\n', a) - a);
}

TEST(Format, FixedPrecisionAndMissing) {
  EXPECT_EQ(fmt(1.23456, 2), "1.23");
  EXPECT_EQ(fmt(-0.0001, 2), "0.00");
  EXPECT_EQ(fmt(std::nullopt, 2), "NA");
  EXPECT_EQ(fmt(std::numeric_limits<double>::quiet_NaN(), 2), "NA");
}

TEST(Provenance, CommentLine) {
  Provenance p{"scenario_1C", "0123456789abcdef", 7};
  EXPECT_EQ(p.comment(), "# scenario scenario_1C hash 0123456789abcdef seed 7");
  p.seed.reset();
  EXPECT_EQ(p.comment(), "# scenario scenario_1C hash 0123456789abcdef seed pooled");
  EXPECT_EQ(p.to_json()["seed"], "pooled");
}

TEST(PlanCsv, HeaderAndInfeasibleRow) {
  CoordinationInputs in;
  in.rho = 0.0;
  std::ostringstream os;
  write_plan_csv(os, {"s", "h", std::nullopt}, {SweepRow{0.0, std::nullopt}, SweepRow{0.5, solve(CoordinationInputs{})}});
  const std::string out = os.str();
  EXPECT_EQ(second_line(out),
            "axis_value,n,d_m,v_c_kmh,m,omega_ms,r_per_h,delay_main_s,delay_ramp_s,objective_s_per_h,"
            "feasible");
  EXPECT_NE(out.find("0.00,NA,NA,NA,NA,NA,NA,NA,NA,NA,false"), std::string::npos);
  EXPECT_NE(out.find("0.50,11,1043.0,85.35,14,"), std::string::npos);
}

sim::SimConfig short_run(std::uint64_t seed, bool control) {
  sim::SimConfig c;
  c.duration = 600.0;
  c.seed = seed;
  c.control = control;
  return c;
}

RunSpec spec(std::uint64_t seed, bool control) {
  RunSpec s;
  s.provenance = {"test", "0000000000000000", std::nullopt};
  s.config = short_run(seed, control);
  s.contour.t_end = 600.0;
  return s;
}

TEST(Batch, ParallelismDoesNotChangePooledResults) {
  std::vector<RunSpec> specs;
  for (std::uint64_t seed : {1, 2, 3, 4}) specs.push_back(spec(seed, seed % 2 == 0));
  const auto serial = batch_execute(specs, 1);
  const auto parallel = batch_execute(specs, 4);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].seed, parallel[i].seed);
    EXPECT_TRUE(serial[i].ok()) << serial[i].error;
  }
  const PooledOutcome a = pool(serial);
  const PooledOutcome b = pool(parallel);
  EXPECT_EQ(a.runs, 4);
  EXPECT_EQ(a.report.mainline.count, b.report.mainline.count);
  EXPECT_EQ(a.report.ramp.count, b.report.ramp.count);
  EXPECT_EQ(a.report.mainline.delay_sum, b.report.mainline.delay_sum);
  EXPECT_EQ(a.report.ramp.travel_time_sum, b.report.ramp.travel_time_sum);
  ASSERT_TRUE(a.contour && b.contour);
  for (std::size_t k = 0; k < a.contour->cells().size(); ++k) {
    EXPECT_EQ(a.contour->cells()[k].speed_sum, b.contour->cells()[k].speed_sum);
  }
}

TEST(Batch, FailureRecordedPerRun) {
  std::vector<RunSpec> specs{spec(1, false), spec(2, true), spec(3, false)};
  specs[1].config.inputs.rho = 0.0;  // no feasible plan
  specs[2].config.dt = -1.0;         // invalid
  const auto out = batch_execute(specs, 2);
  EXPECT_TRUE(out[0].ok());
  EXPECT_EQ(out[1].status, kExitInfeasiblePlan);
  EXPECT_EQ(out[2].status, kExitValidation);
  EXPECT_FALSE(out[1].error.empty());
  const PooledOutcome p = pool(out);
  EXPECT_EQ(p.runs, 1);
  EXPECT_EQ(p.failures, 2);
}

TEST(ExitCodes, Mapping) {
  auto code = [](auto&& thrower) {
    try {
      thrower();
    } catch (...) {
      return exit_code_for_current_exception();
    }
    return -1;
  };
  EXPECT_EQ(code([] { throw ValidationError("x", "y"); }), kExitValidation);
  EXPECT_EQ(code([] { throw InfeasiblePlanError("x"); }), kExitInfeasiblePlan);
  EXPECT_EQ(code([] { throw SimulationInvariantError("x"); }), kExitInvariant);
  EXPECT_EQ(code([] { throw std::runtime_error("x"); }), kExitFailure);
}

TEST(Reports, ByteIdenticalAcrossReruns) {
  auto render = [] {
    const RunOutcome r = execute_run(spec(5, true));
    Provenance pv{"test", "0000000000000000", 5};
    std::ostringstream trips, events, contour, report;
    write_trips_csv(trips, pv, r.result.trips);
    write_events_jsonl(events, pv, r.result.events);
    write_contour_csv(contour, pv, *r.contour);
    write_report_csv(report, pv, {ReportRow{"test", "comc", "5", 1, r.report}});
    return trips.str() + events.str() + contour.str() + report.str();
  };
  const std::string a = render();
  const std::string b = render();
  EXPECT_EQ(a, b);
  EXPECT_EQ(first_line(a), "# scenario test hash 0000000000000000 seed 5");
}

TEST(Reports, EventsStartWithProvenance) {
  std::ostringstream os;
  write_events_jsonl(os, {"s", "abcd", 3}, {sim::Event{1.5, "cycle_requested", {{"cycle", 0LL}}}});
  const auto first = nlohmann::json::parse(first_line(os.str()));
  EXPECT_EQ(first["type"], "provenance");
  EXPECT_EQ(first["seed"], 3);
  const auto second = nlohmann::json::parse(second_line(os.str()));
  EXPECT_EQ(second["type"], "cycle_requested");
  EXPECT_EQ(second["cycle"], 0);
}

TEST(Reports, ComparisonCsvRows) {
  DelayReport base, comc;
  sim::TripRecord r;
  r.entry_time = 0.0;
  r.ideal_time = 76.2;
  r.exit_time = 76.2 + 78.82;
  base.add(r);
  r.exit_time = 76.2 + 10.72;
  comc.add(r);
  std::ostringstream os;
  write_comparison_csv(os, {"s", "h", std::nullopt}, {ComparisonRow{"2C", compare_cases(base, comc)}});
  EXPECT_NE(os.str().find("2C,overall,delay_s,78.82,10.72,-68.10,-86.4"), std::string::npos);
  EXPECT_NE(os.str().find("2C,ramp,delay_s,NA,NA,NA,NA"), std::string::npos);
}

}  // namespace
}  // namespace comc
