// Command-line driver: plan, sweep, frontier, simulate, compare, batch.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "comc/batch.hpp"
#include "comc/config.hpp"
#include "comc/error.hpp"
#include "comc/optimizer.hpp"
#include "comc/report_io.hpp"
#include "comc/sweep.hpp"
#include "comc/units.hpp"

namespace fs = std::filesystem;
using namespace comc;

namespace {

struct Options {
  std::vector<std::string> scenarios;
  std::string axis = "weights";
  std::string control;  // on, off, or empty for the scenario's setting
  std::string seeds;
  std::string out;
  int parallel = 0;
  bool trajectory = true;
  double q_min = 1800.0;
  double q_max = 2300.0;
  double q_step = 50.0;
  std::string rho_set = "0.2,0.4,0.6,0.8";
};

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split(s)) {
    try {
      std::size_t used = 0;
      if (item.find('-') != std::string::npos) throw std::invalid_argument(item);
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("--seeds", "not a non-negative integer: '" + item + "'");
    }
  }
  if (out.empty()) throw ValidationError("--seeds", "must not be empty");
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const char* flag) {
  std::vector<double> out;
  for (const auto& item : split(s)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError(flag, "not a number: '" + item + "'");
    }
  }
  if (out.empty()) throw ValidationError(flag, "must not be empty");
  return out;
}

ScenarioFile load(const std::string& path, const Options& o) {
  ScenarioFile s = load_scenario(path);
  if (!o.seeds.empty()) s.seeds = parse_seeds(o.seeds);
  if (o.control == "on") s.sim.control = true;
  if (o.control == "off") s.sim.control = false;
  if (o.parallel > 0) s.parallel = o.parallel;
  return s;
}

fs::path out_dir(const ScenarioFile& s, const Options& o) {
  return o.out.empty() ? fs::path(s.output_dir) : fs::path(o.out);
}

Provenance provenance(const ScenarioFile& s) { return {s.name, scenario_hash(s), std::nullopt}; }

const char* case_name(bool control) { return control ? "comc" : "base"; }

void print_plan(const ControlPlan& p) {
  std::printf("n=%d d=%.0f m v_c=%.2f km/h m=%d omega=%.3f m/s r=%.2f /h objective=%.1f s/h\n",
              p.n, p.d, units::ms_to_kmh(p.v_c), p.m, p.omega, p.r, p.objective);
}

int cmd_plan(const Options& o) {
  const ScenarioFile s = load(o.scenarios.front(), o);
  const auto plan = solve(s.sim.inputs, s.sim.solver);
  const fs::path dir = out_dir(s, o);
  const Provenance pv = provenance(s);
  {
    auto csv = open_output(dir / "plan.csv");
    write_plan_csv(csv, pv, {SweepRow{std::numeric_limits<double>::quiet_NaN(), plan}});
  }
  auto js = open_output(dir / "plan.json");
  nlohmann::json doc = pv.to_json();
  doc["feasible"] = plan.has_value();
  if (plan) doc["plan"] = plan_to_json(*plan);
  js << doc.dump(2) << '\n';
  if (!plan) {
    std::fprintf(stderr, "%s: no feasible control plan\n", s.name.c_str());
    return kExitInfeasiblePlan;
  }
  print_plan(*plan);
  return kExitOk;
}

int cmd_sweep(const Options& o) {
  const ScenarioFile s = load(o.scenarios.front(), o);
  const SweepAxis axis = sweep_axis_from_string(o.axis);
  const auto rows = parameter_sweep(s.sim.inputs, axis, unit_grid(), s.sim.solver, s.parallel);
  auto csv = open_output(out_dir(s, o) / ("sweep_" + o.axis + ".csv"));
  write_plan_csv(csv, provenance(s), rows);
  for (const auto& r : rows) {
    std::printf("%s=%.1f  ", std::string(to_string(axis)).c_str(), r.axis_value);
    if (r.plan) {
      print_plan(*r.plan);
    } else {
      std::printf("no solution\n");
    }
  }
  return kExitOk;
}

int cmd_frontier(const Options& o) {
  const ScenarioFile s = load(o.scenarios.front(), o);
  if (!(o.q_step > 0.0) || o.q_max < o.q_min) {
    throw ValidationError("--q-step", "need q_step > 0 and q_max >= q_min");
  }
  std::vector<double> q_grid;
  for (double q = o.q_min; q <= o.q_max + 1e-9; q += o.q_step) q_grid.push_back(units::vph_to_vps(q));
  const auto rhos = parse_doubles(o.rho_set, "--rho-set");
  const auto points = ramp_flow_frontier(s.sim.inputs, q_grid, rhos, s.sim.solver, s.parallel);
  auto csv = open_output(out_dir(s, o) / "frontier.csv");
  write_frontier_csv(csv, provenance(s), points);
  for (const auto& p : points) {
    std::printf("q_m=%.0f rho=%.2f max_q_r=%.0f veh/h\n", units::vps_to_vph(p.q_m), p.rho,
                units::vps_to_vph(p.max_lambda));
  }
  return kExitOk;
}

struct CaseRuns {
  const ScenarioFile* scenario = nullptr;
  bool control = false;
  fs::path dir;
  std::size_t first = 0;  // index into the flat spec list
  std::size_t count = 0;
  std::string setup_error;
  int setup_status = kExitOk;
};

struct Batch {
  std::vector<CaseRuns> cases;
  std::vector<RunSpec> specs;
  std::vector<RunOutcome> outcomes;
};

// Builds every (scenario, case, seed) run. A control case without a feasible
// plan is recorded as failed and contributes no runs.
Batch plan_batch(const std::vector<ScenarioFile>& scenarios, const std::vector<bool>& controls,
                 const fs::path& root, bool per_scenario_dir, bool trajectory) {
  Batch b;
  for (const auto& s : scenarios) {
    std::optional<ControlPlan> plan;
    bool solved = false;
    for (bool control : controls) {
      CaseRuns c;
      c.scenario = &s;
      c.control = control;
      c.dir = (per_scenario_dir ? root / s.name : root) / case_name(control);
      c.first = b.specs.size();
      if (control && !solved) {
        plan = solve(s.sim.inputs, s.sim.solver);
        solved = true;
      }
      if (control && !plan) {
        c.setup_status = kExitInfeasiblePlan;
        c.setup_error = "no feasible control plan; cannot coordinate";
        b.cases.push_back(c);
        continue;
      }
      for (std::uint64_t seed : s.seeds) {
        RunSpec r;
        r.provenance = provenance(s);
        r.config = s.sim;
        r.config.seed = seed;
        r.config.control = control;
        if (control) r.config.plan = plan;
        r.contour = s.contour;
        if (trajectory) r.trajectory_csv = c.dir / ("trajectory_seed" + std::to_string(seed) + ".csv");
        b.specs.push_back(std::move(r));
      }
      c.count = b.specs.size() - c.first;
      b.cases.push_back(c);
    }
  }
  return b;
}

// Per-seed files plus the pooled report and contour of one case.
PooledOutcome write_case(const Batch& b, const CaseRuns& c) {
  const ScenarioFile& s = *c.scenario;
  const Provenance pooled_pv = provenance(s);
  std::vector<RunOutcome> runs(b.outcomes.begin() + c.first,
                               b.outcomes.begin() + c.first + c.count);
  std::vector<ReportRow> rows;
  for (const auto& r : runs) {
    if (!r.ok()) continue;
    Provenance pv = pooled_pv;
    pv.seed = r.seed;
    const std::string tag = "_seed" + std::to_string(r.seed);
    auto trips = open_output(c.dir / ("trips" + tag + ".csv"));
    write_trips_csv(trips, pv, r.result.trips);
    auto events = open_output(c.dir / ("events" + tag + ".jsonl"));
    write_events_jsonl(events, pv, r.result.events);
    auto stats = open_output(c.dir / ("stats" + tag + ".json"));
    nlohmann::json doc = pv.to_json();
    doc["case"] = case_name(c.control);
    doc["stats"] = stats_to_json(r.result.stats);
    if (r.result.plan) doc["plan"] = plan_to_json(*r.result.plan);
    stats << doc.dump(2) << '\n';
    rows.push_back({s.name, case_name(c.control), std::to_string(r.seed), 1, r.report});
  }
  PooledOutcome p = pool(runs);
  if (p.runs > 0) {
    rows.push_back({s.name, case_name(c.control), "pooled", p.runs, p.report});
    auto rep = open_output(c.dir / "report.csv");
    write_report_csv(rep, pooled_pv, rows);
  }
  if (p.contour) {
    auto cont = open_output(c.dir / "contour.csv");
    write_contour_csv(cont, pooled_pv, *p.contour);
  }
  return p;
}

// Prints failures; returns the status of the first one.
int report_failures(const Batch& b) {
  int status = kExitOk;
  for (const auto& c : b.cases) {
    if (c.setup_status != kExitOk) {
      std::fprintf(stderr, "%s %s: %s\n", c.scenario->name.c_str(), case_name(c.control),
                   c.setup_error.c_str());
      if (status == kExitOk) status = c.setup_status;
    }
    for (std::size_t i = c.first; i < c.first + c.count; ++i) {
      const RunOutcome& r = b.outcomes[i];
      if (r.ok()) continue;
      std::fprintf(stderr, "%s %s seed %llu: %s\n", c.scenario->name.c_str(),
                   case_name(c.control), static_cast<unsigned long long>(r.seed), r.error.c_str());
      if (status == kExitOk) status = r.status;
    }
  }
  return status;
}

void print_pooled(const std::string& name, bool control, const PooledOutcome& p) {
  const auto all = p.report.overall();
  std::printf("%-8s %-4s runs=%d failed=%d  delay main %s s  ramp %s s  overall %s s\n",
              name.c_str(), case_name(control), p.runs, p.failures,
              fmt(p.report.mainline.mean_delay(), 2).c_str(),
              fmt(p.report.ramp.mean_delay(), 2).c_str(), fmt(all.mean_delay(), 2).c_str());
}

std::string combined_hash(const std::vector<ScenarioFile>& scenarios) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& s : scenarios) {
    for (unsigned char c : scenario_hash(s)) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Runs the given cases for every scenario and writes all outputs. Adds a
// comparison when both cases ran.
int run_and_write(const std::vector<ScenarioFile>& scenarios, const std::vector<bool>& controls,
                  const fs::path& root, bool per_scenario_dir, bool trajectory, int parallel) {
  Batch b = plan_batch(scenarios, controls, root, per_scenario_dir, trajectory);
  b.outcomes = batch_execute(b.specs, parallel);

  std::vector<ReportRow> summary;
  std::vector<ComparisonRow> comparisons;
  std::map<std::string, std::map<bool, PooledOutcome>> pooled;
  for (const auto& c : b.cases) {
    if (c.setup_status != kExitOk) continue;
    PooledOutcome p = write_case(b, c);
    print_pooled(c.scenario->name, c.control, p);
    if (p.runs > 0) summary.push_back({c.scenario->name, case_name(c.control), "pooled", p.runs, p.report});
    pooled[c.scenario->name][c.control] = std::move(p);
  }
  if (controls.size() == 2) {
    for (const auto& s : scenarios) {
      auto& m = pooled[s.name];
      if (m.count(false) && m.count(true) && m[false].runs > 0 && m[true].runs > 0) {
        comparisons.push_back({s.name, compare_cases(m[false].report, m[true].report)});
      }
    }
  }
  const Provenance pv = scenarios.size() == 1
                            ? provenance(scenarios.front())
                            : Provenance{"batch", combined_hash(scenarios), std::nullopt};
  if (!summary.empty()) {
    auto rep = open_output(root / "report.csv");
    write_report_csv(rep, pv, summary);
  }
  if (!comparisons.empty()) {
    auto cmp = open_output(root / "comparison.csv");
    write_comparison_csv(cmp, pv, comparisons);
    for (const auto& c : comparisons) {
      std::printf("%-8s overall delay change %s %%\n", c.scenario.c_str(),
                  fmt(c.comparison.overall.delay.percent, 1).c_str());
    }
  }
  return report_failures(b);
}

int cmd_simulate(const Options& o) {
  const ScenarioFile s = load(o.scenarios.front(), o);
  return run_and_write({s}, {s.sim.control}, out_dir(s, o), false, o.trajectory, s.parallel);
}

int cmd_compare(const Options& o) {
  const ScenarioFile s = load(o.scenarios.front(), o);
  return run_and_write({s}, {false, true}, out_dir(s, o), false, o.trajectory, s.parallel);
}

int cmd_batch(const Options& o) {
  std::vector<ScenarioFile> all;
  for (const auto& p : o.scenarios) all.push_back(load(p, o));
  std::map<std::string, int> names;
  for (const auto& s : all) {
    if (names[s.name]++) throw ValidationError("name", "duplicate scenario name '" + s.name + "'");
  }
  std::vector<bool> controls{false, true};
  if (o.control == "on") controls = {true};
  if (o.control == "off") controls = {false};
  const fs::path root = o.out.empty() ? fs::path("out") : fs::path(o.out);
  const int parallel = o.parallel > 0 ? o.parallel : all.front().parallel;
  return run_and_write(all, controls, root, true, o.trajectory, parallel);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coordinated merging control: planning and simulation"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool many) {
    auto* opt = sub->add_option("--scenario", o.scenarios, "Scenario JSON file")->required();
    if (!many) opt->expected(1);
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--parallel", o.parallel, "Concurrent workers")->check(CLI::PositiveNumber);
  };
  auto add_sim = [&](CLI::App* sub) {
    sub->add_option("--seeds", o.seeds, "Comma-separated seeds");
    sub->add_flag("--trajectory,!--no-trajectory", o.trajectory,
                  "Write per-seed trajectory CSV (default on)");
  };

  auto* plan = app.add_subcommand("plan", "Solve for the control plan");
  add_common(plan, false);
  auto* sweep = app.add_subcommand("sweep", "Sweep weights or rho over 0.0..1.0");
  add_common(sweep, false);
  sweep->add_option("--axis", o.axis, "weights or rho")->check(CLI::IsMember({"weights", "rho"}));
  auto* frontier = app.add_subcommand("frontier", "Maximum ramp flow over a q_m grid");
  add_common(frontier, false);
  frontier->add_option("--q-min", o.q_min, "Lowest mainline volume [veh/h/ln]");
  frontier->add_option("--q-max", o.q_max, "Highest mainline volume [veh/h/ln]");
  frontier->add_option("--q-step", o.q_step, "Mainline volume step [veh/h/ln]");
  frontier->add_option("--rho-set", o.rho_set, "Comma-separated rho values");
  auto* simulate = app.add_subcommand("simulate", "Run the microsimulation for every seed");
  add_common(simulate, false);
  add_sim(simulate);
  simulate->add_option("--control", o.control, "on or off")->check(CLI::IsMember({"on", "off"}));
  auto* compare = app.add_subcommand("compare", "Run base and controlled cases and compare");
  add_common(compare, false);
  add_sim(compare);
  auto* batch = app.add_subcommand("batch", "Run several scenarios in both cases");
  add_common(batch, true);
  add_sim(batch);
  batch->add_option("--control", o.control, "Restrict to on or off")
      ->check(CLI::IsMember({"on", "off"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*plan) return cmd_plan(o);
    if (*sweep) return cmd_sweep(o);
    if (*frontier) return cmd_frontier(o);
    if (*simulate) return cmd_simulate(o);
    if (*compare) return cmd_compare(o);
    if (*batch) return cmd_batch(o);
  } catch (const std::exception& e) {
    const int code = exit_code_for_current_exception();
    std::fprintf(stderr, "error: %s\n", e.what());
    return code;
  }
  return kExitFailure;
}
