#include "comc/report_io.hpp"

#include <cmath>
#include <cstdio>

#include "comc/error.hpp"
#include "comc/units.hpp"

namespace comc {

using nlohmann::json;

std::string Provenance::comment() const {
  std::string s = "# scenario " + scenario + " hash " + hash + " seed ";
  s += seed ? std::to_string(*seed) : std::string("pooled");
  return s;
}

json Provenance::to_json() const {
  json j = {{"scenario", scenario}, {"scenario_hash", hash}};
  j["seed"] = seed ? json(*seed) : json("pooled");
  return j;
}

std::string fmt(double v, int decimals) {
  if (!std::isfinite(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  // Avoid "-0.000".
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

std::string fmt(const std::optional<double>& v, int decimals) {
  return v ? fmt(*v, decimals) : std::string("NA");
}

json plan_to_json(const ControlPlan& p) {
  return {{"n", p.n},
          {"d_m", p.d},
          {"v_c_kmh", units::ms_to_kmh(p.v_c)},
          {"m", p.m},
          {"omega_ms", p.omega},
          {"r_per_h", p.r},
          {"delay_main_s", p.delay_main},
          {"delay_ramp_s", p.delay_ramp},
          {"objective_s_per_h", p.objective},
          {"a_req_ms2", p.a_req},
          {"state_o", {{"v_kmh", units::ms_to_kmh(p.state_o.v)},
                       {"q_vph", units::vps_to_vph(p.state_o.q)},
                       {"h_s", p.state_o.h}}},
          {"state_c", {{"v_kmh", units::ms_to_kmh(p.state_c.v)},
                       {"q_vph", units::vps_to_vph(p.state_c.q)},
                       {"h_s", p.state_c.h}}}};
}

void write_plan_csv(std::ostream& os, const Provenance& pv, const std::vector<SweepRow>& rows) {
  os << pv.comment() << '\n';
  os << "axis_value,n,d_m,v_c_kmh,m,omega_ms,r_per_h,delay_main_s,delay_ramp_s,objective_s_per_h,"
        "feasible\n";
  for (const auto& r : rows) {
    os << fmt(r.axis_value, 2) << ',';
    if (!r.plan) {
      os << "NA,NA,NA,NA,NA,NA,NA,NA,NA,false\n";
      continue;
    }
    const ControlPlan& p = *r.plan;
    os << p.n << ',' << fmt(p.d, 1) << ',' << fmt(units::ms_to_kmh(p.v_c), 2) << ',' << p.m
       << ',' << fmt(p.omega, 4) << ',' << fmt(p.r, 3) << ',' << fmt(p.delay_main, 3) << ','
       << fmt(p.delay_ramp, 3) << ',' << fmt(p.objective, 2) << ",true\n";
  }
}

void write_frontier_csv(std::ostream& os, const Provenance& pv,
                        const std::vector<FrontierPoint>& points) {
  os << pv.comment() << '\n';
  os << "q_m_vph,rho,max_q_r_vph\n";
  for (const auto& p : points) {
    os << fmt(units::vps_to_vph(p.q_m), 1) << ',' << fmt(p.rho, 2) << ','
       << fmt(units::vps_to_vph(p.max_lambda), 1) << '\n';
  }
}

void write_trips_csv(std::ostream& os, const Provenance& pv,
                     const std::vector<sim::TripRecord>& trips) {
  os << pv.comment() << '\n';
  os << "vehicle_id,class,entry_time_s,exit_time_s,measured_path_length_m,ideal_time_s,delay_s\n";
  for (const auto& t : trips) {
    os << t.vehicle_id << ',' << sim::to_string(t.cls) << ',' << fmt(t.entry_time, 4) << ','
       << fmt(t.exit_time, 4) << ',' << fmt(t.measured_path_length, 2) << ','
       << fmt(t.ideal_time, 4) << ',' << fmt(t.exit_time - t.entry_time - t.ideal_time, 4)
       << '\n';
  }
}

namespace {

json event_to_json(const sim::Event& e) {
  json j = {{"t", e.t}, {"type", e.type}};
  for (const auto& [k, v] : e.fields) {
    std::visit([&, &key = k](const auto& x) { j[key] = x; }, v);
  }
  return j;
}

}  // namespace

void write_events_jsonl(std::ostream& os, const Provenance& pv,
                        const std::vector<sim::Event>& events) {
  json meta = pv.to_json();
  meta["type"] = "provenance";
  os << meta.dump() << '\n';
  for (const auto& e : events) os << event_to_json(e).dump() << '\n';
}

void write_contour_csv(std::ostream& os, const Provenance& pv, const SpeedContour& c) {
  os << pv.comment() << '\n';
  os << "t_bin_start_s,x_bin_start_m,mean_speed_kmh,count\n";
  for (const auto& cell : c.cells()) {
    os << fmt(cell.t_start, 1) << ',' << fmt(cell.x_start, 1) << ','
       << fmt(cell.mean_speed_kmh(), 2) << ',' << cell.count << '\n';
  }
}

void write_report_csv(std::ostream& os, const Provenance& pv, const std::vector<ReportRow>& rows) {
  os << pv.comment() << '\n';
  os << "scenario,case,seed,runs,mainline_count,ramp_count,mainline_travel_time_s,ramp_travel_time_s,"
        "overall_travel_time_s,mainline_delay_s,ramp_delay_s,overall_delay_s\n";
  for (const auto& r : rows) {
    const DelayReport& d = r.report;
    const ClassSummary all = d.overall();
    os << r.scenario << ',' << r.case_name << ',' << r.seed << ',' << r.runs << ',' << d.mainline.count << ','
       << d.ramp.count << ',' << fmt(d.mainline.mean_travel_time(), 2) << ','
       << fmt(d.ramp.mean_travel_time(), 2) << ',' << fmt(all.mean_travel_time(), 2) << ','
       << fmt(d.mainline.mean_delay(), 2) << ',' << fmt(d.ramp.mean_delay(), 2) << ','
       << fmt(all.mean_delay(), 2) << '\n';
  }
}

void write_comparison_csv(std::ostream& os, const Provenance& pv,
                          const std::vector<ComparisonRow>& rows) {
  os << pv.comment() << '\n';
  os << "scenario,class,quantity,base,comc,delta,percent\n";
  auto line = [&](const std::string& sc, const char* cls, const char* q, const Change& c) {
    os << sc << ',' << cls << ',' << q << ',' << fmt(c.base, 2) << ',' << fmt(c.comc, 2) << ','
       << fmt(c.delta, 2) << ',' << fmt(c.percent, 1) << '\n';
  };
  for (const auto& r : rows) {
    const CaseComparison& c = r.comparison;
    line(r.scenario, "mainline", "travel_time_s", c.mainline.travel_time);
    line(r.scenario, "ramp", "travel_time_s", c.ramp.travel_time);
    line(r.scenario, "overall", "travel_time_s", c.overall.travel_time);
    line(r.scenario, "mainline", "delay_s", c.mainline.delay);
    line(r.scenario, "ramp", "delay_s", c.ramp.delay);
    line(r.scenario, "overall", "delay_s", c.overall.delay);
  }
}

json stats_to_json(const sim::SimStats& s) {
  json leaders = json::array();
  for (const auto& l : s.leader_mp) {
    leaders.push_back({{"cycle", l.cycle},
                       {"t", l.t},
                       {"v_kmh", units::ms_to_kmh(l.v)},
                       {"v_c_kmh", units::ms_to_kmh(l.v_c)},
                       {"degraded", l.degraded}});
  }
  return {{"spawned_mainline", s.spawned_mainline},
          {"spawned_ramp", s.spawned_ramp},
          {"retired_mainline", s.retired_mainline},
          {"retired_ramp", s.retired_ramp},
          {"cycles_requested", s.cycles_requested},
          {"cycles_completed", s.cycles_completed},
          {"cycles_degraded", s.cycles_degraded},
          {"merge_failures", s.merge_failures},
          {"lane_changes", s.lane_changes},
          {"outer_to_inner_during_coordination", s.outer_to_inner_during_coordination},
          {"prohibited_changes", s.prohibited_changes},
          {"coordination_time_s", s.coordination_time},
          {"max_wp_queue", s.max_wp_queue},
          {"ticks", s.ticks},
          {"leader_at_mp", leaders}};
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

TrajectoryCsvSink::TrajectoryCsvSink(const std::filesystem::path& path, const Provenance& pv)
    : out_(open_output(path)) {
  out_ << pv.comment() << '\n';
  out_ << "t_s,vehicle_id,class,lane,x_m,v_kmh\n";
}

void TrajectoryCsvSink::on_sample(const sim::TrajectorySample& s) {
  out_ << fmt(s.t, 1) << ',' << s.vehicle_id << ',' << sim::to_string(s.cls) << ','
       << sim::to_string(s.lane) << ',' << fmt(s.x, 2) << ',' << fmt(units::ms_to_kmh(s.v), 2)
       << '\n';
}

}  // namespace comc
