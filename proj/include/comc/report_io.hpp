#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "comc/metrics.hpp"
#include "comc/optimizer.hpp"
#include "comc/sim/simulation.hpp"
#include "comc/sweep.hpp"

namespace comc {

// First line of every CSV: "# scenario <name> hash <hash> seed <seed|pooled>".
struct Provenance {
  std::string scenario;
  std::string hash;
  std::optional<std::uint64_t> seed;  // empty for pooled outputs

  std::string comment() const;
  nlohmann::json to_json() const;
};

// Fixed-precision formatting so that reruns give identical bytes. NaN and
// missing values print as NA.
std::string fmt(double v, int decimals = 3);
std::string fmt(const std::optional<double>& v, int decimals = 3);

nlohmann::json plan_to_json(const ControlPlan& p);

// axis_value,n,d_m,v_c_kmh,m,omega_ms,r_per_h,delay_main_s,delay_ramp_s,objective_s_per_h,feasible
void write_plan_csv(std::ostream& os, const Provenance& pv, const std::vector<SweepRow>& rows);
// q_m_vph,rho,max_q_r_vph
void write_frontier_csv(std::ostream& os, const Provenance& pv,
                        const std::vector<FrontierPoint>& points);
// vehicle_id,class,entry_time_s,exit_time_s,measured_path_length_m,ideal_time_s,delay_s
void write_trips_csv(std::ostream& os, const Provenance& pv,
                     const std::vector<sim::TripRecord>& trips);
// One JSON object per line; the first line carries the provenance.
void write_events_jsonl(std::ostream& os, const Provenance& pv,
                        const std::vector<sim::Event>& events);
// t_bin_start_s,x_bin_start_m,mean_speed_kmh,count
void write_contour_csv(std::ostream& os, const Provenance& pv, const SpeedContour& c);

struct ReportRow {
  std::string scenario;
  std::string case_name;  // base or comc
  std::string seed;       // a seed, or "pooled"
  int runs = 0;
  DelayReport report;
};
// scenario,case,seed,runs,mainline_count,ramp_count,mainline_travel_time_s,
// ramp_travel_time_s,overall_travel_time_s,mainline_delay_s,ramp_delay_s,overall_delay_s
void write_report_csv(std::ostream& os, const Provenance& pv, const std::vector<ReportRow>& rows);

struct ComparisonRow {
  std::string scenario;
  CaseComparison comparison;
};
// scenario,class,quantity,base,comc,delta,percent
void write_comparison_csv(std::ostream& os, const Provenance& pv,
                          const std::vector<ComparisonRow>& rows);

nlohmann::json stats_to_json(const sim::SimStats& s);

// Streams samples to CSV as the simulation runs:
// t_s,vehicle_id,class,lane,x_m,v_kmh
class TrajectoryCsvSink : public sim::TrajectorySink {
 public:
  TrajectoryCsvSink(const std::filesystem::path& path, const Provenance& pv);
  void on_sample(const sim::TrajectorySample& s) override;

 private:
  std::ofstream out_;
};

// Opens for writing, creating parent directories. Throws Error on failure.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace comc
