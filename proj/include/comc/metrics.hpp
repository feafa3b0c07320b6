#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "comc/sim/types.hpp"

namespace comc {

// Negative delays down to this are tick discretization; below it the record
// is rejected.
inline constexpr double kDelayTolerance = 0.1;  // [s]

// (exit - entry) - ideal_time, unclamped. Throws DataError for malformed
// records and for delays below -kDelayTolerance.
double trip_delay(const sim::TripRecord& r);

struct ClassSummary {
  long long count = 0;
  double travel_time_sum = 0.0;  // [s]
  double delay_sum = 0.0;        // [s], negatives clamped to 0

  // Empty when count == 0.
  std::optional<double> mean_travel_time() const;
  std::optional<double> mean_delay() const;

  ClassSummary& operator+=(const ClassSummary& o);
};

// Vehicle-weighted travel time and delay per class. Reports built from
// disjoint record sets merge exactly (up to float summation order).
struct DelayReport {
  ClassSummary mainline;
  ClassSummary ramp;

  ClassSummary overall() const;
  bool empty() const { return mainline.count + ramp.count == 0; }

  void add(const sim::TripRecord& r);
  DelayReport& merge(const DelayReport& o);
};

DelayReport aggregate_report(const std::vector<sim::TripRecord>& records);
// Pools per-run reports in the given order.
DelayReport aggregate_report(const std::vector<DelayReport>& runs);

// Change of one quantity, CoMC relative to base. `percent` is empty when the
// base value is 0 or either side is missing.
struct Change {
  std::optional<double> base;
  std::optional<double> comc;
  std::optional<double> delta;
  std::optional<double> percent;
};

struct ClassComparison {
  Change travel_time;
  Change delay;
};

struct CaseComparison {
  ClassComparison mainline;
  ClassComparison ramp;
  ClassComparison overall;
};

// Throws DataError when either report is empty.
CaseComparison compare_cases(const DelayReport& base, const DelayReport& comc);

// Space-time window and bin widths. The last bin on each axis is cut at the
// window edge so that the bins tile the window exactly.
struct ContourWindow {
  double t_start = 0.0;
  double t_end = 7200.0;
  double x_start = 500.0;
  double x_end = 2757.2;
  double t_bin = 300.0;
  double x_bin = 100.0;
  // Samples on the acceleration lane count towards the mainline cells; ramp
  // link samples never do.
  bool include_acceleration_lane = true;

  // Throws ValidationError.
  void validate() const;
};

struct ContourCell {
  double t_start = 0.0;
  double x_start = 0.0;
  double speed_sum = 0.0;  // [m/s]
  long long count = 0;

  std::optional<double> mean_speed_kmh() const;
};

// Accumulates trajectory samples into mean-speed cells. Usable directly as a
// simulation sink.
class SpeedContour : public sim::TrajectorySink {
 public:
  explicit SpeedContour(const ContourWindow& w);

  void on_sample(const sim::TrajectorySample& s) override;
  // Returns false when (t, x) lies outside the half-open window.
  bool add(double t, double x, double v);
  // Requires an identical window.
  SpeedContour& merge(const SpeedContour& o);

  const ContourWindow& window() const { return w_; }
  std::size_t time_bins() const { return nt_; }
  std::size_t space_bins() const { return nx_; }
  const ContourCell& cell(std::size_t it, std::size_t ix) const { return cells_[it * nx_ + ix]; }
  const std::vector<ContourCell>& cells() const { return cells_; }
  long long total_count() const;
  // Lowest populated cell mean among cells starting at or after t_from.
  std::optional<double> min_mean_speed_kmh(double t_from = -1e300) const;

 private:
  ContourWindow w_;
  std::size_t nt_ = 0;
  std::size_t nx_ = 0;
  std::vector<ContourCell> cells_;
};

SpeedContour speed_contour(const std::vector<sim::TrajectorySample>& samples,
                           const ContourWindow& w);

}  // namespace comc
