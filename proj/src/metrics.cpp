#include "comc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "comc/error.hpp"
#include "comc/units.hpp"

namespace comc {

double trip_delay(const sim::TripRecord& r) {
  auto bad = [&](const std::string& why) {
    std::ostringstream os;
    os << "trip of vehicle " << r.vehicle_id << ": " << why;
    throw DataError(os.str());
  };
  if (!std::isfinite(r.entry_time) || !std::isfinite(r.exit_time) || !std::isfinite(r.ideal_time)) {
    bad("non-finite time");
  }
  if (!(r.exit_time > r.entry_time)) bad("exit_time must exceed entry_time");
  if (!(r.ideal_time > 0.0)) bad("ideal_time must be > 0");
  const double d = (r.exit_time - r.entry_time) - r.ideal_time;
  if (d < -kDelayTolerance) {
    std::ostringstream os;
    os << "delay " << d << " s below tolerance";
    bad(os.str());
  }
  return d;
}

std::optional<double> ClassSummary::mean_travel_time() const {
  if (count == 0) return std::nullopt;
  return travel_time_sum / static_cast<double>(count);
}

std::optional<double> ClassSummary::mean_delay() const {
  if (count == 0) return std::nullopt;
  return delay_sum / static_cast<double>(count);
}

ClassSummary& ClassSummary::operator+=(const ClassSummary& o) {
  count += o.count;
  travel_time_sum += o.travel_time_sum;
  delay_sum += o.delay_sum;
  return *this;
}

ClassSummary DelayReport::overall() const {
  ClassSummary s = mainline;
  s += ramp;
  return s;
}

void DelayReport::add(const sim::TripRecord& r) {
  const double d = trip_delay(r);
  ClassSummary& c = r.cls == sim::VehicleClass::kMainline ? mainline : ramp;
  ++c.count;
  c.travel_time_sum += r.exit_time - r.entry_time;
  c.delay_sum += std::max(0.0, d);
}

DelayReport& DelayReport::merge(const DelayReport& o) {
  mainline += o.mainline;
  ramp += o.ramp;
  return *this;
}

DelayReport aggregate_report(const std::vector<sim::TripRecord>& records) {
  DelayReport rep;
  for (const auto& r : records) rep.add(r);
  return rep;
}

DelayReport aggregate_report(const std::vector<DelayReport>& runs) {
  DelayReport rep;
  for (const auto& r : runs) rep.merge(r);
  return rep;
}

namespace {

Change change(std::optional<double> base, std::optional<double> comc) {
  Change c;
  c.base = base;
  c.comc = comc;
  if (base && comc) {
    c.delta = *comc - *base;
    if (*base != 0.0) c.percent = 100.0 * *c.delta / *base;
  }
  return c;
}

ClassComparison compare_class(const ClassSummary& base, const ClassSummary& comc) {
  return {change(base.mean_travel_time(), comc.mean_travel_time()),
          change(base.mean_delay(), comc.mean_delay())};
}

}  // namespace

CaseComparison compare_cases(const DelayReport& base, const DelayReport& comc) {
  if (base.empty() || comc.empty()) throw DataError("cannot compare an empty report");
  return {compare_class(base.mainline, comc.mainline), compare_class(base.ramp, comc.ramp),
          compare_class(base.overall(), comc.overall())};
}

void ContourWindow::validate() const {
  if (!(t_end > t_start)) throw ValidationError("contour.t_end", "must exceed t_start");
  if (!(x_end > x_start)) throw ValidationError("contour.x_end", "must exceed x_start");
  if (!(t_bin > 0.0)) throw ValidationError("contour.t_bin", "must be > 0");
  if (!(x_bin > 0.0)) throw ValidationError("contour.x_bin", "must be > 0");
}

std::optional<double> ContourCell::mean_speed_kmh() const {
  if (count == 0) return std::nullopt;
  return units::ms_to_kmh(speed_sum / static_cast<double>(count));
}

namespace {

std::size_t bin_count(double from, double to, double width) {
  // A remainder below 1e-9 of a bin is rounding, not a partial bin.
  return static_cast<std::size_t>(std::ceil((to - from) / width - 1e-9));
}

}  // namespace

SpeedContour::SpeedContour(const ContourWindow& w) : w_(w) {
  w_.validate();
  nt_ = bin_count(w_.t_start, w_.t_end, w_.t_bin);
  nx_ = bin_count(w_.x_start, w_.x_end, w_.x_bin);
  cells_.resize(nt_ * nx_);
  for (std::size_t i = 0; i < nt_; ++i) {
    for (std::size_t j = 0; j < nx_; ++j) {
      ContourCell& c = cells_[i * nx_ + j];
      c.t_start = w_.t_start + static_cast<double>(i) * w_.t_bin;
      c.x_start = w_.x_start + static_cast<double>(j) * w_.x_bin;
    }
  }
}

void SpeedContour::on_sample(const sim::TrajectorySample& s) {
  if (s.lane == sim::Lane::kRamp) return;
  if (s.lane == sim::Lane::kAccel && !w_.include_acceleration_lane) return;
  add(s.t, s.x, s.v);
}

bool SpeedContour::add(double t, double x, double v) {
  if (!(t >= w_.t_start && t < w_.t_end && x >= w_.x_start && x < w_.x_end)) return false;
  const auto it = std::min(nt_ - 1, static_cast<std::size_t>((t - w_.t_start) / w_.t_bin));
  const auto ix = std::min(nx_ - 1, static_cast<std::size_t>((x - w_.x_start) / w_.x_bin));
  ContourCell& c = cells_[it * nx_ + ix];
  c.speed_sum += v;
  ++c.count;
  return true;
}

SpeedContour& SpeedContour::merge(const SpeedContour& o) {
  const ContourWindow& a = w_;
  const ContourWindow& b = o.w_;
  if (a.t_start != b.t_start || a.t_end != b.t_end || a.x_start != b.x_start ||
      a.x_end != b.x_end || a.t_bin != b.t_bin || a.x_bin != b.x_bin ||
      a.include_acceleration_lane != b.include_acceleration_lane) {
    throw DataError("cannot merge contours with different windows");
  }
  for (std::size_t k = 0; k < cells_.size(); ++k) {
    cells_[k].speed_sum += o.cells_[k].speed_sum;
    cells_[k].count += o.cells_[k].count;
  }
  return *this;
}

long long SpeedContour::total_count() const {
  long long n = 0;
  for (const auto& c : cells_) n += c.count;
  return n;
}

std::optional<double> SpeedContour::min_mean_speed_kmh(double t_from) const {
  std::optional<double> lo;
  for (const auto& c : cells_) {
    if (c.t_start < t_from) continue;
    const auto m = c.mean_speed_kmh();
    if (m && (!lo || *m < *lo)) lo = m;
  }
  return lo;
}

SpeedContour speed_contour(const std::vector<sim::TrajectorySample>& samples,
                           const ContourWindow& w) {
  SpeedContour c(w);
  for (const auto& s : samples) c.on_sample(s);
  return c;
}

}  // namespace comc
