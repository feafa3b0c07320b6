#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace comc::sim {

enum class VehicleClass { kMainline, kRamp };
enum class Lane { kInner, kOuter, kAccel, kRamp };
enum class Role { kNormal, kFacilitating, kPlatoonLeader, kPlatoonMember };

std::string_view to_string(VehicleClass c);
std::string_view to_string(Lane l);
std::string_view to_string(Role r);

struct VehicleState {
  int id = 0;
  VehicleClass cls = VehicleClass::kMainline;
  Lane lane = Lane::kInner;
  double x = 0.0;          // [m], unified longitudinal coordinate
  double v = 0.0;          // [m/s]
  double v_desired = 0.0;  // [m/s]
  Role role = Role::kNormal;
  double spawn_time = 0.0;
};

// Network layout on one longitudinal axis. The mainline runs from 0 to
// network_end(); the ramp link ends at mp() and continues as the parallel
// acceleration lane over the merging area.
struct NetworkGeometry {
  double upstream_len = 2000.0;
  double merge_len = 240.0;
  double downstream_len = 500.0;
  double ramp_len = 700.0;
  int mainline_lanes = 2;
  double d_prime = 457.2;  // MP to EM
  double s_accel = 300.0;  // WP to MP along the ramp
  double measure_margin = 100.0;  // excluded after each origin and before the end

  double mp() const { return upstream_len; }
  double em() const { return mp() + d_prime; }
  double wp() const { return mp() - s_accel; }
  double ramp_start() const { return mp() - ramp_len; }
  double accel_end() const { return mp() + merge_len; }
  double network_end() const { return upstream_len + merge_len + downstream_len; }
  double exit_position() const { return network_end() - measure_margin; }
  // Where trip timing starts for each class.
  double entry_position(VehicleClass c) const;
  // Measured length over design speed, link by link.
  double ideal_time(VehicleClass c, double v_mainline, double v_ramp) const;

  // Throws ValidationError. `accel_distance` is v_free^2 / (2 a_max).
  void validate(double accel_distance) const;
};

struct TripRecord {
  int vehicle_id = 0;
  VehicleClass cls = VehicleClass::kMainline;
  double entry_time = 0.0;
  double exit_time = 0.0;
  double measured_path_length = 0.0;
  double ideal_time = 0.0;
};

struct TrajectorySample {
  double t = 0.0;
  int vehicle_id = 0;
  VehicleClass cls = VehicleClass::kMainline;
  Lane lane = Lane::kInner;
  double x = 0.0;
  double v = 0.0;
};

class TrajectorySink {
 public:
  virtual ~TrajectorySink() = default;
  virtual void on_sample(const TrajectorySample& s) = 0;
};

using EventValue = std::variant<long long, double, std::string>;

struct Event {
  double t = 0.0;
  std::string type;
  std::vector<std::pair<std::string, EventValue>> fields;
};

}  // namespace comc::sim
