#include "comc/sim/simulation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "comc/error.hpp"
#include "comc/sim/arrivals.hpp"

namespace comc::sim {

std::string_view to_string(VehicleClass c) {
  return c == VehicleClass::kMainline ? "mainline" : "ramp";
}

std::string_view to_string(Lane l) {
  switch (l) {
    case Lane::kInner:
      return "inner";
    case Lane::kOuter:
      return "outer";
    case Lane::kAccel:
      return "accel";
    case Lane::kRamp:
      return "ramp";
  }
  return "unknown";
}

std::string_view to_string(Role r) {
  switch (r) {
    case Role::kNormal:
      return "normal";
    case Role::kFacilitating:
      return "facilitating";
    case Role::kPlatoonLeader:
      return "platoon_leader";
    case Role::kPlatoonMember:
      return "platoon_member";
  }
  return "unknown";
}

double NetworkGeometry::entry_position(VehicleClass c) const {
  return (c == VehicleClass::kMainline ? 0.0 : ramp_start()) + measure_margin;
}

double NetworkGeometry::ideal_time(VehicleClass c, double v_mainline, double v_ramp) const {
  if (c == VehicleClass::kMainline) return (exit_position() - entry_position(c)) / v_mainline;
  return (mp() - entry_position(c)) / v_ramp + (exit_position() - mp()) / v_mainline;
}

void NetworkGeometry::validate(double accel_distance) const {
  auto positive = [](double v, const char* field) {
    if (!(v > 0.0)) throw ValidationError(field, "must be > 0");
  };
  positive(upstream_len, "geometry.upstream_len");
  positive(merge_len, "geometry.merge_len");
  positive(downstream_len, "geometry.downstream_len");
  positive(ramp_len, "geometry.ramp_len");
  positive(d_prime, "geometry.d_prime");
  positive(s_accel, "geometry.s_accel");
  if (mainline_lanes != 2) throw ValidationError("geometry.mainline_lanes", "only 2 is supported");
  if (em() > network_end()) {
    throw ValidationError("geometry.d_prime", "EM lies beyond the network end");
  }
  if (s_accel >= ramp_len) throw ValidationError("geometry.s_accel", "WP must lie on the ramp");
  if (s_accel < accel_distance) {
    throw ValidationError("geometry.s_accel", "shorter than the distance to reach v_free at a_max");
  }
  if (!(measure_margin >= 0.0) || 2.0 * measure_margin >= downstream_len + merge_len ||
      measure_margin >= ramp_len - s_accel) {
    throw ValidationError("geometry.measure_margin", "out of range");
  }
}

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw ValidationError("sim.dt", "must be > 0");
  if (!(duration >= 0.0)) throw ValidationError("sim.duration", "must be >= 0");
  if (!(sample_period > 0.0)) throw ValidationError("sim.sample_period", "must be > 0");
  inputs.validate();
  solver.validate();
  geometry.validate(inputs.fd.v_free * inputs.fd.v_free / (2.0 * inputs.a_max));
  if (std::abs(geometry.d_prime - inputs.d_prime) > 1e-9) {
    throw ValidationError("geometry.d_prime", "differs from coordination.d_prime");
  }
  if (std::abs(geometry.s_accel - inputs.s_accel) > 1e-9) {
    throw ValidationError("geometry.s_accel", "differs from coordination.s_accel");
  }
  const MicroParams& m = micro;
  if (!(m.cf.a_max > 0.0 && m.cf.b_max > 0.0 && m.cf.b_safe > 0.0)) {
    throw ValidationError("micro.car_following", "rates must be > 0");
  }
  if (!(m.b_comfort > 0.0)) throw ValidationError("micro.b_comfort", "must be > 0");
  if (!(m.lc.merge_b_start > 0.0 && m.lc.merge_b_end > 0.0 && m.lc.b_accept > 0.0)) {
    throw ValidationError("micro.lane_change", "braking rates must be > 0");
  }
  if (!(m.lc.platoon_tolerance > 0.0 && m.lc.platoon_tolerance <= 1.0)) {
    throw ValidationError("micro.lane_change.platoon_tolerance", "must lie in (0, 1]");
  }
}

namespace {

constexpr int kInner = 0;
constexpr int kOuter = 1;
constexpr int kSide = 2;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kStanding = 1.0;  // [m/s]

struct Vehicle {
  VehicleState s;
  int ch = kInner;
  double v_next = 0.0;
  double last_change = -std::numeric_limits<double>::infinity();
  double t_entry = kNaN;
  bool registered = false;  // stopped in the WP queue
  long long queue_seq = 0;
  bool in_platoon = false;
  bool released = false;
  double a_cap = kNaN;
  int yield_to = -1;   // index of the merging vehicle braked for this tick
  int yield_for = -1;  // id of that vehicle, kept across ticks
  double waiting_since = kNaN;
};

struct Source {
  int ch = kInner;
  VehicleClass cls = VehicleClass::kMainline;
  double entry_x = 0.0;
  double v_entry = 0.0;
  ArrivalStream stream;
  std::deque<double> pending;
};

Lane lane_label(int ch, double x, double mp) {
  if (ch == kInner) return Lane::kInner;
  if (ch == kOuter) return Lane::kOuter;
  return x >= mp ? Lane::kAccel : Lane::kRamp;
}

}  // namespace

struct Simulation::Impl {
  SimConfig cfg;
  TrajectorySink* sink = nullptr;
  std::optional<ControlPlan> plan;
  FdParams fd;
  NetworkGeometry geo;
  double h_c = 0.0;

  std::vector<Vehicle> veh;
  std::unordered_map<int, int> index_of;
  std::array<std::vector<int>, 3> lanes;  // vehicle indices, downstream first
  std::vector<Source> sources;

  long long step_index = 0;
  long long total_steps = 0;
  long long sample_every = 1;
  int next_id = 0;
  long long next_queue_seq = 0;
  std::array<long long, 2> present{0, 0};

  CoordinationCycle cyc;
  int cycle_counter = 0;
  bool facilitator_past_em = false;

  SimStats stats;
  std::vector<Event> events;
  std::vector<TripRecord> trips;

  Impl(SimConfig c, TrajectorySink* s) : cfg(std::move(c)), sink(s) {
    cfg.validate();
    fd = cfg.inputs.fd;
    geo = cfg.geometry;
    total_steps = static_cast<long long>(std::llround(cfg.duration / cfg.dt));
    sample_every = std::max(1LL, static_cast<long long>(std::llround(cfg.sample_period / cfg.dt)));
    if (cfg.control) {
      plan = cfg.plan ? cfg.plan : solve(cfg.inputs, cfg.solver);
      if (!plan) throw InfeasiblePlanError("no feasible control plan for these inputs");
      h_c = equilibrium_headway(plan->v_c, fd);
    }
    if (cfg.generate_traffic) {
      const double v_main = fd.v_free;
      const double v_ramp = cfg.inputs.v_r;
      const double h_main = equilibrium_headway(v_main, fd);
      const double h_ramp = equilibrium_headway(v_ramp, fd);
      sources.push_back(Source{kInner, VehicleClass::kMainline, 0.0, v_main,
                               ArrivalStream(cfg.inputs.q_m, h_main, cfg.seed, 0), {}});
      sources.push_back(Source{kOuter, VehicleClass::kMainline, 0.0, v_main,
                               ArrivalStream(cfg.inputs.q_m, h_main, cfg.seed, 1), {}});
      sources.push_back(Source{kSide, VehicleClass::kRamp, geo.ramp_start(), v_ramp,
                               ArrivalStream(cfg.inputs.lambda, h_ramp, cfg.seed, 2), {}});
    }
  }

  double now() const { return step_index * cfg.dt; }
  double L() const { return fd.veh_length; }
  bool cycle_active() const { return cyc.phase != CyclePhase::kIdle; }

  void emit(std::string type, std::vector<std::pair<std::string, EventValue>> fields) {
    events.push_back(Event{now(), std::move(type), std::move(fields)});
  }

  void reindex() {
    index_of.clear();
    for (int i = 0; i < static_cast<int>(veh.size()); ++i) index_of[veh[i].s.id] = i;
  }

  int find(int id) const {
    auto it = index_of.find(id);
    return it == index_of.end() ? -1 : it->second;
  }

  void sort_lanes() {
    for (auto& l : lanes) l.clear();
    for (int i = 0; i < static_cast<int>(veh.size()); ++i) lanes[veh[i].ch].push_back(i);
    for (auto& l : lanes) {
      std::sort(l.begin(), l.end(), [&](int a, int b) {
        if (veh[a].s.x != veh[b].s.x) return veh[a].s.x > veh[b].s.x;
        return veh[a].s.id < veh[b].s.id;
      });
    }
  }

  // Nearest vehicles strictly ahead of / at-or-behind x in channel ch.
  std::pair<int, int> around(int ch, double x, int exclude) const {
    const auto& l = lanes[ch];
    auto it = std::partition_point(l.begin(), l.end(), [&](int j) { return veh[j].s.x > x; });
    int lead = it == l.begin() ? -1 : *(it - 1);
    int lag = -1;
    for (; it != l.end(); ++it) {
      if (*it != exclude) {
        lag = *it;
        break;
      }
    }
    return {lead, lag};
  }

  int leader_in_lane(int i) const {
    const auto& l = lanes[veh[i].ch];
    auto it = std::find(l.begin(), l.end(), i);
    return it == l.begin() ? -1 : *(it - 1);
  }

  std::optional<Neighbor> lead_neighbor(int j, double x) const {
    if (j < 0) return std::nullopt;
    return Neighbor{veh[j].s.x - L() - x, veh[j].s.v};
  }

  std::optional<Neighbor> lag_neighbor(int j, double x) const {
    if (j < 0) return std::nullopt;
    return Neighbor{x - L() - veh[j].s.x, veh[j].s.v};
  }

  // ---- (1) spawning -------------------------------------------------------

  void spawn() {
    const double t = now();
    for (Source& src : sources) {
      while (src.stream.peek() <= t + 1e-12) src.pending.push_back(src.stream.pop());
      if (src.pending.empty()) continue;
      const double age = t - src.pending.front();
      double x = src.entry_x + (age < cfg.dt ? src.v_entry * age : 0.0);
      double v = src.v_entry;
      const auto& l = lanes[src.ch];
      // Most upstream vehicle of the channel.
      int last = -1;
      for (auto it = l.rbegin(); it != l.rend(); ++it) {
        if (veh[*it].s.x >= src.entry_x) {
          last = *it;
          break;
        }
      }
      if (last >= 0) {
        const double gap = veh[last].s.x - L() - x;
        if (gap < required_gap(v, veh[last].s.v, fd, cfg.micro.cf.b_safe)) {
          x = src.entry_x;
          const double g0 = veh[last].s.x - L() - x;
          if (g0 <= fd.cc0 + 0.5) continue;  // entry blocked, stays queued
          v = std::min(v, safe_speed(g0, veh[last].s.v, fd, cfg.micro.cf.b_safe));
        }
      }
      src.pending.pop_front();
      VehicleState s;
      s.id = next_id++;
      s.cls = src.cls;
      s.x = x;
      s.v = v;
      s.v_desired = src.v_entry;
      s.lane = lane_label(src.ch, x, geo.mp());
      s.spawn_time = t;
      place(s, src.ch);
    }
  }

  int place(const VehicleState& s, int ch) {
    Vehicle v;
    v.s = s;
    v.ch = ch;
    veh.push_back(v);
    ++present[static_cast<int>(s.cls)];
    if (s.cls == VehicleClass::kMainline) {
      ++stats.spawned_mainline;
    } else {
      ++stats.spawned_ramp;
    }
    reindex();
    sort_lanes();
    return s.id;
  }

  // ---- (2) coordination ---------------------------------------------------

  std::vector<int> wp_queue() const {
    std::vector<int> q;
    for (int i : lanes[kSide]) {
      if (veh[i].registered && !veh[i].in_platoon) q.push_back(i);
    }
    return q;  // already downstream first
  }

  void coordination_tick() {
    if (!cfg.control) return;
    for (int i : lanes[kSide]) {
      Vehicle& a = veh[i];
      if (a.s.cls == VehicleClass::kRamp && a.s.role == Role::kNormal && !a.released &&
          !a.registered && a.s.x < geo.mp() && a.s.v < cfg.micro.stop_speed) {
        a.registered = true;
        a.queue_seq = next_queue_seq++;
      }
    }
    const std::vector<int> queue = wp_queue();
    stats.max_wp_queue = std::max(stats.max_wp_queue, static_cast<int>(queue.size()));

    switch (cyc.phase) {
      case CyclePhase::kIdle:
        if (static_cast<int>(queue.size()) < plan->n) break;
        cyc = CoordinationCycle{};
        cyc.id = cycle_counter++;
        cyc.plan = *plan;
        cyc.phase = CyclePhase::kRequested;
        cyc.requested_at = now();
        facilitator_past_em = false;
        ++stats.cycles_requested;
        emit("cycle_requested", {{"cycle", cyc.id}, {"queue", static_cast<long long>(queue.size())}});
        appoint(queue);
        break;
      case CyclePhase::kRequested:
        appoint(queue);
        break;
      case CyclePhase::kGapCreation:
        if (now() >= cyc.release_time - 1e-9) release();
        break;
      case CyclePhase::kPlatoonReleased:
        break;  // advanced when the leader crosses MP
      case CyclePhase::kMerging:
        if (platoon_merged()) finish_merge();
        break;
      case CyclePhase::kComplete:
        if (facilitator_past_em) go_idle();
        break;
    }
    if (cycle_active()) stats.coordination_time += cfg.dt;
  }

  void appoint(const std::vector<int>& queue) {
    const double mp = geo.mp();
    int f = -1;
    for (int i : lanes[kOuter]) {
      const Vehicle& a = veh[i];
      if (a.s.cls == VehicleClass::kMainline && a.s.role == Role::kNormal &&
          a.s.x <= mp - plan->d && a.s.x >= 0.0) {
        f = i;
        break;
      }
    }
    if (f < 0 || static_cast<int>(queue.size()) < plan->n) return;  // deferred

    Vehicle& fac = veh[f];
    const double v_c = plan->v_c;
    const double b = cfg.micro.b_comfort;
    const double p_f = mp - fac.s.x;
    const double v_f = fac.s.v;
    const double d_min = sc_floor(v_f, v_c, b, cfg.micro.sc_margin);
    cyc.d_star = adjust_sc_position(plan->d, v_c, p_f, v_f, d_min);
    cyc.decel_start =
        v_f > v_c ? std::min(p_f, decel_start_distance(cyc.d_star, v_f, v_c, b)) : cyc.d_star;
    cyc.facilitator_id = fac.s.id;
    cyc.predicted_mp_arrival =
        now() + (v_f > 0.0 ? time_to_mp(p_f, v_f, cyc.decel_start, v_c, b)
                           : std::numeric_limits<double>::infinity());
    fac.s.role = Role::kFacilitating;

    cyc.platoon_ids.clear();
    for (int k = 0; k < plan->n; ++k) {
      veh[queue[k]].in_platoon = true;
      cyc.platoon_ids.push_back(veh[queue[k]].s.id);
    }
    const double s = mp - veh[queue[0]].s.x;
    const double a_base = v_c * v_c / (2.0 * s) * (1.0 + cfg.micro.release_margin);
    const ReleasePlan rp = plan_platoon_release(now(), cyc.predicted_mp_arrival, plan->n, h_c, v_c,
                                                s, a_base, cfg.inputs.a_max);
    cyc.release_time = rp.release_time;
    cyc.leader_accel = rp.accel;
    cyc.degraded = rp.degraded;
    cyc.phase = CyclePhase::kGapCreation;
    emit("facilitator_appointed",
         {{"cycle", cyc.id},
          {"vehicle", fac.s.id},
          {"p_f", p_f},
          {"v_f", v_f},
          {"d_star", cyc.d_star},
          {"decel_start", cyc.decel_start},
          {"predicted_mp_arrival", cyc.predicted_mp_arrival},
          {"leader_mp_target", rp.leader_mp_target},
          {"release_time", rp.release_time}});
    if (rp.degraded) {
      ++stats.cycles_degraded;
      emit("degraded_cycle", {{"cycle", cyc.id}, {"reason", std::string("late_release")}});
    }
    if (now() >= cyc.release_time - 1e-9) release();
  }

  void release() {
    for (std::size_t k = 0; k < cyc.platoon_ids.size(); ++k) {
      const int i = find(cyc.platoon_ids[k]);
      if (i < 0) continue;
      Vehicle& m = veh[i];
      m.s.role = k == 0 ? Role::kPlatoonLeader : Role::kPlatoonMember;
      m.s.v_desired = std::max(m.s.v_desired, plan->v_c);
      m.released = true;
      m.registered = false;
      if (k == 0) m.a_cap = cyc.leader_accel;
    }
    cyc.phase = CyclePhase::kPlatoonReleased;
    emit("platoon_released", {{"cycle", cyc.id},
                              {"leader", cyc.platoon_ids.front()},
                              {"accel", cyc.leader_accel},
                              {"degraded", static_cast<long long>(cyc.degraded)}});
  }

  bool platoon_merged() const {
    for (int id : cyc.platoon_ids) {
      const int i = find(id);
      if (i >= 0 && veh[i].ch != kOuter) return false;
    }
    return true;
  }

  void finish_merge() {
    // The platoon should sit, in order, directly ahead of the facilitator.
    bool ok = false;
    const int f = find(cyc.facilitator_id);
    if (f >= 0 && veh[f].ch == kOuter) {
      const auto& l = lanes[kOuter];
      const long p = std::find(l.begin(), l.end(), f) - l.begin();
      const long n = static_cast<long>(cyc.platoon_ids.size());
      ok = p >= n;
      for (long k = 0; ok && k < n; ++k) {
        ok = veh[l[p - 1 - k]].s.id == cyc.platoon_ids[n - 1 - k];
      }
    }
    if (!ok && !cyc.degraded) ++stats.merge_failures;
    ++stats.cycles_completed;
    cyc.phase = CyclePhase::kComplete;
    emit("cycle_complete", {{"cycle", cyc.id}, {"merge_ok", static_cast<long long>(ok)}});
    if (facilitator_past_em) go_idle();
  }

  void go_idle() {
    for (int id : cyc.platoon_ids) {
      const int i = find(id);
      if (i < 0) continue;
      Vehicle& m = veh[i];
      m.s.role = Role::kNormal;
      m.s.v_desired = std::max(m.s.v_desired, fd.v_free);
      m.a_cap = kNaN;
      m.in_platoon = false;
    }
    const int f = find(cyc.facilitator_id);
    if (f >= 0) veh[f].s.role = Role::kNormal;
    emit("cycle_idle", {{"cycle", cyc.id}});
    cyc.phase = CyclePhase::kIdle;
  }

  // ---- (3) lane changes ---------------------------------------------------

  bool in_prohibition(double x) const {
    return cfg.control && cycle_active() && x >= geo.mp() - plan->d && x <= geo.em();
  }

  void commit_change(int i, int to) {
    Vehicle& a = veh[i];
    const int from = a.ch;
    const Lane from_lane = a.s.lane;
    a.ch = to;
    a.s.lane = lane_label(to, a.s.x, geo.mp());
    a.last_change = now();
    ++stats.lane_changes;
    if (in_prohibition(a.s.x)) {
      if (from == kOuter && to == kInner) ++stats.outer_to_inner_during_coordination;
      if (from == kInner && to == kOuter) ++stats.prohibited_changes;
    }
    emit("lane_change", {{"vehicle", a.s.id},
                         {"from", std::string(to_string(from_lane))},
                         {"to", std::string(to_string(a.s.lane))},
                         {"x", a.s.x},
                         {"cycle_active", static_cast<long long>(cfg.control && cycle_active())}});
    sort_lanes();
  }

  bool may_merge(int i) const {
    const Vehicle& a = veh[i];
    if (a.s.role == Role::kPlatoonLeader) return true;
    if (a.s.role == Role::kPlatoonMember) {
      const auto it = std::find(cyc.platoon_ids.begin(), cyc.platoon_ids.end(), a.s.id);
      if (it == cyc.platoon_ids.begin() || it == cyc.platoon_ids.end()) return true;
      const int prev = find(*(it - 1));
      return prev < 0 || veh[prev].ch == kOuter;
    }
    return a.s.cls == VehicleClass::kRamp && a.s.role == Role::kNormal &&
           (!cfg.control || a.released);
  }

  void try_merge(int i) {
    if (!may_merge(i)) return;
    const Vehicle& a = veh[i];
    const auto [lead, lag] = around(kOuter, a.s.x, -1);
    const double progress = (a.s.x - geo.mp()) / geo.merge_len;
    const bool platoon = a.s.role == Role::kPlatoonLeader || a.s.role == Role::kPlatoonMember;
    const double scale = platoon ? cfg.micro.lc.platoon_tolerance : 1.0;
    const double f = platoon ? 1.0 : cfg.micro.lc.merge_gap_factor;
    if (gaps_acceptable(a.s.v, lead_neighbor(lead, a.s.x), lag_neighbor(lag, a.s.x), fd,
                        merge_braking(progress, cfg.micro.lc), f, scale)) {
      commit_change(i, kOuter);
    }
  }

  void try_discretionary(int i) {
    const Vehicle& a = veh[i];
    if (now() - a.last_change < cfg.micro.lc.cooldown) return;
    const int target = a.ch == kInner ? kOuter : kInner;
    LaneChangeQuery q;
    q.v = a.s.v;
    q.v_desired = a.s.v_desired;
    q.current_lead = lead_neighbor(leader_in_lane(i), a.s.x);
    const auto [lead, lag] = around(target, a.s.x, -1);
    q.target_lead = lead_neighbor(lead, a.s.x);
    q.target_lag = lag_neighbor(lag, a.s.x);
    q.role_allows = a.s.role == Role::kNormal;
    q.direction_allowed = !(a.ch == kInner && in_prohibition(a.s.x));
    if (lane_change_decision(q, fd, cfg.micro.lc) == LaneChangeDecision::kChange) {
      commit_change(i, target);
    }
  }

  void lane_changes() {
    std::vector<int> order(veh.size());
    for (int i = 0; i < static_cast<int>(veh.size()); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (veh[a].s.x != veh[b].s.x) return veh[a].s.x > veh[b].s.x;
      return veh[a].s.id < veh[b].s.id;
    });
    for (int i : order) {
      if (veh[i].ch == kSide) {
        if (veh[i].s.x >= geo.mp()) try_merge(i);
      } else {
        try_discretionary(i);
      }
    }
  }

  // ---- (4) car following --------------------------------------------------

  // A yielding vehicle keeps braking for the same merging vehicle until that
  // vehicle has merged or the yielder has drawn level with it.
  void assign_yielders() {
    for (Vehicle& a : veh) a.yield_to = -1;
    if (cfg.control || !cfg.micro.yielding) return;
    for (Vehicle& f : veh) {
      if (f.yield_for < 0) continue;
      const int m = find(f.yield_for);
      if (m < 0 || veh[m].ch != kSide || f.ch != kOuter || f.s.role != Role::kNormal ||
          veh[m].s.x - L() - f.s.x <= 0.0) {
        f.yield_for = -1;
        continue;
      }
      f.yield_to = m;
    }
    for (int m : lanes[kSide]) {
      const Vehicle& mg = veh[m];
      if (mg.s.x < geo.mp() || mg.s.role != Role::kNormal) continue;
      if (mg.s.v > kStanding) {
        veh[m].waiting_since = kNaN;
        continue;
      }
      if (!(mg.waiting_since == mg.waiting_since)) veh[m].waiting_since = now();
      if (now() - mg.waiting_since < cfg.micro.yield_patience) continue;
      bool taken = false;
      for (const Vehicle& f : veh) taken = taken || f.yield_to == m;
      if (taken) continue;
      // First outer-lane vehicle behind the merger that can still stop
      // comfortably for it; closer ones pass.
      for (int r = 0; r < static_cast<int>(lanes[kOuter].size()); ++r) {
        Vehicle& f = veh[lanes[kOuter][r]];
        const double gap = mg.s.x - L() - f.s.x;
        if (gap <= fd.cc0) continue;
        if (gap > cfg.micro.yield_range) break;
        if (f.yield_to >= 0 || f.s.role != Role::kNormal) continue;
        const double closing = std::max(0.0, f.s.v * f.s.v - mg.s.v * mg.s.v);
        if (closing / (2.0 * (gap - fd.cc0)) <= cfg.micro.yield_b) {
          f.yield_to = m;
          f.yield_for = mg.s.id;
          break;
        }
      }
    }
  }

  [[noreturn]] void collision(int follower, int leader, double gap) const {
    std::ostringstream os;
    os << "collision at t=" << now() << ": vehicle " << veh[follower].s.id << " ("
       << to_string(veh[follower].s.lane) << ", x=" << veh[follower].s.x
       << ", v=" << veh[follower].s.v << ") behind " << veh[leader].s.id << " ("
       << to_string(veh[leader].s.lane) << ", x=" << veh[leader].s.x << ", v=" << veh[leader].s.v
       << "), gap " << gap << " m";
    throw SimulationInvariantError(os.str());
  }

  void follow(int i, int rank_in_lane) {
    Vehicle& a = veh[i];
    const double x = a.s.x;
    const double v = a.s.v;
    const auto& cf = cfg.micro.cf;
    double v_des = a.s.v_desired;
    double a_max = cf.a_max;
    if (a.s.role == Role::kPlatoonLeader && a.a_cap == a.a_cap) a_max = a.a_cap;
    if (a.s.role == Role::kPlatoonMember) a_max = cfg.inputs.a_max;
    if (a.s.role == Role::kPlatoonLeader || a.s.role == Role::kPlatoonMember) {
      v_des = std::min(v_des, plan->v_c);
    }
    if (a.s.role == Role::kFacilitating && geo.mp() - x <= cyc.decel_start) {
      v_des = std::min(v_des, std::max(plan->v_c, v - cfg.micro.b_comfort * cfg.dt));
    }

    double best_gap = kNoLeader;
    double best_vl = 0.0;
    double best_safe = kNoLeader;
    auto consider = [&](double gap, double vl) {
      const double s = safe_speed(gap, vl, fd, cf.b_safe);
      if (s < best_safe) {
        best_safe = s;
        best_gap = gap;
        best_vl = vl;
      }
    };

    if (rank_in_lane > 0) {
      const int j = lanes[a.ch][rank_in_lane - 1];
      const double gap = veh[j].s.x - L() - x;
      if (!(gap > 0.0)) collision(i, j, gap);
      consider(gap, veh[j].s.v);
    }
    if (a.ch == kSide) {
      const double end_gap = geo.accel_end() - x;
      if (!(end_gap > 0.0)) {
        std::ostringstream os;
        os << "vehicle " << a.s.id << " ran past the end of the acceleration lane at t=" << now();
        throw SimulationInvariantError(os.str());
      }
      consider(end_gap, 0.0);
      if (cfg.control && !a.released && a.s.role == Role::kNormal) {
        const double line_gap = geo.wp() + fd.cc0 - x;
        if (line_gap > 0.0) consider(line_gap, 0.0);
      }
    }
    if (a.s.role == Role::kPlatoonMember) {
      const auto it = std::find(cyc.platoon_ids.begin(), cyc.platoon_ids.end(), a.s.id);
      if (it != cyc.platoon_ids.begin() && it != cyc.platoon_ids.end()) {
        const int p = find(*(it - 1));
        if (p >= 0 && veh[p].ch != a.ch) {
          const double gap = veh[p].s.x - L() - x;
          if (gap > 0.0) consider(gap, veh[p].s.v);
        }
      }
    }
    if (a.s.role == Role::kFacilitating && cyc.phase >= CyclePhase::kPlatoonReleased) {
      for (auto it = cyc.platoon_ids.rbegin(); it != cyc.platoon_ids.rend(); ++it) {
        const int p = find(*it);
        if (p < 0 || veh[p].ch == kOuter) continue;
        const double gap = veh[p].s.x - L() - x;
        if (gap > 0.0) consider(gap, veh[p].s.v);
        break;
      }
    }
    if (a.yield_to >= 0) {
      const Vehicle& m = veh[a.yield_to];
      const double gap = m.s.x - L() - x;
      if (gap > 0.0) consider(gap, m.s.v);
    }
    a.v_next = car_following_update(v, v_des, best_gap, best_vl, fd, cfg.dt, a_max, cf.b_max,
                                    cf.b_safe);
  }

  void car_following() {
    assign_yielders();
    for (const auto& l : lanes) {
      for (int r = 0; r < static_cast<int>(l.size()); ++r) follow(l[r], r);
    }
  }

  // ---- (5) advance, (6) retire --------------------------------------------

  static double crossing_time(double t, double dt, double x0, double x1, double at) {
    return x1 > x0 ? t + dt * (at - x0) / (x1 - x0) : t + dt;
  }

  void advance() {
    const double t = now();
    const double dt = cfg.dt;
    const double mp = geo.mp();
    const double em = geo.em();
    const double exit_x = geo.exit_position();
    for (Vehicle& a : veh) {
      const double x0 = a.s.x;
      const double x1 = x0 + a.v_next * dt;
      a.s.v = a.v_next;
      a.s.x = x1;
      a.s.lane = lane_label(a.ch, x1, mp);
      const double entry = geo.entry_position(a.s.cls);
      if (x0 < entry && x1 >= entry) a.t_entry = crossing_time(t, dt, x0, x1, entry);
      if (x0 < exit_x && x1 >= exit_x && a.t_entry == a.t_entry) {
        TripRecord r;
        r.vehicle_id = a.s.id;
        r.cls = a.s.cls;
        r.entry_time = a.t_entry;
        r.exit_time = crossing_time(t, dt, x0, x1, exit_x);
        r.measured_path_length = exit_x - entry;
        r.ideal_time = geo.ideal_time(a.s.cls, fd.v_free, cfg.inputs.v_r);
        trips.push_back(r);
      }
      if (x0 < mp && x1 >= mp && a.ch == kSide) {
        if (a.s.role == Role::kNormal) a.s.v_desired = std::max(a.s.v_desired, fd.v_free);
        if (cfg.control && cyc.phase == CyclePhase::kPlatoonReleased && !cyc.platoon_ids.empty() &&
            a.s.id == cyc.platoon_ids.front()) {
          stats.leader_mp.push_back(LeaderRecord{cyc.id, t + dt, a.s.v, plan->v_c, cyc.degraded});
          cyc.phase = CyclePhase::kMerging;
          emit("leader_at_mp", {{"cycle", cyc.id}, {"vehicle", a.s.id}, {"v", a.s.v}});
        }
      }
      if (x0 < em && x1 >= em) {
        if (a.s.role == Role::kFacilitating) {
          a.s.role = Role::kNormal;
          facilitator_past_em = true;
          emit("facilitator_at_em", {{"cycle", cyc.id}, {"vehicle", a.s.id}});
        } else if (a.s.role == Role::kPlatoonLeader || a.s.role == Role::kPlatoonMember) {
          a.s.v_desired = std::max(a.s.v_desired, fd.v_free);
        }
      }
    }
  }

  void retire() {
    const double end = geo.network_end();
    const auto gone = std::remove_if(veh.begin(), veh.end(), [&](const Vehicle& a) {
      if (a.s.x < end) return false;
      --present[static_cast<int>(a.s.cls)];
      if (a.s.cls == VehicleClass::kMainline) {
        ++stats.retired_mainline;
      } else {
        ++stats.retired_ramp;
      }
      return true;
    });
    if (gone != veh.end()) {
      veh.erase(gone, veh.end());
      reindex();
    }
  }

  void check_invariants() {
    for (const auto& l : lanes) {
      for (std::size_t r = 1; r < l.size(); ++r) {
        const double gap = veh[l[r - 1]].s.x - L() - veh[l[r]].s.x;
        if (!(gap > 0.0)) collision(l[r], l[r - 1], gap);
      }
    }
    if (stats.spawned_mainline != stats.retired_mainline + present[0] ||
        stats.spawned_ramp != stats.retired_ramp + present[1]) {
      throw SimulationInvariantError("vehicle conservation violated at t=" +
                                     std::to_string(now()));
    }
    for (const Vehicle& a : veh) {
      if (!(a.s.v >= 0.0) || a.s.v > a.s.v_desired + 1e-9) {
        std::ostringstream os;
        os << "speed cap violated at t=" << now() << ": vehicle " << a.s.id << " v=" << a.s.v
           << " v_desired=" << a.s.v_desired;
        throw SimulationInvariantError(os.str());
      }
    }
  }

  void sample() {
    if (!sink || step_index % sample_every != 0) return;
    std::vector<const Vehicle*> order;
    order.reserve(veh.size());
    for (const Vehicle& a : veh) order.push_back(&a);
    std::sort(order.begin(), order.end(),
              [](const Vehicle* a, const Vehicle* b) { return a->s.id < b->s.id; });
    for (const Vehicle* a : order) {
      sink->on_sample(TrajectorySample{now(), a->s.id, a->s.cls, a->s.lane, a->s.x, a->s.v});
    }
  }

  void step() {
    if (finished()) return;
    spawn();
    coordination_tick();
    lane_changes();
    car_following();
    advance();
    retire();
    ++step_index;
    ++stats.ticks;
    sort_lanes();
    check_invariants();
    sample();
  }

  bool finished() const { return step_index >= total_steps; }
};

Simulation::Simulation(SimConfig cfg, TrajectorySink* sink)
    : impl_(std::make_unique<Impl>(std::move(cfg), sink)) {}
Simulation::~Simulation() = default;
Simulation::Simulation(Simulation&&) noexcept = default;
Simulation& Simulation::operator=(Simulation&&) noexcept = default;

void Simulation::step() { impl_->step(); }
bool Simulation::finished() const { return impl_->finished(); }
double Simulation::time() const { return impl_->now(); }

int Simulation::add_vehicle(const VehicleState& s) {
  VehicleState v = s;
  v.id = impl_->next_id++;
  int ch = kInner;
  switch (s.lane) {
    case Lane::kInner:
      ch = kInner;
      break;
    case Lane::kOuter:
      ch = kOuter;
      break;
    case Lane::kAccel:
    case Lane::kRamp:
      ch = kSide;
      break;
  }
  v.lane = lane_label(ch, v.x, impl_->geo.mp());
  return impl_->place(v, ch);
}

std::vector<VehicleState> Simulation::vehicles() const {
  std::vector<VehicleState> out;
  for (const auto& a : impl_->veh) out.push_back(a.s);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

const CoordinationCycle& Simulation::cycle() const { return impl_->cyc; }
const SimStats& Simulation::stats() const { return impl_->stats; }
const std::vector<Event>& Simulation::events() const { return impl_->events; }
const std::vector<TripRecord>& Simulation::trips() const { return impl_->trips; }
const std::optional<ControlPlan>& Simulation::plan() const { return impl_->plan; }

RunResult Simulation::take_result() {
  RunResult r;
  r.events = std::move(impl_->events);
  r.trips = std::move(impl_->trips);
  r.stats = impl_->stats;
  r.plan = impl_->plan;
  return r;
}

RunResult run(const SimConfig& cfg, TrajectorySink* sink) {
  Simulation sim(cfg, sink);
  while (!sim.finished()) sim.step();
  return sim.take_result();
}

}  // namespace comc::sim
