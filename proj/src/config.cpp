#include "comc/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "comc/error.hpp"
#include "comc/units.hpp"

namespace comc {

using nlohmann::json;

namespace {

// Reads one JSON object, remembers which keys were used and rejects the rest.
class Section {
 public:
  Section(const json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && !j_->is_object()) throw ValidationError(path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    if (!j_) return nullptr;
    auto it = j_->find(key);
    if (it == j_->end()) return nullptr;
    return &*it;
  }

  double number(const std::string& key, double def) {
    const json* v = find(key);
    if (!v || v->is_null()) return def;
    if (!v->is_number()) throw ValidationError(at(key), "expected a number");
    return v->get<double>();
  }

  std::optional<double> optional_number(const std::string& key, std::optional<double> def) {
    const json* v = find(key);
    if (!v) return def;
    if (v->is_null()) return std::nullopt;
    if (!v->is_number()) throw ValidationError(at(key), "expected a number or null");
    return v->get<double>();
  }

  long long integer(const std::string& key, long long def) {
    const json* v = find(key);
    if (!v || v->is_null()) return def;
    if (!v->is_number_integer()) throw ValidationError(at(key), "expected an integer");
    return v->get<long long>();
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = find(key);
    if (!v || v->is_null()) return def;
    if (!v->is_boolean()) throw ValidationError(at(key), "expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& def) {
    const json* v = find(key);
    if (!v || v->is_null()) return def;
    if (!v->is_string()) throw ValidationError(at(key), "expected a string");
    return v->get<std::string>();
  }

  Section sub(const std::string& key) { return Section(find(key), at(key)); }

  void finish() const {
    if (!j_) return;
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      if (!seen_.count(it.key())) throw ValidationError(at(it.key()), "unknown field");
    }
  }

 private:
  const json* j_;
  std::string path_;
  std::set<std::string> seen_;
};

double kmh(double v) { return units::kmh_to_ms(v); }
double vph(double q) { return units::vph_to_vps(q); }

void positive(double v, const std::string& field) {
  if (!(v > 0.0)) throw ValidationError(field, "must be > 0");
}

void read_fd(Section s, FdParams& fd) {
  fd.cc0 = s.number("cc0", fd.cc0);
  fd.cc1 = s.number("cc1", fd.cc1);
  fd.veh_length = s.number("veh_length", fd.veh_length);
  fd.v_free = kmh(s.number("v_free", units::ms_to_kmh(fd.v_free)));
  fd.v_crit = kmh(s.number("v_crit", units::ms_to_kmh(fd.v_crit)));
  s.finish();
}

void read_coordination(Section s, CoordinationInputs& in) {
  const double q_m = s.number("q_m", units::vps_to_vph(in.q_m));
  positive(q_m, s.at("q_m"));
  in.q_m = vph(q_m);
  const double q_r = s.number("q_r", units::vps_to_vph(in.lambda));
  positive(q_r, s.at("q_r"));
  in.lambda = vph(q_r);
  in.rho = s.number("rho", in.rho);
  in.w_m = s.number("w_m", in.w_m);
  in.w_r = s.number("w_r", in.w_r);
  in.v_r = kmh(s.number("v_r", units::ms_to_kmh(in.v_r)));
  in.b = s.number("b", in.b);
  in.a_max = s.number("a_max", in.a_max);
  const long long n_max = s.integer("n_max", in.n_max);
  if (n_max < 1 || n_max > 1000) throw ValidationError(s.at("n_max"), "must lie in [1, 1000]");
  in.n_max = static_cast<int>(n_max);
  std::optional<double> cap;
  if (in.inner_capacity) cap = units::vps_to_vph(*in.inner_capacity);
  cap = s.optional_number("inner_capacity", cap);
  if (cap) {
    positive(*cap, s.at("inner_capacity"));
    in.inner_capacity = vph(*cap);
  } else {
    in.inner_capacity.reset();
  }
  const std::string g = s.string("gap_reference", std::string(to_string(in.gap_reference)));
  in.gap_reference = gap_reference_from_string(g);
  s.finish();
}

void read_geometry(Section s, sim::NetworkGeometry& g) {
  g.upstream_len = s.number("upstream_len", g.upstream_len);
  g.merge_len = s.number("merge_len", g.merge_len);
  g.downstream_len = s.number("downstream_len", g.downstream_len);
  g.ramp_len = s.number("ramp_len", g.ramp_len);
  const long long lanes = s.integer("mainline_lanes", g.mainline_lanes);
  if (lanes != 2) throw ValidationError(s.at("mainline_lanes"), "only 2 is supported");
  g.d_prime = s.number("d_prime", g.d_prime);
  g.s_accel = s.number("s_accel", g.s_accel);
  g.measure_margin = s.number("measure_margin", g.measure_margin);
  s.finish();
}

void read_solver(Section s, SolverSettings& st) {
  st.v_step_coarse = kmh(s.number("v_step_coarse", units::ms_to_kmh(st.v_step_coarse)));
  st.v_step_fine = kmh(s.number("v_step_fine", units::ms_to_kmh(st.v_step_fine)));
  st.d_step_coarse = s.number("d_step_coarse", st.d_step_coarse);
  st.d_step_fine = s.number("d_step_fine", st.d_step_fine);
  st.d_max = s.number("d_max", st.d_max);
  s.finish();
}

void read_micro(Section s, sim::MicroParams& m) {
  {
    Section c = s.sub("car_following");
    m.cf.a_max = c.number("a_max", m.cf.a_max);
    m.cf.b_max = c.number("b_max", m.cf.b_max);
    m.cf.b_safe = c.number("b_safe", m.cf.b_safe);
    c.finish();
  }
  {
    Section c = s.sub("lane_change");
    auto& lc = m.lc;
    lc.incentive = kmh(c.number("incentive", units::ms_to_kmh(lc.incentive)));
    lc.lookahead = c.number("lookahead", lc.lookahead);
    lc.cooldown = c.number("cooldown", lc.cooldown);
    lc.b_accept = c.number("b_accept", lc.b_accept);
    lc.merge_b_start = c.number("merge_b_start", lc.merge_b_start);
    lc.merge_b_end = c.number("merge_b_end", lc.merge_b_end);
    lc.merge_gap_factor = c.number("merge_gap_factor", lc.merge_gap_factor);
    lc.platoon_tolerance = c.number("platoon_tolerance", lc.platoon_tolerance);
    c.finish();
  }
  m.b_comfort = s.number("b_comfort", m.b_comfort);
  m.sc_margin = s.number("sc_margin", m.sc_margin);
  m.release_margin = s.number("release_margin", m.release_margin);
  m.stop_speed = kmh(s.number("stop_speed", units::ms_to_kmh(m.stop_speed)));
  m.yielding = s.boolean("yielding", m.yielding);
  m.yield_b = s.number("yield_b", m.yield_b);
  m.yield_patience = s.number("yield_patience", m.yield_patience);
  m.yield_range = s.number("yield_range", m.yield_range);
  s.finish();
}

void read_sim(Section s, ScenarioFile& f) {
  f.sim.dt = s.number("dt", f.sim.dt);
  f.sim.duration = s.number("duration", f.sim.duration);
  f.sim.sample_period = s.number("sample_period", f.sim.sample_period);
  f.sim.control = s.boolean("control", f.sim.control);
  if (const json* seeds = s.find("seeds")) {
    if (!seeds->is_array()) throw ValidationError(s.at("seeds"), "expected an array");
    f.seeds.clear();
    for (const auto& v : *seeds) {
      if (!v.is_number_unsigned()) {
        throw ValidationError(s.at("seeds"), "seeds must be non-negative integers");
      }
      f.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  s.finish();
}

void read_contour(Section s, ScenarioFile& f, double em, double duration) {
  ContourWindow& w = f.contour;
  w.t_start = s.number("t_start", 0.0);
  w.t_end = s.optional_number("t_end", std::nullopt).value_or(duration);
  w.x_start = s.number("x_start", 500.0);
  w.x_end = s.optional_number("x_end", std::nullopt).value_or(em + 300.0);
  w.t_bin = s.number("t_bin", w.t_bin);
  w.x_bin = s.number("x_bin", w.x_bin);
  w.include_acceleration_lane = s.boolean("include_acceleration_lane", w.include_acceleration_lane);
  s.finish();
}

}  // namespace

void ScenarioFile::validate() const {
  if (seeds.empty()) throw ValidationError("sim.seeds", "must not be empty");
  if (parallel < 1) throw ValidationError("parallel", "must be >= 1");
  sim.validate();
  contour.validate();
}

ScenarioFile parse_scenario(const json& doc) {
  Section root(&doc, "");
  ScenarioFile f;
  f.name = root.string("name", "scenario");
  read_fd(root.sub("fd"), f.sim.inputs.fd);
  read_coordination(root.sub("coordination"), f.sim.inputs);
  read_geometry(root.sub("geometry"), f.sim.geometry);
  f.sim.inputs.d_prime = f.sim.geometry.d_prime;
  f.sim.inputs.s_accel = f.sim.geometry.s_accel;
  read_solver(root.sub("solver"), f.sim.solver);
  read_micro(root.sub("micro"), f.sim.micro);
  read_sim(root.sub("sim"), f);
  read_contour(root.sub("contour"), f, f.sim.geometry.em(), f.sim.duration);
  f.output_dir = root.string("output_dir", f.output_dir);
  const long long par = root.integer("parallel", f.parallel);
  if (par < 1 || par > 1024) throw ValidationError("parallel", "must lie in [1, 1024]");
  f.parallel = static_cast<int>(par);
  root.finish();
  f.validate();
  return f;
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string(), "cannot open scenario file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string(), e.what());
  }
  ScenarioFile f = parse_scenario(doc);
  if (!doc.contains("name")) f.name = path.stem().string();
  return f;
}

json scenario_to_json(const ScenarioFile& f) {
  using units::ms_to_kmh;
  using units::vps_to_vph;
  const auto& in = f.sim.inputs;
  const auto& g = f.sim.geometry;
  const auto& m = f.sim.micro;
  json doc;
  doc["name"] = f.name;
  doc["fd"] = {{"cc0", in.fd.cc0},
               {"cc1", in.fd.cc1},
               {"veh_length", in.fd.veh_length},
               {"v_free", ms_to_kmh(in.fd.v_free)},
               {"v_crit", ms_to_kmh(in.fd.v_crit)}};
  doc["coordination"] = {
      {"q_m", vps_to_vph(in.q_m)},
      {"q_r", vps_to_vph(in.lambda)},
      {"rho", in.rho},
      {"w_m", in.w_m},
      {"w_r", in.w_r},
      {"v_r", ms_to_kmh(in.v_r)},
      {"b", in.b},
      {"a_max", in.a_max},
      {"n_max", in.n_max},
      {"inner_capacity", in.inner_capacity ? json(vps_to_vph(*in.inner_capacity)) : json(nullptr)},
      {"gap_reference", std::string(to_string(in.gap_reference))}};
  doc["geometry"] = {{"upstream_len", g.upstream_len},     {"merge_len", g.merge_len},
                     {"downstream_len", g.downstream_len}, {"ramp_len", g.ramp_len},
                     {"mainline_lanes", g.mainline_lanes}, {"d_prime", g.d_prime},
                     {"s_accel", g.s_accel},               {"measure_margin", g.measure_margin}};
  doc["solver"] = {{"v_step_coarse", ms_to_kmh(f.sim.solver.v_step_coarse)},
                   {"v_step_fine", ms_to_kmh(f.sim.solver.v_step_fine)},
                   {"d_step_coarse", f.sim.solver.d_step_coarse},
                   {"d_step_fine", f.sim.solver.d_step_fine},
                   {"d_max", f.sim.solver.d_max}};
  doc["micro"] = {
      {"car_following", {{"a_max", m.cf.a_max}, {"b_max", m.cf.b_max}, {"b_safe", m.cf.b_safe}}},
      {"lane_change",
       {{"incentive", ms_to_kmh(m.lc.incentive)},
        {"lookahead", m.lc.lookahead},
        {"cooldown", m.lc.cooldown},
        {"b_accept", m.lc.b_accept},
        {"merge_b_start", m.lc.merge_b_start},
        {"merge_b_end", m.lc.merge_b_end},
        {"merge_gap_factor", m.lc.merge_gap_factor},
        {"platoon_tolerance", m.lc.platoon_tolerance}}},
      {"b_comfort", m.b_comfort},
      {"sc_margin", m.sc_margin},
      {"release_margin", m.release_margin},
      {"stop_speed", ms_to_kmh(m.stop_speed)},
      {"yielding", m.yielding},
      {"yield_b", m.yield_b},
      {"yield_patience", m.yield_patience},
      {"yield_range", m.yield_range}};
  doc["sim"] = {{"dt", f.sim.dt},
                {"duration", f.sim.duration},
                {"sample_period", f.sim.sample_period},
                {"control", f.sim.control},
                {"seeds", f.seeds}};
  const auto& w = f.contour;
  doc["contour"] = {{"t_start", w.t_start}, {"t_end", w.t_end},   {"x_start", w.x_start},
                    {"x_end", w.x_end},     {"t_bin", w.t_bin},   {"x_bin", w.x_bin},
                    {"include_acceleration_lane", w.include_acceleration_lane}};
  doc["output_dir"] = f.output_dir;
  doc["parallel"] = f.parallel;
  return doc;
}

std::string scenario_hash(const ScenarioFile& f) {
  json doc = scenario_to_json(f);
  doc.erase("output_dir");
  doc.erase("parallel");
  const std::string text = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace comc
