#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "comc/config.hpp"
#include "comc/error.hpp"
#include "comc/units.hpp"

#ifndef COMC_SCENARIO_DIR
#error "COMC_SCENARIO_DIR must point at the bundled scenarios"
#endif

namespace comc {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

fs::path scenario_path(const std::string& name) { return fs::path(COMC_SCENARIO_DIR) / (name + ".json"); }

std::string field_of(const json& doc) {
  try {
    parse_scenario(doc);
  } catch (const ValidationError& e) {
    return e.field();
  }
  return "<accepted>";
}

TEST(LoadScenario, Bundled1C) {
  const ScenarioFile s = load_scenario(scenario_path("scenario_1C"));
  EXPECT_EQ(s.name, "scenario_1C");
  EXPECT_NEAR(units::vps_to_vph(s.sim.inputs.q_m), 2000.0, 1e-9);
  EXPECT_NEAR(units::vps_to_vph(s.sim.inputs.lambda), 500.0, 1e-9);
  EXPECT_DOUBLE_EQ(s.sim.inputs.rho, 0.5);
  EXPECT_DOUBLE_EQ(s.sim.inputs.w_m, s.sim.inputs.w_r);
  EXPECT_DOUBLE_EQ(s.sim.duration, 7200.0);
  EXPECT_EQ(s.seeds.size(), 10u);
  EXPECT_EQ(s.seeds.front(), 1u);
  EXPECT_EQ(s.seeds.back(), 10u);
}

TEST(LoadScenario, AllBundledScenariosLoad) {
  const struct {
    const char* name;
    double q_m, q_r;
  } table[] = {{"scenario_1A", 2000, 300}, {"scenario_1B", 2000, 400}, {"scenario_1C", 2000, 500},
               {"scenario_2A", 2200, 300}, {"scenario_2B", 2200, 400}, {"scenario_2C", 2200, 500}};
  for (const auto& t : table) {
    const ScenarioFile s = load_scenario(scenario_path(t.name));
    EXPECT_NEAR(units::vps_to_vph(s.sim.inputs.q_m), t.q_m, 1e-9) << t.name;
    EXPECT_NEAR(units::vps_to_vph(s.sim.inputs.lambda), t.q_r, 1e-9) << t.name;
  }
}

TEST(ParseScenario, EmptyDocumentUsesDefaults) {
  const ScenarioFile s = parse_scenario(json::object());
  const FdParams fd;
  EXPECT_DOUBLE_EQ(s.sim.inputs.fd.cc0, 1.5);
  EXPECT_DOUBLE_EQ(s.sim.inputs.fd.cc1, 0.9);
  EXPECT_DOUBLE_EQ(s.sim.inputs.fd.veh_length, 4.37);
  EXPECT_NEAR(units::ms_to_kmh(s.sim.inputs.fd.v_free), 120.0, 1e-12);
  EXPECT_NEAR(units::ms_to_kmh(s.sim.inputs.fd.v_crit), 75.0, 1e-12);
  EXPECT_NEAR(units::ms_to_kmh(s.sim.inputs.v_r), 60.0, 1e-12);
  EXPECT_DOUBLE_EQ(s.sim.inputs.d_prime, 457.2);
  EXPECT_DOUBLE_EQ(s.sim.inputs.b, 2.75);
  EXPECT_DOUBLE_EQ(s.sim.inputs.a_max, 2.75);
  EXPECT_DOUBLE_EQ(s.sim.dt, 0.1);
  EXPECT_DOUBLE_EQ(s.sim.duration, 7200.0);
  EXPECT_FALSE(s.sim.control);
  EXPECT_EQ(s.seeds, std::vector<std::uint64_t>{1});
  EXPECT_DOUBLE_EQ(s.contour.x_start, 500.0);
  EXPECT_DOUBLE_EQ(s.contour.x_end, 2457.2 + 300.0);
  EXPECT_DOUBLE_EQ(s.contour.t_end, 7200.0);
}

TEST(ParseScenario, UnitsConvertedOnce) {
  const ScenarioFile s = parse_scenario(
      json{{"coordination", {{"q_m", 1800}, {"q_r", 360}, {"v_r", 72}}}, {"fd", {{"v_free", 108}}}});
  EXPECT_DOUBLE_EQ(s.sim.inputs.q_m, 0.5);
  EXPECT_DOUBLE_EQ(s.sim.inputs.lambda, 0.1);
  EXPECT_DOUBLE_EQ(s.sim.inputs.v_r, 20.0);
  EXPECT_DOUBLE_EQ(s.sim.inputs.fd.v_free, 30.0);
}

TEST(ParseScenario, RhoOutOfRange) {
  EXPECT_EQ(field_of(json{{"coordination", {{"rho", 1.5}}}}), "coordination.rho");
}

TEST(ParseScenario, UnknownFieldNamesPath) {
  EXPECT_EQ(field_of(json{{"coordination", {{"rhoo", 0.5}}}}), "coordination.rhoo");
  EXPECT_EQ(field_of(json{{"micro", {{"lane_change", {{"bogus", 1}}}}}}), "micro.lane_change.bogus");
  EXPECT_EQ(field_of(json{{"extra", 1}}), "extra");
}

TEST(ParseScenario, WrongTypes) {
  EXPECT_EQ(field_of(json{{"coordination", {{"q_m", "2000"}}}}), "coordination.q_m");
  EXPECT_EQ(field_of(json{{"sim", {{"seeds", {1, -2}}}}}), "sim.seeds");
  EXPECT_EQ(field_of(json{{"fd", 3}}), "fd");
}

TEST(ParseScenario, EmptySeedsRejected) {
  EXPECT_EQ(field_of(json{{"sim", {{"seeds", json::array()}}}}), "sim.seeds");
}

TEST(ParseScenario, ZeroWeightsRejected) {
  EXPECT_NE(field_of(json{{"coordination", {{"w_m", 0}, {"w_r", 0}}}}), "<accepted>");
}

TEST(ParseScenario, InnerCapacityNullMeansDiagram) {
  const ScenarioFile s = parse_scenario(json{{"coordination", {{"inner_capacity", nullptr}}}});
  EXPECT_FALSE(s.sim.inputs.inner_capacity.has_value());
  EXPECT_NEAR(units::vps_to_vph(s.sim.inputs.capacity()), 3345.4, 0.05);
  const ScenarioFile d = parse_scenario(json::object());
  EXPECT_NEAR(units::vps_to_vph(d.sim.inputs.capacity()), 3080.0, 1e-9);
}

TEST(ScenarioJson, RoundTrip) {
  const ScenarioFile a = load_scenario(scenario_path("scenario_2B"));
  const json doc = scenario_to_json(a);
  const ScenarioFile b = parse_scenario(doc);
  EXPECT_EQ(scenario_to_json(b), doc);
  EXPECT_EQ(scenario_hash(a), scenario_hash(b));
}

TEST(ScenarioHash, StableAndSensitive) {
  const ScenarioFile a = load_scenario(scenario_path("scenario_1C"));
  ScenarioFile b = a;
  EXPECT_EQ(scenario_hash(a), scenario_hash(b));
  EXPECT_EQ(scenario_hash(a).size(), 16u);
  b.output_dir = "elsewhere";
  b.parallel = 8;
  EXPECT_EQ(scenario_hash(a), scenario_hash(b));
  b.sim.inputs.rho = 0.6;
  EXPECT_NE(scenario_hash(a), scenario_hash(b));
}

TEST(LoadScenario, MissingFileAndBadJson) {
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), ValidationError);
  const fs::path p = fs::temp_directory_path() / "comc_bad_scenario.json";
  {
    std::ofstream(p) << "{ \"coordination\": ";
  }
  EXPECT_THROW(load_scenario(p), ValidationError);
  fs::remove(p);
}

TEST(LoadScenario, NameDefaultsToFileStem) {
  const fs::path p = fs::temp_directory_path() / "my_case.json";
  {
    std::ofstream(p) << "{}";
  }
  EXPECT_EQ(load_scenario(p).name, "my_case");
  fs::remove(p);
}

}  // namespace
}  // namespace comc
