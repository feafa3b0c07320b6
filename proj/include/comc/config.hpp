#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "comc/metrics.hpp"
#include "comc/sim/simulation.hpp"

namespace comc {

// One scenario document, converted to SI. The JSON form uses km/h, veh/h, m
// and s; conversion happens only in parse_scenario and scenario_to_json.
struct ScenarioFile {
  std::string name;
  sim::SimConfig sim;  // seed is overwritten per run
  std::vector<std::uint64_t> seeds{1};
  ContourWindow contour;
  std::string output_dir = "out";
  int parallel = 1;

  void validate() const;
};

// Throws ValidationError with the dotted field path, or for a JSON parse
// error with field "<file>".
ScenarioFile load_scenario(const std::filesystem::path& path);
ScenarioFile parse_scenario(const nlohmann::json& doc);

// Canonical document with every field spelled out; parse_scenario of it
// reproduces the input.
nlohmann::json scenario_to_json(const ScenarioFile& s);

// 16 hex digits of FNV-1a over the canonical document, output_dir and
// parallel excluded.
std::string scenario_hash(const ScenarioFile& s);

}  // namespace comc
