#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "psl/simulator.hpp"

namespace psl {

// Named scenario builders. Hypothesis and agent indices in files are 1-based.
//   gaussian-siv-a  10 agents, unit-variance Gaussians with means 0 / 0.5 / 5
//   discrete-siv-b  10 agents, pmfs over {0, 1, 2} with the same structure
//   tiny-k2h3       2 agents, complete graph, 3 hypotheses
std::vector<std::string> preset_names();
bool is_preset(const std::string& name);
ScenarioConfig preset_config(const std::string& name);

// The three pmfs of the discrete preset, rows indexed by symbol.
struct DiscretePresetPmfs {
  std::vector<double> f1, f2, f3;
};
const DiscretePresetPmfs& discrete_preset_pmfs();

// Builds a config from a parsed document. Collects every violation and throws
// a single ValidationError whose entries read "<field path>: <constraint>".
ScenarioConfig parse_config(const nlohmann::json& doc);
// Throws IoError when the file cannot be read, ValidationError on parse errors.
ScenarioConfig load_config(const std::filesystem::path& path);

// Canonical, fully expanded form; parse_config(serialize_config(c)) == c.
nlohmann::json serialize_config(const ScenarioConfig& cfg);

}  // namespace psl
