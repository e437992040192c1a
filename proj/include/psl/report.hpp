#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "psl/analysis.hpp"
#include "psl/simulator.hpp"

namespace psl {

struct ScenarioAnalysis {
  PerronVector perron;
  DivergenceProfile profile;
  Assumption3Result assumption3;
  std::vector<Assumption4Result> assumption4;  // per agent
  std::optional<double> bound_b;
  std::vector<RegimeVerdict> verdicts;  // one per StrategyKind, in kAllStrategies order

  const RegimeVerdict& verdict(StrategyKind kind) const;
};

// Everything the classifiers can say about a config before simulating it.
ScenarioAnalysis analyze_scenario(const ScenarioConfig& cfg, const EstimatorConfig& estimator = {});

nlohmann::json to_json(const RegimeVerdict& verdict);
nlohmann::json analysis_json(const ScenarioConfig& cfg, const ScenarioAnalysis& analysis);
nlohmann::json summary_json(const ScenarioConfig& cfg, const ScenarioResult& result);

// Log beliefs below this are written as this value.
inline constexpr double kCsvLogFloor = -690.77552789821368;  // ln(1e-300)

// Header iter,agent,hypothesis,log_belief; 1-based agent and hypothesis.
void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& traj);
void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& traj);
// <scenario>_<strategy>_<seed>.csv
std::string trajectory_filename(const std::string& scenario, StrategyKind strategy,
                                std::uint64_t seed);

// Pretty-printed with a trailing newline. Throws IoError.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace psl
