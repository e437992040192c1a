#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "psl/config.hpp"
#include "psl/errors.hpp"
#include "psl/report.hpp"
#include "psl/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kValidation = 2, kNumerical = 3, kIo = 4 };

struct CommonOptions {
  std::string config;
  std::string preset;
  std::optional<double> lambda;
  std::optional<std::size_t> theta_tx;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  std::optional<std::size_t> horizon;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_source) {
  if (with_source) {
    cmd->add_option("--config", o.config, "Scenario config file (JSON)");
    cmd->add_option("--preset", o.preset, "Named preset: gaussian-siv-a, discrete-siv-b, tiny-k2h3");
  }
  cmd->add_option("--lambda", o.lambda, "Self-weight of the averaging rule, in (0, 1)");
  cmd->add_option("--theta-tx", o.theta_tx, "Transmitted hypothesis (1-based)");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--runs", o.runs, "Monte Carlo runs");
  cmd->add_option("--horizon", o.horizon, "Iterations per run");
  cmd->add_option("--out", o.out, "Output file (analyze) or directory (simulate, reproduce)");
}

void apply_overrides(psl::ScenarioConfig& cfg, const CommonOptions& o) {
  if (o.lambda) cfg.lambda = *o.lambda;
  if (o.theta_tx) {
    if (*o.theta_tx < 1) throw psl::ValidationError("theta_tx: indices are 1-based, got 0");
    cfg.hypotheses.transmitted = *o.theta_tx - 1;
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.runs) cfg.runs = *o.runs;
  if (o.horizon) cfg.horizon = *o.horizon;
  cfg.validate();
}

psl::ScenarioConfig resolve_config(const CommonOptions& o) {
  if (!o.config.empty() && !o.preset.empty())
    throw psl::ValidationError("cli: give either --config or --preset, not both");
  psl::ScenarioConfig cfg;
  if (!o.config.empty()) {
    cfg = psl::load_config(o.config);
  } else if (!o.preset.empty()) {
    cfg = psl::parse_config(json{{"preset", o.preset}});
  } else {
    throw psl::ValidationError("cli: one of --config or --preset is required");
  }
  apply_overrides(cfg, o);
  return cfg;
}

void emit(const json& doc, const std::string& out) {
  if (out.empty()) {
    std::cout << doc.dump(2) << '\n';
  } else {
    psl::write_json_file(out, doc);
  }
}

fs::path prepare_dir(const std::string& out) {
  const fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw psl::IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

int cmd_analyze(const CommonOptions& o) {
  const auto cfg = resolve_config(o);
  emit(psl::analysis_json(cfg, psl::analyze_scenario(cfg)), o.out);
  return kOk;
}

int cmd_check_assumptions(const CommonOptions& o) {
  const auto cfg = resolve_config(o);
  const auto doc = psl::analysis_json(cfg, psl::analyze_scenario(cfg));
  json out = {{"scenario", cfg.name}, {"assumptions", doc["assumptions"]}};
  json per_agent = json::array();
  for (const auto& a : doc["agents"]) per_agent.push_back({{"agent", a["agent"]}, {"assumption4", a["assumption4"]}});
  out["agents"] = std::move(per_agent);
  emit(out, o.out);
  return kOk;
}

int cmd_simulate(const CommonOptions& o) {
  const auto cfg = resolve_config(o);
  const auto dir = prepare_dir(o.out);
  const auto result = psl::run_scenario(cfg);
  for (const auto& run : result.runs)
    for (const auto& traj : run.trajectories)
      psl::write_trajectory_csv(dir / psl::trajectory_filename(cfg.name, traj.strategy, run.summary.run_seed),
                                traj);
  psl::write_json_file(dir / (cfg.name + "_summary.json"), psl::summary_json(cfg, result));
  std::cout << "wrote " << result.runs.size() * cfg.strategies.size() << " trajectories to "
            << dir.string() << '\n';
  return kOk;
}

std::string_view expected_label(psl::Verdict v) {
  switch (v) {
    case psl::Verdict::Learn: return "learned-truth";
    case psl::Verdict::Mislearn: return "mislearned";
    case psl::Verdict::Indeterminate: return "";
  }
  return "";
}

int cmd_reproduce(const std::string& figure, const CommonOptions& o) {
  std::string preset;
  double lambda = 0.0;
  if (figure == "fig5a") { preset = "gaussian-siv-a"; lambda = 0.5; }
  else if (figure == "fig5b") { preset = "gaussian-siv-a"; lambda = 0.9; }
  else if (figure == "fig8a") { preset = "discrete-siv-b"; lambda = 0.7; }
  else if (figure == "fig8b") { preset = "discrete-siv-b"; lambda = 0.95; }
  else throw psl::ValidationError("figure: unknown figure '" + figure + "' (expected fig5a, fig5b, fig8a or fig8b)");

  const auto dir = prepare_dir(o.out);
  json rows = json::array();
  bool all_agree = true;
  for (std::size_t tx = 1; tx <= 3; ++tx) {
    auto cfg = psl::preset_config(preset);
    cfg.lambda = lambda;
    cfg.name = figure + "_tx" + std::to_string(tx);
    CommonOptions panel = o;
    panel.lambda = o.lambda ? o.lambda : std::optional<double>(lambda);
    panel.theta_tx = tx;
    apply_overrides(cfg, panel);
    const auto analysis = psl::analyze_scenario(cfg);
    const auto result = psl::run_scenario(cfg);
    const auto& first = result.runs.front();
    for (const auto& traj : first.trajectories)
      psl::write_trajectory_csv(dir / psl::trajectory_filename(cfg.name, traj.strategy, first.summary.run_seed),
                                traj);
    for (std::size_t s = 0; s < cfg.strategies.size(); ++s) {
      const auto& verdict = analysis.verdict(cfg.strategies[s]);
      std::size_t learned = 0, mislearned = 0, undecided = 0;
      for (const auto& run : result.runs) {
        switch (run.summary.strategies[s].agent_outcomes.front()) {
          case psl::Outcome::LearnedTruth: ++learned; break;
          case psl::Outcome::Mislearned: ++mislearned; break;
          case psl::Outcome::Undecided: ++undecided; break;
        }
      }
      const std::string simulated = learned >= mislearned && learned >= undecided
          ? "learned-truth" : (mislearned >= undecided ? "mislearned" : "undecided");
      const auto expected = expected_label(verdict.verdict);
      const bool agrees = expected.empty() || expected == simulated;
      all_agree = all_agree && agrees;
      rows.push_back({{"theta_tx", tx},
                      {"strategy", std::string(psl::to_string(cfg.strategies[s]))},
                      {"predicted", std::string(psl::to_string(verdict.verdict))},
                      {"predicted_limit", std::string(psl::to_string(verdict.limit))},
                      {"margin", verdict.margin},
                      {"simulated", simulated},
                      {"agent1_counts", {{"learned_truth", learned}, {"mislearned", mislearned},
                                         {"undecided", undecided}}},
                      {"agrees", agrees}});
    }
  }
  json table = {{"figure", figure}, {"preset", preset}, {"lambda", o.lambda ? *o.lambda : lambda},
                {"rows", rows}, {"all_agree", all_agree}};
  psl::write_json_file(dir / (figure + "_verdicts.json"), table);
  std::cout << table.dump(2) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"psl: social learning with partial information sharing"};
  app.require_subcommand(1);

  CommonOptions analyze_opts, check_opts, simulate_opts, reproduce_opts;
  auto* analyze = app.add_subcommand("analyze", "Divergence profile, assumption checks and regime verdicts");
  add_common(analyze, analyze_opts, true);
  auto* check = app.add_subcommand("check-assumptions", "Assumption checks only");
  add_common(check, check_opts, true);
  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write trajectory CSVs and a summary");
  add_common(simulate, simulate_opts, true);
  auto* reproduce = app.add_subcommand("reproduce", "Regenerate one belief-evolution figure and its verdict table");
  std::string figure;
  reproduce->add_option("figure", figure, "fig5a, fig5b, fig8a or fig8b")->required();
  add_common(reproduce, reproduce_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*analyze) return cmd_analyze(analyze_opts);
    if (*check) return cmd_check_assumptions(check_opts);
    if (*simulate) return cmd_simulate(simulate_opts);
    if (*reproduce) return cmd_reproduce(figure, reproduce_opts);
  } catch (const psl::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const psl::InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const psl::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const psl::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  }
  return kOk;
}
