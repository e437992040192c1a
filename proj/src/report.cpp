#include "psl/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "psl/config.hpp"
#include "psl/errors.hpp"

namespace psl {

namespace {

using nlohmann::json;

json estimate_json(const Estimate& e) {
  return {{"value", e.value}, {"ci_half_width", e.ci_half_width},
          {"method", std::string(to_string(e.method))}};
}

json outcome_counts(const ScenarioResult& result, std::size_t slot) {
  std::size_t learned = 0, mislearned = 0, undecided = 0;
  for (const auto& run : result.runs) {
    switch (run.summary.strategies[slot].network_outcome) {
      case Outcome::LearnedTruth: ++learned; break;
      case Outcome::Mislearned: ++mislearned; break;
      case Outcome::Undecided: ++undecided; break;
    }
  }
  return {{"learned_truth", learned}, {"mislearned", mislearned}, {"undecided", undecided}};
}

}  // namespace

const RegimeVerdict& ScenarioAnalysis::verdict(StrategyKind kind) const {
  for (const auto& v : verdicts)
    if (v.strategy == kind) return v;
  throw InvalidInput("no verdict for strategy " + std::string(to_string(kind)));
}

ScenarioAnalysis analyze_scenario(const ScenarioConfig& cfg, const EstimatorConfig& estimator) {
  cfg.validate();
  const auto net = cfg.network();
  ScenarioAnalysis a;
  a.perron = perron_vector(net);
  a.profile = divergence_profile(cfg.models, a.perron, cfg.hypotheses, estimator);
  a.assumption3 = check_assumption_3(cfg.models, cfg.hypotheses.truth, estimator);
  for (const auto& m : cfg.models) a.assumption4.push_back(check_assumption_4(m, cfg.hypotheses.truth));
  a.bound_b = likelihood_bound_B(cfg.models, cfg.hypotheses.transmitted);

  a.verdicts.push_back(classify_traditional(a.profile));
  a.verdicts.push_back(classify_regime_no_sa(a.profile));
  if (cfg.hypotheses.truth_sharing()) {
    a.verdicts.push_back(classify_truth_sharing_sa(a.profile, a.assumption4));
  } else {
    a.verdicts.push_back(classify_regime_sa(a.profile, net, a.bound_b));
  }
  return a;
}

json to_json(const RegimeVerdict& v) {
  json q = json::object();
  for (const auto& [name, value] : v.quantities) q[name] = value;
  json out = {{"strategy", std::string(to_string(v.strategy))},
              {"verdict", std::string(to_string(v.verdict))},
              {"limit", std::string(to_string(v.limit))},
              {"margin", v.margin},
              {"tie_tolerance", v.tie_tolerance},
              {"rule", v.rule},
              {"quantities", std::move(q)}};
  out["predicted_rate"] = v.predicted_rate ? json(*v.predicted_rate) : json(nullptr);
  return out;
}

json analysis_json(const ScenarioConfig& cfg, const ScenarioAnalysis& a) {
  const auto& p = a.profile;
  json agents = json::array();
  for (std::size_t k = 0; k < cfg.agents(); ++k) {
    const auto& a4 = a.assumption4[k];
    json distinguishable = json::array();
    for (Index t : a4.distinguishable) distinguishable.push_back(t + 1);
    agents.push_back({{"agent", k + 1},
                      {"perron", p.perron[k]},
                      {"self_weight", cfg.network().self_weight(k)},
                      {"divergence", p.per_agent[k]},
                      {"divergence_complement", estimate_json(p.per_agent_fictitious[k])},
                      {"assumption4", {{"holds", a4.holds},
                                       {"c_estimate", a4.c_estimate},
                                       {"distinguishable", distinguishable},
                                       {"method", a4.method}}}});
  }
  json verdicts = json::array();
  for (const auto& v : a.verdicts) verdicts.push_back(to_json(v));
  json doc;
  doc["scenario"] = cfg.name;
  doc["theta0"] = cfg.hypotheses.truth + 1;
  doc["theta_tx"] = cfg.hypotheses.transmitted + 1;
  doc["lambda"] = cfg.lambda;
  doc["perron"] = {{"entries", a.perron.entries},
                   {"residual", a.perron.residual},
                   {"iterations", a.perron.iterations}};
  doc["profile"] = {{"average", p.average},
                    {"average_complement", p.average_fictitious},
                    {"average_complement_ci", p.average_fictitious_ci},
                    {"transmitted_average", p.transmitted_average()},
                    {"non_transmitted_mean", p.non_transmitted_mean()}};
  doc["agents"] = std::move(agents);
  doc["assumptions"] = {
      {"a1_finite_divergences", true},
      {"a2_positive_initial_beliefs", true},
      {"a3", {{"holds", a.assumption3.holds},
              {"witness", a.assumption3.witness ? json(*a.assumption3.witness + 1) : json(nullptr)}}},
      {"a4_any_agent", std::any_of(a.assumption4.begin(), a.assumption4.end(),
                                   [](const Assumption4Result& r) { return r.holds; })},
      {"a5_bound_b", a.bound_b ? json(*a.bound_b) : json(nullptr)}};
  doc["verdicts"] = std::move(verdicts);
  return doc;
}

json summary_json(const ScenarioConfig& cfg, const ScenarioResult& result) {
  json strategies = json::array();
  for (std::size_t s = 0; s < cfg.strategies.size(); ++s) {
    json runs = json::array();
    std::vector<double> rates;
    for (const auto& run : result.runs) {
      const auto& ss = run.summary.strategies[s];
      json outcomes = json::array();
      for (Outcome o : ss.agent_outcomes) outcomes.push_back(std::string(to_string(o)));
      json r = {{"run", run.summary.run_index},
                {"seed", run.summary.run_seed},
                {"network_outcome", std::string(to_string(ss.network_outcome))},
                {"agent_outcomes", std::move(outcomes)},
                {"final_log_beliefs", ss.final_log_beliefs}};
      if (ss.rate) {
        r["rate"] = {{"slope", ss.rate->slope}, {"ci_half_width", ss.rate->ci_half_width},
                     {"points", ss.rate->points}};
        rates.push_back(ss.rate->slope);
      }
      if (ss.sa_recursion_residual) r["sa_recursion_residual"] = *ss.sa_recursion_residual;
      runs.push_back(std::move(r));
    }
    json entry = {{"strategy", std::string(to_string(cfg.strategies[s]))},
                  {"outcomes", outcome_counts(result, s)},
                  {"runs", std::move(runs)}};
    strategies.push_back(std::move(entry));
  }
  double oracle = 0.0;
  bool have_oracle = false;
  for (const auto& run : result.runs)
    if (run.summary.binary_oracle_deviation) {
      oracle = std::max(oracle, *run.summary.binary_oracle_deviation);
      have_oracle = true;
    }
  json doc;
  doc["scenario"] = cfg.name;
  doc["config"] = serialize_config(cfg);
  doc["perron"] = result.perron.entries;
  doc["strategies"] = std::move(strategies);
  doc["binary_oracle_deviation"] = have_oracle ? json(oracle) : json(nullptr);
  return doc;
}

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& traj) {
  if (!traj.has_beliefs()) throw InvalidInput("write_trajectory_csv: trajectory has no stored beliefs");
  out << "iter,agent,hypothesis,log_belief\n";
  char buf[64];
  for (std::size_t r = 0; r < traj.records(); ++r)
    for (std::size_t k = 0; k < traj.agents; ++k)
      for (Index t = 0; t < traj.hypotheses.count; ++t) {
        const double v = std::max(traj.log_belief(r, k, t), kCsvLogFloor);
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << traj.iterations[r] << ',' << k + 1 << ',' << t + 1 << ',' << buf << '\n';
      }
}

void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_trajectory_csv(out, traj);
  if (!out) throw IoError("error while writing " + path.string());
}

std::string trajectory_filename(const std::string& scenario, StrategyKind strategy,
                                std::uint64_t seed) {
  return scenario + "_" + std::string(to_string(strategy)) + "_" + std::to_string(seed) + ".csv";
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("error while writing " + path.string());
}

}  // namespace psl
