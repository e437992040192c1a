#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "psl/analysis.hpp"
#include "psl/models.hpp"
#include "psl/network.hpp"
#include "psl/strategies.hpp"

namespace psl {

// Either a named preset or an explicit directed edge list (0-based). Self-loops
// are implied for every agent.
struct TopologySpec {
  std::string preset;
  std::size_t agents = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  Adjacency adjacency() const;
};

struct ConvergenceCriteria {
  double epsilon = 1e-6;
  std::size_t confirmation_window = 200;  // consecutive recorded iterations
};

struct ScenarioConfig {
  std::string name = "scenario";
  HypothesisSet hypotheses;
  std::vector<LikelihoodModel> models;  // one per agent
  TopologySpec topology;
  double lambda = 0.5;
  std::vector<StrategyKind> strategies{std::begin(kAllStrategies), std::end(kAllStrategies)};
  std::size_t horizon = 3000;
  std::size_t runs = 1;
  std::uint64_t seed = 1;
  std::size_t record_stride = 10;
  std::optional<std::vector<BeliefVector>> initial_beliefs;  // default uniform
  ConvergenceCriteria convergence;
  // Iteration window [first, last] for rate estimation; default is the last
  // 90% of the horizon.
  std::optional<std::pair<std::size_t, std::size_t>> rate_window;
  bool store_beliefs = true;
  std::size_t workers = 0;  // 0: hardware concurrency

  // Throws ValidationError listing every violated constraint.
  void validate() const;
  NetworkModel network() const;
  std::pair<std::size_t, std::size_t> effective_rate_window() const;
  std::size_t agents() const { return models.size(); }
  // Seed label of run r; the observation stream of a run depends only on it.
  std::uint64_t run_seed(std::size_t run) const { return seed + run; }
};

// Snapshots taken at iterations stride, 2*stride, ..., <= horizon.
struct TrajectoryRecord {
  StrategyKind strategy = StrategyKind::PartialNoSA;
  HypothesisSet hypotheses;
  std::size_t agents = 0;
  std::vector<std::size_t> iterations;
  std::vector<double> log_beliefs;              // [record][agent][theta]; empty unless stored
  std::vector<double> transmitted_log_belief;   // [record][agent]
  std::vector<double> submartingale;            // m_i = sum_k v_k ln mu_k(theta_tx), [record]
  std::vector<double> nontransmitted_log_ratio; // q_k(tau1, tau2), [record][agent]; H >= 3
  std::vector<double> sa_recursion_residual;    // per agent, max over all steps; PartialSA, H >= 3

  std::size_t records() const { return iterations.size(); }
  bool has_beliefs() const { return !log_beliefs.empty(); }
  double log_belief(std::size_t record, std::size_t agent, Index theta) const {
    return log_beliefs[(record * agents + agent) * hypotheses.count + theta];
  }
  double transmitted(std::size_t record, std::size_t agent) const {
    return transmitted_log_belief[record * agents + agent];
  }
  double q(std::size_t record, std::size_t agent) const {
    return nontransmitted_log_ratio[record * agents + agent];
  }
};

// Truth learning is mu(tx) -> 1 when tx == theta0 and
// mu(tx) -> 0 otherwise.
enum class Outcome { LearnedTruth, Mislearned, Undecided };
std::string_view to_string(Outcome outcome);

// Label from the trailing run of recorded mu(tx) values: at least
// criteria.confirmation_window consecutive records beyond 1 - eps or below eps.
Outcome classify_outcome(std::span<const double> transmitted_log_series, bool truth_sharing,
                         const ConvergenceCriteria& criteria);
Outcome classify_agent(const TrajectoryRecord& traj, std::size_t agent,
                       const ConvergenceCriteria& criteria);

struct RateEstimate {
  double slope = 0.0;
  double ci_half_width = 0.0;  // 95%, across runs (across agents for a single run)
  std::size_t runs = 0;
  std::size_t points = 0;
};

struct StrategySummary {
  StrategyKind strategy = StrategyKind::PartialNoSA;
  std::vector<std::vector<double>> final_log_beliefs;
  std::vector<Outcome> agent_outcomes;
  Outcome network_outcome = Outcome::Undecided;  // shared label, Undecided if agents disagree
  std::optional<RateEstimate> rate;              // PartialNoSA with stored beliefs
  std::optional<double> sa_recursion_residual;
};

struct RunSummary {
  std::size_t run_index = 0;
  std::uint64_t run_seed = 0;
  std::vector<StrategySummary> strategies;
  std::optional<double> binary_oracle_deviation;  // when PartialNoSA is requested
};

struct RunOutput {
  std::vector<TrajectoryRecord> trajectories;  // same order as cfg.strategies
  RunSummary summary;
};

struct ScenarioResult {
  PerronVector perron;
  std::vector<RunOutput> runs;
};

// Fills out[k] with agent k's observation at the given iteration (1-based).
using ObservationSource = std::function<void(std::size_t iteration, std::vector<Observation>& out)>;

// Independent draws for all agents, in agent order, from a shared stream.
void draw_observations(std::span<const LikelihoodModel> models, Index truth, std::mt19937_64& rng,
                       std::vector<Observation>& out);

// All requested strategies consume the same observation stream. When
// `source` is given it replaces sampling.
RunOutput run_single(const ScenarioConfig& cfg, std::size_t run_index,
                     const ObservationSource* source = nullptr);

// Runs cfg.runs independent runs on a worker pool; results indexed by run.
// Identical for any worker count.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

// Least-squares slope of y against x.
double ols_slope(std::span<const double> x, std::span<const double> y);

// Slope of ln[mu_k(theta) / mu_k(tx)] against i over the window, averaged
// over agents and trajectories. Needs >= 100 recorded points in the window.
RateEstimate estimate_empirical_rate(std::span<const TrajectoryRecord> trajectories, Index theta,
                                     Index transmitted, std::pair<std::size_t, std::size_t> window);

// Runs PartialNoSA on the H-ary problem next to Traditional on the binary
// problem {tx, complement of tx} with the fictitious likelihood, both driven
// by the same observations, and returns the largest
// |ln mu^H(tx) - ln mu^bin(tx)| over iterations, agents and runs.
// binary_seed_offset != 0 feeds the binary run a different stream.
double binary_reduction_oracle(const ScenarioConfig& cfg, std::uint64_t binary_seed_offset = 0);

struct SubmartingaleReport {
  double violation_rate = 0.0;
  std::size_t violations = 0;
  std::size_t comparisons = 0;
  double max_path_value = 0.0;  // largest m_i over all paths; <= 0 expected
  std::vector<double> mean_series;
};

// Needs >= 200 PartialSA truth-sharing trajectories.
SubmartingaleReport submartingale_diagnostic(std::span<const TrajectoryRecord> trajectories);

struct OscillationAgentSummary {
  double recursion_residual = 0.0;
  double late_min_q = 0.0;
  double late_max_q = 0.0;
  double late_max_abs_q = 0.0;
  double late_transmitted_drift = 0.0;  // change of ln[mu(tau1)/mu(tx)] across the window
};

std::vector<OscillationAgentSummary> oscillation_diagnostic(
    const TrajectoryRecord& traj, std::pair<std::size_t, std::size_t> late_window);

struct ParallelRejectionReport {
  std::size_t cases = 0;       // (record, agent) pairs with some non-tx belief below eps
  std::size_t violations = 0;  // ... where another non-tx belief exceeds eps * exp(max|q|)
};

ParallelRejectionReport parallel_rejection_check(const TrajectoryRecord& traj, double epsilon);

}  // namespace psl
