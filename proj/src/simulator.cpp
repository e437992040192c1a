#include "psl/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "psl/errors.hpp"
#include "psl/random.hpp"

namespace psl {

namespace {

constexpr std::size_t kMinRatePoints = 100;
constexpr std::size_t kMinSubmartingaleRuns = 200;

std::vector<double> to_binary_log(const BeliefVector& belief, Index transmitted) {
  std::vector<double> rest;
  for (Index t = 0; t < belief.size(); ++t)
    if (t != transmitted) rest.push_back(belief.log(t));
  return {belief.log(transmitted), log_sum_exp(rest)};
}

double fictitious_from_row(std::span<const double> ll, Index transmitted) {
  std::vector<double> rest;
  for (Index t = 0; t < ll.size(); ++t)
    if (t != transmitted) rest.push_back(ll[t]);
  if (rest.size() == 1) return rest.front();
  return log_sum_exp(rest) - std::log(static_cast<double>(rest.size()));
}

// First two non-transmitted hypotheses, for the q_k diagnostic.
std::pair<Index, Index> nontransmitted_pair(const HypothesisSet& hyp) {
  std::vector<Index> rest;
  for (Index t = 0; t < hyp.count; ++t)
    if (t != hyp.transmitted) rest.push_back(t);
  return {rest[0], rest.size() > 1 ? rest[1] : rest[0]};
}

NetworkBeliefState initial_state(const ScenarioConfig& cfg) {
  if (cfg.initial_beliefs) return NetworkBeliefState{*cfg.initial_beliefs, 0};
  return uniform_state(cfg.agents(), cfg.hypotheses.count);
}

void compute_log_likelihoods(std::span<const LikelihoodModel> models,
                             const std::vector<Observation>& obs,
                             std::vector<std::vector<double>>& ll) {
  ll.resize(models.size());
  for (std::size_t k = 0; k < models.size(); ++k) {
    ll[k].resize(models[k].hypotheses());
    models[k].log_likelihoods(obs[k], ll[k]);
  }
}

class BinaryShadow {
 public:
  BinaryShadow(const NetworkBeliefState& start, Index transmitted) : tx_(transmitted) {
    state_.iteration = start.iteration;
    for (const auto& b : start.beliefs)
      state_.beliefs.push_back(BeliefVector::from_log_unnormalized(to_binary_log(b, tx_)));
  }

  void step(const NetworkModel& net, const std::vector<std::vector<double>>& ll) {
    binary_ll_.resize(ll.size());
    for (std::size_t k = 0; k < ll.size(); ++k)
      binary_ll_[k] = {ll[k][tx_], fictitious_from_row(ll[k], tx_)};
    state_ = step_network_with_likelihoods(state_, StrategyKind::Traditional, net, binary_ll_, 0);
  }

  double deviation(const NetworkBeliefState& full) const {
    double worst = 0.0;
    for (std::size_t k = 0; k < full.beliefs.size(); ++k)
      worst = std::max(worst, std::abs(full.beliefs[k].log(tx_) - state_.beliefs[k].log(0)));
    return worst;
  }

 private:
  Index tx_;
  NetworkBeliefState state_;
  std::vector<std::vector<double>> binary_ll_;
};

void record_snapshot(TrajectoryRecord& traj, const NetworkBeliefState& state,
                     const PerronVector& perron, bool store_beliefs) {
  const Index tx = traj.hypotheses.transmitted;
  traj.iterations.push_back(state.iteration);
  double m = 0.0;
  const auto [tau1, tau2] = nontransmitted_pair(traj.hypotheses);
  for (std::size_t k = 0; k < traj.agents; ++k) {
    const auto& b = state.beliefs[k];
    if (store_beliefs)
      traj.log_beliefs.insert(traj.log_beliefs.end(), b.log_entries().begin(),
                              b.log_entries().end());
    traj.transmitted_log_belief.push_back(b.log(tx));
    m += perron.entries[k] * b.log(tx);
    if (traj.hypotheses.count >= 3) traj.nontransmitted_log_ratio.push_back(b.log(tau1) - b.log(tau2));
  }
  traj.submartingale.push_back(m);
}

StrategySummary summarize(const ScenarioConfig& cfg, const TrajectoryRecord& traj,
                          const NetworkBeliefState& final_state) {
  StrategySummary s;
  s.strategy = traj.strategy;
  for (const auto& b : final_state.beliefs)
    s.final_log_beliefs.emplace_back(b.log_entries().begin(), b.log_entries().end());
  for (std::size_t k = 0; k < traj.agents; ++k)
    s.agent_outcomes.push_back(classify_agent(traj, k, cfg.convergence));
  const bool unanimous = std::all_of(s.agent_outcomes.begin(), s.agent_outcomes.end(),
                                     [&](Outcome o) { return o == s.agent_outcomes.front(); });
  s.network_outcome = unanimous ? s.agent_outcomes.front() : Outcome::Undecided;
  if (traj.strategy == StrategyKind::PartialNoSA && traj.has_beliefs()) {
    const auto window = cfg.effective_rate_window();
    const auto points = std::count_if(traj.iterations.begin(), traj.iterations.end(),
                                      [&](std::size_t i) { return i >= window.first && i <= window.second; });
    if (static_cast<std::size_t>(points) >= kMinRatePoints) {
      const Index theta = nontransmitted_pair(cfg.hypotheses).first;
      s.rate = estimate_empirical_rate(std::span(&traj, 1), theta, cfg.hypotheses.transmitted,
                                       window);
    }
  }
  if (!traj.sa_recursion_residual.empty())
    s.sa_recursion_residual =
        *std::max_element(traj.sa_recursion_residual.begin(), traj.sa_recursion_residual.end());
  return s;
}

RunOutput run_single_impl(const ScenarioConfig& cfg, const NetworkModel& net,
                          const PerronVector& perron, std::size_t run_index,
                          const ObservationSource* source) {
  const std::size_t agents = cfg.agents();
  const Index tx = cfg.hypotheses.transmitted;
  const auto [tau1, tau2] = nontransmitted_pair(cfg.hypotheses);
  const bool track_q = cfg.hypotheses.count >= 3;

  std::mt19937_64 rng(stream_seed(cfg.run_seed(run_index), 0));
  const NetworkBeliefState start = initial_state(cfg);

  std::vector<NetworkBeliefState> states(cfg.strategies.size(), start);
  RunOutput out;
  out.summary.run_index = run_index;
  out.summary.run_seed = cfg.run_seed(run_index);
  for (StrategyKind kind : cfg.strategies) {
    TrajectoryRecord traj;
    traj.strategy = kind;
    traj.hypotheses = cfg.hypotheses;
    traj.agents = agents;
    if (kind == StrategyKind::PartialSA && track_q) traj.sa_recursion_residual.assign(agents, 0.0);
    out.trajectories.push_back(std::move(traj));
  }

  const bool with_oracle = std::find(cfg.strategies.begin(), cfg.strategies.end(),
                                     StrategyKind::PartialNoSA) != cfg.strategies.end();
  const std::size_t oracle_slot = with_oracle
      ? static_cast<std::size_t>(std::find(cfg.strategies.begin(), cfg.strategies.end(),
                                           StrategyKind::PartialNoSA) - cfg.strategies.begin())
      : 0;
  std::optional<BinaryShadow> shadow;
  double oracle_deviation = 0.0;
  if (with_oracle) shadow.emplace(start, tx);

  std::vector<Observation> obs(agents);
  std::vector<std::vector<double>> ll;
  for (std::size_t i = 1; i <= cfg.horizon; ++i) {
    if (source != nullptr) {
      (*source)(i, obs);
    } else {
      draw_observations(cfg.models, cfg.hypotheses.truth, rng, obs);
    }
    compute_log_likelihoods(cfg.models, obs, ll);
    for (std::size_t s = 0; s < states.size(); ++s) {
      auto& traj = out.trajectories[s];
      NetworkBeliefState next = step_network_with_likelihoods(states[s], traj.strategy, net, ll, tx);
      if (!traj.sa_recursion_residual.empty()) {
        for (std::size_t k = 0; k < agents; ++k) {
          const double q_prev = states[s].beliefs[k].log(tau1) - states[s].beliefs[k].log(tau2);
          const double q_next = next.beliefs[k].log(tau1) - next.beliefs[k].log(tau2);
          const double a = net.self_weight(k);
          const double r = std::abs(q_next - a * (q_prev + (ll[k][tau1] - ll[k][tau2])));
          traj.sa_recursion_residual[k] = std::max(traj.sa_recursion_residual[k], r);
        }
      }
      states[s] = std::move(next);
      if (i % cfg.record_stride == 0) record_snapshot(traj, states[s], perron, cfg.store_beliefs);
    }
    if (shadow) {
      shadow->step(net, ll);
      oracle_deviation = std::max(oracle_deviation, shadow->deviation(states[oracle_slot]));
    }
  }

  for (std::size_t s = 0; s < states.size(); ++s)
    out.summary.strategies.push_back(summarize(cfg, out.trajectories[s], states[s]));
  if (with_oracle) out.summary.binary_oracle_deviation = oracle_deviation;
  return out;
}

}  // namespace

Adjacency TopologySpec::adjacency() const {
  if (!preset.empty()) return topology_preset(preset);
  return adjacency_from_edges(agents, edges);
}

void ScenarioConfig::validate() const {
  std::vector<std::string> errors;
  try {
    hypotheses.validate();
  } catch (const ValidationError& e) {
    errors.insert(errors.end(), e.violations().begin(), e.violations().end());
  }
  if (models.empty()) errors.push_back("likelihoods: needs at least one agent");
  for (std::size_t k = 0; k < models.size(); ++k)
    if (models[k].hypotheses() != hypotheses.count)
      errors.push_back("likelihoods[" + std::to_string(k) + "]: expected " +
                       std::to_string(hypotheses.count) + " hypotheses, got " +
                       std::to_string(models[k].hypotheses()));
  if (!(lambda > 0.0 && lambda < 1.0)) errors.push_back("lambda: must lie in the open interval (0, 1)");
  if (horizon < 1) errors.push_back("horizon: must be >= 1");
  if (runs < 1) errors.push_back("runs: must be >= 1");
  if (record_stride < 1) errors.push_back("record_stride: must be >= 1");
  if (strategies.empty()) errors.push_back("strategies: needs at least one strategy");
  if (!(convergence.epsilon > 0.0 && convergence.epsilon < 0.5))
    errors.push_back("convergence.epsilon: must lie in (0, 0.5)");
  if (convergence.confirmation_window < 1)
    errors.push_back("convergence.confirmation_window: must be >= 1");
  if (rate_window && rate_window->first > rate_window->second)
    errors.push_back("rate_window: first must not exceed last");
  if (initial_beliefs) {
    if (initial_beliefs->size() != models.size())
      errors.push_back("initial_beliefs: expected one vector per agent");
    for (std::size_t k = 0; k < initial_beliefs->size(); ++k) {
      const auto& b = (*initial_beliefs)[k];
      if (b.size() != hypotheses.count)
        errors.push_back("initial_beliefs[" + std::to_string(k) + "]: expected " +
                         std::to_string(hypotheses.count) + " entries");
      for (double v : b.log_entries())
        if (!std::isfinite(v)) {
          errors.push_back("initial_beliefs[" + std::to_string(k) +
                           "]: entries must be strictly positive");
          break;
        }
    }
  }
  if (errors.empty()) {
    try {
      const auto net = network();
      if (net.agents() != models.size())
        errors.push_back("topology: has " + std::to_string(net.agents()) +
                         " agents but likelihoods lists " + std::to_string(models.size()));
      for (StrategyKind kind : strategies) check_strategy_network(kind, net);
    } catch (const ValidationError& e) {
      for (const auto& v : e.violations()) errors.push_back("topology: " + v);
    }
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));
}

NetworkModel ScenarioConfig::network() const {
  return build_averaging_matrix(topology.adjacency(), lambda);
}

std::pair<std::size_t, std::size_t> ScenarioConfig::effective_rate_window() const {
  if (rate_window) return *rate_window;
  return {horizon / 10 + 1, horizon};
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::LearnedTruth: return "learned-truth";
    case Outcome::Mislearned: return "mislearned";
    case Outcome::Undecided: return "undecided";
  }
  return "unknown";
}

Outcome classify_outcome(std::span<const double> transmitted_log_series, bool truth_sharing,
                         const ConvergenceCriteria& criteria) {
  const double log_high = std::log1p(-criteria.epsilon);
  const double log_low = std::log(criteria.epsilon);
  std::size_t high = 0;
  std::size_t low = 0;
  for (auto it = transmitted_log_series.rbegin(); it != transmitted_log_series.rend(); ++it) {
    if (*it >= log_high && low == 0) {
      ++high;
    } else if (*it <= log_low && high == 0) {
      ++low;
    } else {
      break;
    }
  }
  if (high >= criteria.confirmation_window)
    return truth_sharing ? Outcome::LearnedTruth : Outcome::Mislearned;
  if (low >= criteria.confirmation_window)
    return truth_sharing ? Outcome::Mislearned : Outcome::LearnedTruth;
  return Outcome::Undecided;
}

Outcome classify_agent(const TrajectoryRecord& traj, std::size_t agent,
                       const ConvergenceCriteria& criteria) {
  std::vector<double> series(traj.records());
  for (std::size_t r = 0; r < series.size(); ++r) series[r] = traj.transmitted(r, agent);
  return classify_outcome(series, traj.hypotheses.truth_sharing(), criteria);
}

void draw_observations(std::span<const LikelihoodModel> models, Index truth, std::mt19937_64& rng,
                       std::vector<Observation>& out) {
  out.resize(models.size());
  for (std::size_t k = 0; k < models.size(); ++k) out[k] = models[k].sample(truth, rng);
}

RunOutput run_single(const ScenarioConfig& cfg, std::size_t run_index,
                     const ObservationSource* source) {
  cfg.validate();
  const auto net = cfg.network();
  return run_single_impl(cfg, net, perron_vector(net), run_index, source);
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto net = cfg.network();
  ScenarioResult result;
  result.perron = perron_vector(net);
  result.runs.resize(cfg.runs);

  std::size_t workers = cfg.workers != 0 ? cfg.workers : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, cfg.runs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t r = next++; r < cfg.runs; r = next++) {
      try {
        result.runs[r] = run_single_impl(cfg, net, result.perron, r, nullptr);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return result;
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("ols_slope: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw InvalidInput("ols_slope: x values are all equal");
  return sxy / sxx;
}

RateEstimate estimate_empirical_rate(std::span<const TrajectoryRecord> trajectories, Index theta,
                                     Index transmitted, std::pair<std::size_t, std::size_t> window) {
  if (trajectories.empty()) throw InvalidInput("estimate_empirical_rate: no trajectories");
  std::vector<double> run_slopes;
  std::vector<double> agent_slopes;
  std::size_t points = 0;
  for (const auto& traj : trajectories) {
    if (!traj.has_beliefs())
      throw InvalidInput("estimate_empirical_rate: trajectory has no stored beliefs");
    if (theta >= traj.hypotheses.count || transmitted >= traj.hypotheses.count || theta == transmitted)
      throw InvalidInput("estimate_empirical_rate: bad hypothesis indices");
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < traj.records(); ++r)
      if (traj.iterations[r] >= window.first && traj.iterations[r] <= window.second) rows.push_back(r);
    if (rows.size() < kMinRatePoints)
      throw InvalidInput("estimate_empirical_rate: window holds " + std::to_string(rows.size()) +
                         " recorded points, need >= " + std::to_string(kMinRatePoints));
    points = rows.size();
    std::vector<double> x(rows.size());
    std::vector<double> y(rows.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < traj.agents; ++k) {
      for (std::size_t j = 0; j < rows.size(); ++j) {
        x[j] = static_cast<double>(traj.iterations[rows[j]]);
        y[j] = traj.log_belief(rows[j], k, theta) - traj.log_belief(rows[j], k, transmitted);
      }
      const double s = ols_slope(x, y);
      agent_slopes.push_back(s);
      sum += s;
    }
    run_slopes.push_back(sum / static_cast<double>(traj.agents));
  }
  const auto& spread = run_slopes.size() > 1 ? run_slopes : agent_slopes;
  const double n = static_cast<double>(spread.size());
  const double mean = std::accumulate(run_slopes.begin(), run_slopes.end(), 0.0) /
                      static_cast<double>(run_slopes.size());
  const double spread_mean = std::accumulate(spread.begin(), spread.end(), 0.0) / n;
  double var = 0.0;
  for (double s : spread) var += (s - spread_mean) * (s - spread_mean);
  var = spread.size() > 1 ? var / (n - 1.0) : 0.0;
  return RateEstimate{mean, 1.959963984540054 * std::sqrt(var / n), run_slopes.size(), points};
}

double binary_reduction_oracle(const ScenarioConfig& cfg, std::uint64_t binary_seed_offset) {
  cfg.validate();
  const auto net = cfg.network();
  const Index tx = cfg.hypotheses.transmitted;
  double worst = 0.0;
  for (std::size_t run = 0; run < cfg.runs; ++run) {
    std::mt19937_64 rng(stream_seed(cfg.run_seed(run), 0));
    std::mt19937_64 other_rng(stream_seed(cfg.run_seed(run) + binary_seed_offset, 0));
    NetworkBeliefState full = initial_state(cfg);
    BinaryShadow shadow(full, tx);
    std::vector<Observation> obs;
    std::vector<Observation> other_obs;
    std::vector<std::vector<double>> ll;
    std::vector<std::vector<double>> other_ll;
    for (std::size_t i = 1; i <= cfg.horizon; ++i) {
      draw_observations(cfg.models, cfg.hypotheses.truth, rng, obs);
      compute_log_likelihoods(cfg.models, obs, ll);
      full = step_network_with_likelihoods(full, StrategyKind::PartialNoSA, net, ll, tx);
      if (binary_seed_offset == 0) {
        shadow.step(net, ll);
      } else {
        draw_observations(cfg.models, cfg.hypotheses.truth, other_rng, other_obs);
        compute_log_likelihoods(cfg.models, other_obs, other_ll);
        shadow.step(net, other_ll);
      }
      worst = std::max(worst, shadow.deviation(full));
    }
  }
  return worst;
}

SubmartingaleReport submartingale_diagnostic(std::span<const TrajectoryRecord> trajectories) {
  if (trajectories.size() < kMinSubmartingaleRuns)
    throw InvalidInput("submartingale_diagnostic: needs >= " +
                       std::to_string(kMinSubmartingaleRuns) + " runs, got " +
                       std::to_string(trajectories.size()));
  const auto& first = trajectories.front();
  for (const auto& t : trajectories) {
    if (t.strategy != StrategyKind::PartialSA || !t.hypotheses.truth_sharing())
      throw InvalidInput("submartingale_diagnostic: expects truth-sharing partial-sa trajectories");
    if (t.iterations != first.iterations)
      throw InvalidInput("submartingale_diagnostic: trajectories use different record grids");
  }
  SubmartingaleReport report;
  const std::size_t records = first.records();
  const double runs = static_cast<double>(trajectories.size());
  report.max_path_value = -std::numeric_limits<double>::infinity();
  report.mean_series.assign(records, 0.0);
  for (const auto& t : trajectories)
    for (std::size_t r = 0; r < records; ++r) {
      report.mean_series[r] += t.submartingale[r] / runs;
      report.max_path_value = std::max(report.max_path_value, t.submartingale[r]);
    }
  for (std::size_t r = 1; r < records; ++r) {
    double mean = 0.0;
    for (const auto& t : trajectories) mean += (t.submartingale[r] - t.submartingale[r - 1]) / runs;
    double var = 0.0;
    for (const auto& t : trajectories) {
      const double d = t.submartingale[r] - t.submartingale[r - 1] - mean;
      var += d * d;
    }
    const double se = std::sqrt(var / (runs - 1.0) / runs);
    ++report.comparisons;
    if (mean < 0.0 && mean < -3.0 * se) ++report.violations;
  }
  report.violation_rate = report.comparisons == 0
      ? 0.0
      : static_cast<double>(report.violations) / static_cast<double>(report.comparisons);
  return report;
}

std::vector<OscillationAgentSummary> oscillation_diagnostic(
    const TrajectoryRecord& traj, std::pair<std::size_t, std::size_t> late_window) {
  if (traj.hypotheses.count < 3 || traj.nontransmitted_log_ratio.empty())
    throw InvalidInput("oscillation_diagnostic: needs H >= 3");
  const auto [tau1, tau2] = nontransmitted_pair(traj.hypotheses);
  (void)tau2;
  std::vector<OscillationAgentSummary> out(traj.agents);
  for (std::size_t k = 0; k < traj.agents; ++k) {
    auto& s = out[k];
    if (!traj.sa_recursion_residual.empty()) s.recursion_residual = traj.sa_recursion_residual[k];
    s.late_min_q = std::numeric_limits<double>::infinity();
    s.late_max_q = -std::numeric_limits<double>::infinity();
    std::optional<double> first_drift;
    double last_drift = 0.0;
    for (std::size_t r = 0; r < traj.records(); ++r) {
      const std::size_t i = traj.iterations[r];
      if (i < late_window.first || i > late_window.second) continue;
      const double q = traj.q(r, k);
      s.late_min_q = std::min(s.late_min_q, q);
      s.late_max_q = std::max(s.late_max_q, q);
      s.late_max_abs_q = std::max(s.late_max_abs_q, std::abs(q));
      if (traj.has_beliefs()) {
        const double drift = traj.log_belief(r, k, tau1) - traj.transmitted(r, k);
        if (!first_drift) first_drift = drift;
        last_drift = drift;
      }
    }
    if (first_drift) s.late_transmitted_drift = last_drift - *first_drift;
  }
  return out;
}

ParallelRejectionReport parallel_rejection_check(const TrajectoryRecord& traj, double epsilon) {
  if (!traj.has_beliefs()) throw InvalidInput("parallel_rejection_check: needs stored beliefs");
  ParallelRejectionReport report;
  const Index tx = traj.hypotheses.transmitted;
  const double log_eps = std::log(epsilon);
  for (std::size_t k = 0; k < traj.agents; ++k) {
    // Largest |ln mu(tau) - ln mu(tau')| over the run for this agent.
    double bound = 0.0;
    for (std::size_t r = 0; r < traj.records(); ++r)
      for (Index a = 0; a < traj.hypotheses.count; ++a)
        for (Index b = 0; b < traj.hypotheses.count; ++b)
          if (a != tx && b != tx)
            bound = std::max(bound, std::abs(traj.log_belief(r, k, a) - traj.log_belief(r, k, b)));
    for (std::size_t r = 0; r < traj.records(); ++r) {
      double lowest = std::numeric_limits<double>::infinity();
      double highest = -std::numeric_limits<double>::infinity();
      for (Index t = 0; t < traj.hypotheses.count; ++t) {
        if (t == tx) continue;
        lowest = std::min(lowest, traj.log_belief(r, k, t));
        highest = std::max(highest, traj.log_belief(r, k, t));
      }
      if (lowest < log_eps) {
        ++report.cases;
        if (highest > log_eps + bound) ++report.violations;
      }
    }
  }
  return report;
}

}  // namespace psl
