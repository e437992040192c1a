#include "psl/strategies.hpp"

#include <cmath>

#include "psl/errors.hpp"

namespace psl {

namespace {

constexpr double kWeightSumTolerance = 1e-9;

void check_dimensions(const BeliefVector& a, const BeliefVector& b) {
  if (a.size() != b.size())
    throw InvalidInput("belief vectors have different sizes (" + std::to_string(a.size()) +
                       " vs " + std::to_string(b.size()) + ")");
}

// Pools the terms in the order given; the ordering matters for bitwise
// reproducibility across strategies.
BeliefVector pool(std::span<const WeightedBelief> terms) {
  const std::size_t h = terms.front().belief.get().size();
  std::vector<double> acc(h, 0.0);
  for (const auto& term : terms) {
    const auto logs = term.belief.get().log_entries();
    for (std::size_t t = 0; t < h; ++t) acc[t] += term.weight * logs[t];
  }
  return BeliefVector::from_log_unnormalized(std::move(acc));
}

}  // namespace

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Traditional: return "traditional";
    case StrategyKind::PartialNoSA: return "partial-no-sa";
    case StrategyKind::PartialSA: return "partial-sa";
  }
  return "unknown";
}

StrategyKind parse_strategy(std::string_view name) {
  for (StrategyKind kind : kAllStrategies)
    if (to_string(kind) == name) return kind;
  throw ValidationError("strategies: unknown strategy '" + std::string(name) +
                        "' (expected traditional, partial-no-sa or partial-sa)");
}

NetworkBeliefState uniform_state(std::size_t agents, std::size_t hypotheses) {
  return NetworkBeliefState{std::vector<BeliefVector>(agents, BeliefVector::uniform(hypotheses)),
                            0};
}

BeliefVector bayesian_update(const BeliefVector& prior, std::span<const double> log_likelihoods) {
  if (prior.size() != log_likelihoods.size())
    throw InvalidInput("bayesian_update: likelihood vector size mismatch");
  std::vector<double> logs(prior.size());
  for (std::size_t t = 0; t < logs.size(); ++t) logs[t] = prior.log(t) + log_likelihoods[t];
  return BeliefVector::from_log_unnormalized(std::move(logs));
}

BeliefVector bayesian_update(const BeliefVector& prior, const LikelihoodModel& model,
                             const Observation& x) {
  std::vector<double> ll(model.hypotheses());
  model.log_likelihoods(x, ll);
  return bayesian_update(prior, ll);
}

BeliefVector mask_to_transmitted(const BeliefVector& psi, Index transmitted) {
  const std::size_t h = psi.size();
  if (transmitted >= h) throw InvalidInput("mask_to_transmitted: transmitted index out of range");
  std::vector<double> rest;
  rest.reserve(h - 1);
  for (Index t = 0; t < h; ++t)
    if (t != transmitted) rest.push_back(psi.log(t));
  const double share = log_sum_exp(rest) - std::log(static_cast<double>(h - 1));
  std::vector<double> logs(h, share);
  logs[transmitted] = psi.log(transmitted);
  return BeliefVector::from_log_normalized(std::move(logs));
}

BeliefVector combine_no_sa(std::span<const WeightedBelief> inputs) {
  if (inputs.empty()) throw InvalidInput("combine_no_sa: no inputs");
  double total = 0.0;
  for (const auto& in : inputs) {
    check_dimensions(inputs.front().belief.get(), in.belief.get());
    if (in.weight < 0.0) throw InvalidInput("combine_no_sa: negative weight");
    total += in.weight;
  }
  if (std::abs(total - 1.0) > kWeightSumTolerance)
    throw InvalidInput("combine_no_sa: weights must sum to 1");
  return pool(inputs);
}

BeliefVector combine_sa(const BeliefVector& self, double self_weight,
                        std::span<const WeightedBelief> neighbors) {
  if (!(self_weight > 0.0))
    throw ValidationError("combine_sa: self-awareness coefficient a_kk must be positive");
  std::vector<WeightedBelief> terms;
  terms.reserve(neighbors.size() + 1);
  terms.push_back({self_weight, std::cref(self)});
  double total = self_weight;
  for (const auto& n : neighbors) {
    check_dimensions(self, n.belief.get());
    if (n.weight < 0.0) throw InvalidInput("combine_sa: negative weight");
    total += n.weight;
    terms.push_back(n);
  }
  if (std::abs(total - 1.0) > kWeightSumTolerance)
    throw InvalidInput("combine_sa: a_kk plus neighbor weights must sum to 1");
  return pool(terms);
}

void check_strategy_network(StrategyKind kind, const NetworkModel& net) {
  if (kind == StrategyKind::PartialSA && !net.all_self_loops_positive())
    throw ValidationError("strategies: partial-sa requires a_kk > 0 for every agent");
}

NetworkBeliefState step_network_with_likelihoods(
    const NetworkBeliefState& state, StrategyKind kind, const NetworkModel& net,
    const std::vector<std::vector<double>>& log_likelihoods, Index transmitted) {
  const std::size_t agents = net.agents();
  if (state.beliefs.size() != agents || log_likelihoods.size() != agents)
    throw InvalidInput("step_network: agent count mismatch");
  check_strategy_network(kind, net);

  std::vector<BeliefVector> psi;
  psi.reserve(agents);
  for (std::size_t k = 0; k < agents; ++k)
    psi.push_back(bayesian_update(state.beliefs[k], log_likelihoods[k]));

  std::vector<BeliefVector> shared;
  if (kind == StrategyKind::Traditional) {
    shared = psi;
  } else {
    shared.reserve(agents);
    for (const auto& p : psi) shared.push_back(mask_to_transmitted(p, transmitted));
  }

  NetworkBeliefState next;
  next.iteration = state.iteration + 1;
  next.beliefs.reserve(agents);
  std::vector<WeightedBelief> terms;
  for (std::size_t k = 0; k < agents; ++k) {
    terms.clear();
    for (std::size_t l : net.in_neighbors(k)) {
      const bool own = (l == k && kind == StrategyKind::PartialSA);
      terms.push_back({net.weight(l, k), std::cref(own ? psi[k] : shared[l])});
    }
    next.beliefs.push_back(pool(terms));
  }
  return next;
}

NetworkBeliefState step_network(const NetworkBeliefState& state, StrategyKind kind,
                                const NetworkModel& net, std::span<const LikelihoodModel> models,
                                std::span<const Observation> observations, Index transmitted) {
  const std::size_t agents = net.agents();
  if (models.size() != agents || observations.size() != agents)
    throw InvalidInput("step_network: expected one model and one observation per agent");
  std::vector<std::vector<double>> ll(agents);
  for (std::size_t k = 0; k < agents; ++k) {
    ll[k].resize(models[k].hypotheses());
    models[k].log_likelihoods(observations[k], ll[k]);
  }
  return step_network_with_likelihoods(state, kind, net, ll, transmitted);
}

}  // namespace psl
