#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "psl/models.hpp"
#include "psl/network.hpp"

namespace psl {

enum class StrategyKind {
  Traditional,  // full belief vectors exchanged
  PartialNoSA,  // only the transmitted component exchanged
  PartialSA,    // as PartialNoSA, own full belief kept in the combination
};

std::string_view to_string(StrategyKind kind);
// Accepts "traditional", "partial-no-sa", "partial-sa". Throws ValidationError.
StrategyKind parse_strategy(std::string_view name);
inline constexpr StrategyKind kAllStrategies[] = {
    StrategyKind::Traditional, StrategyKind::PartialNoSA, StrategyKind::PartialSA};

struct NetworkBeliefState {
  std::vector<BeliefVector> beliefs;  // one per agent
  std::size_t iteration = 0;
};

NetworkBeliefState uniform_state(std::size_t agents, std::size_t hypotheses);

// psi(theta) proportional to prior(theta) * L(x | theta).
BeliefVector bayesian_update(const BeliefVector& prior, std::span<const double> log_likelihoods);
BeliefVector bayesian_update(const BeliefVector& prior, const LikelihoodModel& model,
                             const Observation& x);

// Keeps psi(transmitted) and spreads 1 - psi(transmitted) uniformly over the
// other hypotheses. The remaining mass is formed as a log-sum-exp of the
// non-transmitted entries, so it stays accurate when psi(transmitted) -> 1.
BeliefVector mask_to_transmitted(const BeliefVector& psi, Index transmitted);

struct WeightedBelief {
  double weight;
  std::reference_wrapper<const BeliefVector> belief;
};

// Normalized geometric pooling: mu(theta) ~ exp(sum_l w_l ln psi_l(theta)).
// Weights must sum to 1.
BeliefVector combine_no_sa(std::span<const WeightedBelief> inputs);

// Same pooling with the agent's own unmasked belief entering with weight
// self_weight > 0. neighbors excludes the agent itself.
BeliefVector combine_sa(const BeliefVector& self, double self_weight,
                        std::span<const WeightedBelief> neighbors);

// One synchronous iteration over all agents: local Bayesian update, masking
// (partial strategies) and combination over each agent's in-neighbors.
// log_likelihoods[k][theta] = ln L_k(x_k | theta).
NetworkBeliefState step_network_with_likelihoods(
    const NetworkBeliefState& state, StrategyKind kind, const NetworkModel& net,
    const std::vector<std::vector<double>>& log_likelihoods, Index transmitted);

NetworkBeliefState step_network(const NetworkBeliefState& state, StrategyKind kind,
                                const NetworkModel& net, std::span<const LikelihoodModel> models,
                                std::span<const Observation> observations, Index transmitted);

// Throws ValidationError when `kind` cannot run on `net` (PartialSA with a
// zero self-weight somewhere).
void check_strategy_network(StrategyKind kind, const NetworkModel& net);

}  // namespace psl
