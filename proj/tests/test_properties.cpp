#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "generators.hpp"
#include "properties.hpp"
#include "psl/analysis.hpp"
#include "psl/simulator.hpp"
#include "psl/strategies.hpp"

using namespace psl;

namespace {

constexpr std::size_t kCases = 1000;

void require_clean(const props::PropertyResult& r) {
  CAPTURE(r.name);
  CAPTURE(r.worst);
  CHECK(r.cases >= kCases);
  CHECK(r.failures == 0);
}

Adjacency adjacency_of(const NetworkModel& net) {
  const std::size_t n = net.agents();
  Adjacency adj(n, std::vector<bool>(n, false));
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t k = 0; k < n; ++k) adj[l][k] = l == k || net.weight(l, k) > 0.0;
  return adj;
}

std::vector<std::size_t> random_permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

}  // namespace

TEST_SUITE("properties") {

TEST_CASE("simplex closure") { require_clean(props::simplex_closure(kCases, 101)); }
TEST_CASE("equal evolution of non-transmitted beliefs") { require_clean(props::equal_evolution(kCases, 102)); }
TEST_CASE("binary hypotheses make all strategies coincide") {
  require_clean(props::binary_equivalence(kCases, 103));
}
TEST_CASE("Perron vector residual and positivity") { require_clean(props::perron_residual(kCases, 104)); }
TEST_CASE("divergences are nonnegative") { require_clean(props::kl_nonnegativity(kCases, 105)); }
TEST_CASE("Jensen bounds and SA learn implies no-SA learn") { require_clean(props::jensen_bounds(kCases, 106)); }
TEST_CASE("SA non-transmitted recursion") { require_clean(props::sa_recursion(kCases, 107)); }

TEST_CASE("Pinsker inequality") {
  std::mt19937_64 rng(108);
  std::size_t failures = 0;
  for (std::size_t c = 0; c < kCases; ++c) {
    const std::size_t symbols = 2 + rng() % 5;
    const auto p = testgen::random_pmf(rng, symbols);
    const auto q = testgen::random_pmf(rng, symbols);
    const LikelihoodModel model(DiscretePmf{{p, q}});
    const double tv = total_variation(p, q);
    if (!(kl_divergence(model, 0, 1) >= 2.0 * tv * tv - 1e-15)) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("SA mislearn threshold is nonincreasing in lambda") {
  std::mt19937_64 rng(109);
  std::size_t failures = 0;
  std::size_t checked = 0;
  while (checked < kCases) {
    const auto inst = testgen::random_instance(rng, 6, 5);
    if (inst.agents < 2 || inst.hypotheses < 3 || inst.truth == inst.transmitted) continue;
    const auto adj = adjacency_of(inst.net);
    const HypothesisSet hyp{inst.hypotheses, inst.truth, inst.transmitted};
    const double b = *likelihood_bound_B(inst.models, inst.transmitted);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    double l1 = u(rng), l2 = u(rng);
    if (l1 > l2) std::swap(l1, l2);
    const auto n1 = build_averaging_matrix(adj, l1);
    const auto n2 = build_averaging_matrix(adj, l2);
    const auto p1 = divergence_profile(inst.models, perron_vector(n1), hyp);
    const auto p2 = divergence_profile(inst.models, perron_vector(n2), hyp);
    if (!(sa_mislearn_threshold(p1, n1, b) >= sa_mislearn_threshold(p2, n2, b) - 1e-9)) ++failures;
    ++checked;
  }
  CHECK(failures == 0);
}

TEST_CASE("agent relabeling permutes trajectories") {
  std::mt19937_64 rng(110);
  std::size_t failures = 0;
  for (std::size_t c = 0; c < kCases; ++c) {
    const auto inst = testgen::random_instance(rng, 6, 4, true);
    const StrategyKind kind = kAllStrategies[c % 3];
    const auto perm = random_permutation(inst.agents, rng);  // old k -> new perm[k]
    const auto adj = adjacency_of(inst.net);
    Adjacency padj(inst.agents, std::vector<bool>(inst.agents, false));
    for (std::size_t l = 0; l < inst.agents; ++l)
      for (std::size_t k = 0; k < inst.agents; ++k) padj[perm[l]][perm[k]] = adj[l][k];
    const auto pnet = build_averaging_matrix(padj, inst.lambda);

    auto state = uniform_state(inst.agents, inst.hypotheses);
    auto pstate = state;
    double worst = 0.0;
    for (std::size_t i = 0; i < 30; ++i) {
      std::vector<Observation> obs;
      draw_observations(inst.models, inst.truth, rng, obs);
      std::vector<std::vector<double>> ll(inst.agents, std::vector<double>(inst.hypotheses));
      std::vector<std::vector<double>> pll(inst.agents);
      for (std::size_t k = 0; k < inst.agents; ++k) {
        inst.models[k].log_likelihoods(obs[k], ll[k]);
        pll[perm[k]] = ll[k];
      }
      state = step_network_with_likelihoods(state, kind, inst.net, ll, inst.transmitted);
      pstate = step_network_with_likelihoods(pstate, kind, pnet, pll, inst.transmitted);
      for (std::size_t k = 0; k < inst.agents; ++k)
        for (Index t = 0; t < inst.hypotheses; ++t)
          worst = std::max(worst, std::abs(state.beliefs[k].log(t) - pstate.beliefs[perm[k]].log(t)));
    }
    if (!(worst <= 1e-9)) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("hypothesis relabeling permutes beliefs") {
  std::mt19937_64 rng(111);
  std::size_t failures = 0;
  for (std::size_t c = 0; c < kCases; ++c) {
    const auto inst = testgen::random_instance(rng, 5, 5, true);
    const StrategyKind kind = kAllStrategies[c % 3];
    const auto perm = random_permutation(inst.hypotheses, rng);  // old t -> new perm[t]
    auto state = uniform_state(inst.agents, inst.hypotheses);
    auto pstate = state;
    double worst = 0.0;
    for (std::size_t i = 0; i < 30; ++i) {
      std::vector<Observation> obs;
      draw_observations(inst.models, inst.truth, rng, obs);
      std::vector<std::vector<double>> ll(inst.agents, std::vector<double>(inst.hypotheses));
      auto pll = ll;
      for (std::size_t k = 0; k < inst.agents; ++k) {
        inst.models[k].log_likelihoods(obs[k], ll[k]);
        for (Index t = 0; t < inst.hypotheses; ++t) pll[k][perm[t]] = ll[k][t];
      }
      state = step_network_with_likelihoods(state, kind, inst.net, ll, inst.transmitted);
      pstate = step_network_with_likelihoods(pstate, kind, inst.net, pll, perm[inst.transmitted]);
      for (std::size_t k = 0; k < inst.agents; ++k)
        for (Index t = 0; t < inst.hypotheses; ++t)
          worst = std::max(worst, std::abs(state.beliefs[k].log(t) - pstate.beliefs[k].log(perm[t])));
    }
    if (!(worst <= 1e-9)) ++failures;
  }
  CHECK(failures == 0);
}

}  // TEST_SUITE
