#include <doctest.h>

#include <cmath>
#include <vector>

#include "psl/errors.hpp"
#include "psl/strategies.hpp"

using namespace psl;

namespace {

BeliefVector probs(std::initializer_list<double> p) {
  const std::vector<double> v(p);
  return BeliefVector::from_probabilities(v);
}

void check_close(const BeliefVector& a, const BeliefVector& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (Index t = 0; t < a.size(); ++t) CHECK(std::abs(a.log(t) - b.log(t)) <= tol);
}

}  // namespace

TEST_SUITE("strategies") {

TEST_CASE("strategy names") {
  for (StrategyKind kind : kAllStrategies) CHECK(parse_strategy(to_string(kind)) == kind);
  CHECK_THROWS_AS(parse_strategy("gossip"), ValidationError);
}

TEST_CASE("bayesian update") {
  const auto u = BeliefVector::uniform(3);
  const std::vector<double> flat{-1.2, -1.2, -1.2};
  check_close(bayesian_update(u, flat), u, 1e-15);

  const std::vector<double> ratio{std::log(0.4), std::log(0.2)};
  const auto psi = bayesian_update(BeliefVector::uniform(2), ratio);
  CHECK(psi.probability(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(psi.probability(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  // Uninformative data leaves any prior unchanged.
  const auto prior = probs({0.2, 0.5, 0.3});
  check_close(bayesian_update(prior, flat), prior, 1e-15);

  const LikelihoodModel d(DiscretePmf{{{0.5, 0.5}, {0.5, 0.5}}});
  check_close(bayesian_update(BeliefVector::uniform(2), d, Observation{Symbol{1}}),
              BeliefVector::uniform(2), 1e-15);
  const std::vector<double> wrong{0.0, 0.0};
  CHECK_THROWS_AS(bayesian_update(prior, wrong), InvalidInput);
}

TEST_CASE("mask to transmitted") {
  const auto masked = mask_to_transmitted(probs({0.1, 0.4, 0.5}), 1);
  CHECK(masked.probability(1) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(masked.probability(0) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(masked.probability(2) == doctest::Approx(0.3).epsilon(1e-14));

  const auto binary = probs({0.35, 0.65});
  CHECK(mask_to_transmitted(binary, 0) == binary);

  // Near-degenerate mass: the complement stays accurate in the log domain.
  const auto peaked = BeliefVector::from_log_unnormalized({0.0, -800.0, -801.0});
  const auto m = mask_to_transmitted(peaked, 0);
  CHECK(m.log(0) == peaked.log(0));
  CHECK(m.log(1) == doctest::Approx(log_sum_exp(std::vector<double>{-800.0, -801.0}) - std::log(2.0)));
  CHECK(m.log(1) == m.log(2));
}

TEST_CASE("combine without self-awareness") {
  const auto a = probs({0.2, 0.3, 0.5});
  const std::vector<WeightedBelief> single{{1.0, std::cref(a)}};
  check_close(combine_no_sa(single), a, 1e-15);
  const std::vector<WeightedBelief> twins{{0.5, std::cref(a)}, {0.5, std::cref(a)}};
  check_close(combine_no_sa(twins), a, 1e-15);

  const auto p = probs({0.8, 0.2});
  const auto q = probs({0.2, 0.8});
  const std::vector<WeightedBelief> sym{{0.5, std::cref(p)}, {0.5, std::cref(q)}};
  const auto mid = combine_no_sa(sym);
  CHECK(mid.probability(0) == doctest::Approx(0.5).epsilon(1e-15));

  // Log-ratio identity: ln mu(a)/mu(b) = sum_l w_l ln psi_l(a)/psi_l(b).
  const auto r = probs({0.6, 0.1, 0.3});
  const std::vector<WeightedBelief> mix{{0.3, std::cref(a)}, {0.7, std::cref(r)}};
  const auto out = combine_no_sa(mix);
  for (Index s = 0; s < 3; ++s)
    for (Index t = 0; t < 3; ++t) {
      const double expected = 0.3 * (a.log(s) - a.log(t)) + 0.7 * (r.log(s) - r.log(t));
      CHECK(out.log(s) - out.log(t) == doctest::Approx(expected).epsilon(1e-13));
    }

  const std::vector<WeightedBelief> bad{{0.5, std::cref(a)}, {0.4, std::cref(r)}};
  CHECK_THROWS_AS(combine_no_sa(bad), InvalidInput);
  const std::vector<WeightedBelief> ragged{{0.5, std::cref(a)}, {0.5, std::cref(p)}};
  CHECK_THROWS_AS(combine_no_sa(ragged), InvalidInput);
}

TEST_CASE("combine with self-awareness") {
  const auto self = probs({0.5, 0.3, 0.2});
  const auto neighbor = probs({0.4, 0.3, 0.3});
  const std::vector<WeightedBelief> n{{0.5, std::cref(neighbor)}};
  const auto out = combine_sa(self, 0.5, n);
  const double g0 = std::sqrt(0.5 * 0.4), g1 = std::sqrt(0.3 * 0.3), g2 = std::sqrt(0.2 * 0.3);
  const double z = g0 + g1 + g2;
  CHECK(out.probability(0) == doctest::Approx(g0 / z).epsilon(1e-14));
  CHECK(out.probability(1) == doctest::Approx(g1 / z).epsilon(1e-14));
  CHECK(out.probability(2) == doctest::Approx(g2 / z).epsilon(1e-14));

  check_close(combine_sa(self, 1.0, {}), self, 1e-15);
  CHECK_THROWS_AS(combine_sa(self, 0.0, n), ValidationError);
  const std::vector<WeightedBelief> heavy{{0.7, std::cref(neighbor)}};
  CHECK_THROWS_AS(combine_sa(self, 0.5, heavy), InvalidInput);

  const auto p = probs({0.8, 0.2});
  const auto q = probs({0.3, 0.7});
  const std::vector<WeightedBelief> one{{0.4, std::cref(q)}};
  const std::vector<WeightedBelief> both{{0.6, std::cref(p)}, {0.4, std::cref(q)}};
  CHECK(combine_sa(p, 0.6, one) == combine_no_sa(both));
}

TEST_CASE("network step") {
  const LikelihoodModel m(DiscretePmf{{{0.6, 0.4}, {0.3, 0.7}, {0.6, 0.4}}});
  const std::vector<LikelihoodModel> models{m};
  const auto lone = build_averaging_matrix(Adjacency{{true}}, 0.5);
  const std::vector<Observation> obs{Symbol{1}};
  for (StrategyKind kind : kAllStrategies) {
    const auto next = step_network(uniform_state(1, 3), kind, lone, models, obs, 1);
    CHECK(next.iteration == 1);
    // A lone agent filters on its own; without self-awareness it only keeps
    // the masked posterior, i.e. Bayesian filtering of the binary problem.
    auto expected = bayesian_update(BeliefVector::uniform(3), m, obs[0]);
    if (kind == StrategyKind::PartialNoSA) expected = mask_to_transmitted(expected, 1);
    check_close(next.beliefs[0], expected, 1e-15);
  }

  const auto net = build_averaging_matrix(topology_preset("ring-3"), 0.6);
  const std::vector<LikelihoodModel> three{m, m, m};
  const std::vector<Observation> xs{Symbol{0}, Symbol{1}, Symbol{1}};
  const auto next = step_network(uniform_state(3, 3), StrategyKind::PartialNoSA, net, three, xs, 1);
  for (const auto& b : next.beliefs) CHECK(b.log(0) == b.log(2));

  const std::vector<Observation> short_obs{Symbol{0}};
  CHECK_THROWS_AS(step_network(uniform_state(3, 3), StrategyKind::Traditional, net, three, short_obs, 1),
                  InvalidInput);

  SquareMatrix w(2);
  w(0, 0) = 0.0;
  w(1, 0) = 1.0;
  w(0, 1) = 0.5;
  w(1, 1) = 0.5;
  const NetworkModel no_self(w);
  CHECK_THROWS_AS(check_strategy_network(StrategyKind::PartialSA, no_self), ValidationError);
  CHECK_NOTHROW(check_strategy_network(StrategyKind::PartialNoSA, no_self));
}

}  // TEST_SUITE
