#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "psl/analysis.hpp"
#include "psl/config.hpp"
#include "psl/errors.hpp"

using namespace psl;

namespace {

double normal_pdf(double x, double mean) {
  return std::exp(-0.5 * (x - mean) * (x - mean)) / std::sqrt(2.0 * std::numbers::pi);
}

// Plain trapezoid rule on a fine grid: an oracle independent of the
// adaptive quadrature used by the library.
double trapezoid_kl_to_mixture(double mu0, const std::vector<double>& components) {
  const double lo = -30.0, hi = 30.0;
  const int n = 600000;
  const double h = (hi - lo) / n;
  double total = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + h * i;
    double mix = 0.0;
    for (double m : components) mix += normal_pdf(x, m);
    mix /= static_cast<double>(components.size());
    const double p = normal_pdf(x, mu0);
    if (p == 0.0 || mix == 0.0) continue;
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    total += w * p * std::log(p / mix);
  }
  return total * h;
}

DivergenceProfile preset_profile(const std::string& name, Index transmitted, double lambda) {
  auto cfg = preset_config(name);
  cfg.hypotheses.transmitted = transmitted;
  cfg.lambda = lambda;
  return divergence_profile(cfg.models, perron_vector(cfg.network()), cfg.hypotheses);
}

DivergenceProfile manual_profile(std::vector<double> average, double complement, Index tx) {
  DivergenceProfile p;
  p.hypotheses = HypothesisSet{average.size(), 0, tx};
  p.perron = {1.0};
  p.per_agent = {average};
  p.per_agent_fictitious = {Estimate{complement, 0.0, EstimatorMethod::Exact}};
  p.average = std::move(average);
  p.average_fictitious = complement;
  return p;
}

const LikelihoodModel kPreset(GaussianMeans{{0.0, 0.5, 5.0}});

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("adaptive simpson") {
  CHECK(adaptive_simpson([](double x) { return std::sin(x); }, 0.0, std::numbers::pi, 1e-12) ==
        doctest::Approx(2.0).epsilon(1e-11));
  CHECK(adaptive_simpson([](double x) { return x * x * x; }, -1.0, 2.0, 1e-12) ==
        doctest::Approx(3.75).epsilon(1e-13));
  CHECK_THROWS_AS(adaptive_simpson([](double x) { return x < 0.3 ? 0.0 : 1.0; }, 0.0, 1.0, 1e-15, 3),
                  NumericalError);
}

TEST_CASE("kl divergence") {
  CHECK(kl_divergence(kPreset, 0, 0) == 0.0);
  CHECK(kl_divergence(kPreset, 0, 1) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(kl_divergence(kPreset, 0, 2) == doctest::Approx(12.5).epsilon(1e-15));
  const LikelihoodModel d(DiscretePmf{{{0.5, 0.5}, {0.25, 0.75}}});
  const double direct = 0.5 * std::log(0.5 / 0.25) + 0.5 * std::log(0.5 / 0.75);
  CHECK(kl_divergence(d, 0, 1) == doctest::Approx(direct).epsilon(1e-15));
  CHECK_THROWS_AS(kl_divergence(d, 0, 2), InvalidInput);
}

TEST_CASE("kl to the fictitious mixture") {
  const LikelihoodModel binary(DiscretePmf{{{0.5, 0.5}, {0.25, 0.75}}});
  const auto e = kl_to_fictitious(binary, 0, 0);
  CHECK(e.value == kl_divergence(binary, 0, 1));
  CHECK(e.ci_half_width == 0.0);

  const LikelihoodModel same(DiscretePmf{{{0.3, 0.7}, {0.6, 0.4}, {0.3, 0.7}, {0.3, 0.7}}});
  CHECK(kl_to_fictitious(same, 0, 1).value == doctest::Approx(0.0).epsilon(1e-15));

  // Mixture of N(0) and N(0.5), truth N(0): Jensen puts it below 0.0625.
  const auto mix = kl_to_fictitious(kPreset, 0, 2);
  CHECK(mix.method == EstimatorMethod::Quadrature);
  CHECK(mix.value > 0.0);
  CHECK(mix.value <= 0.0625);
  CHECK(mix.value == doctest::Approx(trapezoid_kl_to_mixture(0.0, {0.0, 0.5})).epsilon(1e-6));

  const auto far = kl_to_fictitious(kPreset, 0, 1);
  CHECK(far.value == doctest::Approx(trapezoid_kl_to_mixture(0.0, {0.0, 5.0})).epsilon(1e-7));
  CHECK(far.value <= 0.5 * 12.5);

  // All non-transmitted components equal: closed form.
  const LikelihoodModel twin(GaussianMeans{{1.0, 0.0, 1.0, 1.0}});
  const auto closed = kl_to_fictitious(twin, 1, 1);
  CHECK(closed.method == EstimatorMethod::ClosedForm);
  CHECK(closed.value == 0.5);
}

TEST_CASE("quadrature agrees with monte carlo") {
  EstimatorConfig mc;
  mc.gaussian_mixture = EstimatorMethod::MonteCarlo;
  for (Index tx : {Index{1}, Index{2}}) {
    const auto q = kl_to_fictitious(kPreset, 0, tx);
    const auto m = kl_to_fictitious(kPreset, 0, tx, mc);
    CHECK(m.method == EstimatorMethod::MonteCarlo);
    CHECK(m.ci_half_width > 0.0);
    CHECK(std::abs(q.value - m.value) <= m.ci_half_width);
  }
}

TEST_CASE("total variation and distinguishable sets") {
  const std::vector<double> p{0.5, 0.3, 0.2};
  const std::vector<double> q{0.2, 0.3, 0.5};
  CHECK(total_variation(p, q) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(total_variation(p, p) == 0.0);
  CHECK(distinguishable_set(kPreset, 0) == std::vector<Index>{1, 2});
  const LikelihoodModel g(GaussianMeans{{0.0, 0.0, 5.0}});
  CHECK(distinguishable_set(g, 0) == std::vector<Index>{2});
}

TEST_CASE("divergence profile of the gaussian preset") {
  const auto cfg = preset_config("gaussian-siv-a");
  const auto v = perron_vector(cfg.network());
  const auto p = divergence_profile(cfg.models, v, cfg.hypotheses);
  double d2 = 0.0, d3 = 0.0;
  for (std::size_t k = 0; k < 10; ++k) {
    CHECK(p.per_agent[k][0] == 0.0);
    d2 += v.entries[k] * kl_divergence(cfg.models[k], 0, 1);
    d3 += v.entries[k] * kl_divergence(cfg.models[k], 0, 2);
  }
  CHECK(p.average[0] == 0.0);
  CHECK(p.average[1] == doctest::Approx(d2).epsilon(1e-14));
  CHECK(p.average[2] == doctest::Approx(d3).epsilon(1e-14));
}

TEST_CASE("regimes without self-awareness") {
  const auto tx2 = classify_regime_no_sa(preset_profile("gaussian-siv-a", 1, 0.5));
  CHECK(tx2.verdict == Verdict::Mislearn);
  CHECK(tx2.limit == Limit::ToOne);
  CHECK(tx2.margin < 0.0);
  // lambda does not enter the verdict.
  CHECK(classify_regime_no_sa(preset_profile("gaussian-siv-a", 1, 0.9)).verdict == Verdict::Mislearn);

  const auto p3 = preset_profile("gaussian-siv-a", 2, 0.5);
  const auto tx3 = classify_regime_no_sa(p3);
  CHECK(tx3.verdict == Verdict::Learn);
  CHECK(tx3.limit == Limit::ToZero);
  CHECK(*tx3.predicted_rate == doctest::Approx(p3.average[2] - p3.average_fictitious));

  const auto p1 = preset_profile("gaussian-siv-a", 0, 0.5);
  const auto tx1 = classify_regime_no_sa(p1);
  CHECK(tx1.verdict == Verdict::Learn);
  CHECK(tx1.limit == Limit::ToOne);
  CHECK(tx1.margin == doctest::Approx(p1.average_fictitious));
  CHECK(predicted_rate_no_sa(p1) == doctest::Approx(-p1.average_fictitious));
  CHECK(predicted_rate_no_sa(p1) < 0.0);

  const auto tie = classify_regime_no_sa(manual_profile({0.0, 0.2, 0.2}, 0.2, 1));
  CHECK(tie.verdict == Verdict::Indeterminate);
  CHECK(predicted_rate_no_sa(manual_profile({0.0, 0.2, 0.2}, 0.2, 1)) == 0.0);
}

TEST_CASE("regimes with self-awareness") {
  const auto cfg = preset_config("gaussian-siv-a");
  const auto g2 = classify_regime_sa(preset_profile("gaussian-siv-a", 1, 0.5), cfg.network(),
                                     likelihood_bound_B(cfg.models, 1));
  CHECK(g2.verdict == Verdict::Indeterminate);
  CHECK(g2.margin == 0.0);

  const auto g3 = classify_regime_sa(preset_profile("gaussian-siv-a", 2, 0.5), cfg.network(), std::nullopt);
  CHECK(g3.verdict == Verdict::Learn);
  CHECK(g3.margin > 0.0);

  CHECK_THROWS_AS(classify_regime_sa(preset_profile("gaussian-siv-a", 0, 0.5), cfg.network(), std::nullopt),
                  InvalidInput);

  // Shipped discrete preset at lambda = 0.95 sits in the gray region.
  auto d = preset_config("discrete-siv-b");
  d.lambda = 0.95;
  const auto dp = preset_profile("discrete-siv-b", 1, 0.95);
  const auto b = likelihood_bound_B(d.models, 1);
  REQUIRE(b.has_value());
  const auto dv = classify_regime_sa(dp, d.network(), b);
  CHECK(dv.verdict == Verdict::Indeterminate);
  CHECK(dp.transmitted_average() < sa_learn_threshold(dp));
  CHECK(dp.transmitted_average() > sa_mislearn_threshold(dp, d.network(), *b));

  // Vanishing self-weights: the lower threshold approaches d_ave(complement).
  const LikelihoodModel m(DiscretePmf{{{0.6, 0.3, 0.1}, {0.5, 0.3, 0.2}, {0.1, 0.2, 0.7}}});
  const std::vector<LikelihoodModel> three{m, m, m};
  const HypothesisSet hyp{3, 0, 1};
  for (double lambda : {1e-3, 1e-6, 1e-9}) {
    const auto net = build_averaging_matrix(topology_preset("complete-3"), lambda);
    const auto prof = divergence_profile(three, perron_vector(net), hyp);
    const double gap = prof.average_fictitious - sa_mislearn_threshold(prof, net, *likelihood_bound_B(three, 1));
    CHECK(gap >= 0.0);
    CHECK(gap <= 3.0 * lambda * (prof.average_fictitious + 1.0 + std::log(7.0)));
  }
}

TEST_CASE("mislearn fixture satisfies the bound") {
  const auto cfg = load_config(PSL_SOURCE_DIR "/tests/fixtures/sa_mislearn_k2.json");
  const auto net = cfg.network();
  const auto prof = divergence_profile(cfg.models, perron_vector(net), cfg.hypotheses);
  const auto b = likelihood_bound_B(cfg.models, cfg.hypotheses.transmitted);
  REQUIRE(b.has_value());
  // Oracle written out: d_ave(complement) - sum_k a_kk (d_k(complement) + v_k B).
  double penalty = 0.0;
  for (std::size_t k = 0; k < 2; ++k)
    penalty += net.self_weight(k) * (prof.per_agent_fictitious[k].value + prof.perron[k] * *b);
  const double threshold = prof.average_fictitious - penalty;
  CHECK(sa_mislearn_threshold(prof, net, *b) == doctest::Approx(threshold).epsilon(1e-15));
  CHECK(prof.transmitted_average() < threshold);
  CHECK(classify_regime_sa(prof, net, b).verdict == Verdict::Mislearn);
}

TEST_CASE("traditional and truth-sharing classifiers") {
  CHECK(classify_traditional(preset_profile("gaussian-siv-a", 1, 0.5)).verdict == Verdict::Learn);
  CHECK(classify_traditional(manual_profile({0.0, 0.0, 0.3}, 0.1, 1)).verdict == Verdict::Indeterminate);

  const auto p1 = preset_profile("gaussian-siv-a", 0, 0.5);
  const auto cfg = preset_config("gaussian-siv-a");
  std::vector<Assumption4Result> a4;
  for (const auto& m : cfg.models) a4.push_back(check_assumption_4(m, 0));
  const auto v = classify_truth_sharing_sa(p1, a4);
  CHECK(v.verdict == Verdict::Learn);
  CHECK(v.limit == Limit::ToOne);
  std::vector<Assumption4Result> none(10);
  CHECK(classify_truth_sharing_sa(p1, none).verdict == Verdict::Indeterminate);
  CHECK_THROWS_AS(classify_truth_sharing_sa(preset_profile("gaussian-siv-a", 1, 0.5), a4), InvalidInput);
}

TEST_CASE("assumption 3") {
  const auto cfg = preset_config("gaussian-siv-a");
  const auto a3 = check_assumption_3(cfg.models, 0);
  CHECK(a3.holds);
  REQUIRE(a3.witness.has_value());
  CHECK(*a3.witness == 0);

  const LikelihoodModel flat(DiscretePmf{{{0.4, 0.6}, {0.4, 0.6}, {0.4, 0.6}}});
  const std::vector<LikelihoodModel> flats{flat, flat};
  CHECK_FALSE(check_assumption_3(flats, 0).holds);

  // True row is the uniform mix of the other two: the complement is invisible.
  const LikelihoodModel mixed(DiscretePmf{{{0.4, 0.6}, {0.2, 0.8}, {0.6, 0.4}}});
  const std::vector<LikelihoodModel> lone{mixed};
  const auto r = check_assumption_3(lone, 0);
  CHECK_FALSE(r.holds);
  CHECK(r.per_agent[0].value == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("assumption 4") {
  const LikelihoodModel single(DiscretePmf{{{0.5, 0.3, 0.2}, {0.5, 0.3, 0.2}, {0.2, 0.3, 0.5}}});
  const auto s = check_assumption_4(single, 0);
  CHECK(s.method == "exact-vertex");
  CHECK(s.c_estimate == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(s.holds);

  const LikelihoodModel mixed(DiscretePmf{{{0.4, 0.3, 0.3}, {0.2, 0.5, 0.3}, {0.6, 0.1, 0.3}}});
  const auto m = check_assumption_4(mixed, 0);
  CHECK_FALSE(m.holds);
  CHECK(m.c_estimate <= 1e-6);
  REQUIRE(m.minimizer.size() == 2);
  CHECK(m.minimizer[0] == doctest::Approx(0.5).epsilon(1e-3));

  // Away from the mixture the minimum is strictly positive: the row
  // (0.4, 0.2, 0.4) lies off the segment between the other two rows.
  const LikelihoodModel off(DiscretePmf{{{0.4, 0.2, 0.4}, {0.2, 0.5, 0.3}, {0.6, 0.1, 0.3}}});
  const auto o = check_assumption_4(off, 0);
  CHECK(o.holds);
  CHECK(o.c_estimate == doctest::Approx(0.1).epsilon(1e-4));

  const auto g = check_assumption_4(kPreset, 0);
  CHECK(g.holds);
  CHECK(g.method == "analytic-gaussian");
  CHECK(g.c_estimate > 0.0);

  const LikelihoodModel flat(DiscretePmf{{{0.4, 0.6}, {0.4, 0.6}}});
  CHECK_FALSE(check_assumption_4(flat, 0).holds);
}

TEST_CASE("bounded likelihood constant") {
  const LikelihoodModel m(DiscretePmf{{{0.5, 0.3, 0.2}, {0.1, 0.1, 0.8}, {0.2, 0.3, 0.5}}});
  const std::vector<LikelihoodModel> one{m};
  CHECK(*likelihood_bound_B(one, 1) == doctest::Approx(std::log(2.5)).epsilon(1e-15));
  const LikelihoodModel flat(DiscretePmf{{{0.4, 0.6}, {0.4, 0.6}, {0.4, 0.6}}});
  const std::vector<LikelihoodModel> flats{flat};
  CHECK(*likelihood_bound_B(flats, 0) == 0.0);
  const std::vector<LikelihoodModel> gaussian{kPreset};
  CHECK_FALSE(likelihood_bound_B(gaussian, 1).has_value());
}

}  // TEST_SUITE
