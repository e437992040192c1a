#include "psl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "psl/errors.hpp"

namespace psl {

namespace {

constexpr double kZeroDivergence = 1e-12;
constexpr double kHalfLogTwoPi = 0.91893853320467274178;

double gaussian_log_density(double x, double mean) {
  const double d = x - mean;
  return -kHalfLogTwoPi - 0.5 * d * d;
}

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                    double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth <= 0)
    throw NumericalError("adaptive_simpson: maximum recursion depth reached", std::abs(delta));
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

// Euclidean projection onto the probability simplex.
void project_to_simplex(std::vector<double>& y) {
  std::vector<double> sorted = y;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumulative += sorted[i];
    const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (sorted[i] - t > 0.0) theta = t;
  }
  for (double& v : y) v = std::max(v - theta, 0.0);
}

struct MixtureTv {
  std::span<const double> target;
  std::vector<std::span<const double>> components;

  double operator()(std::span<const double> alpha) const {
    double tv = 0.0;
    for (std::size_t x = 0; x < target.size(); ++x) {
      double mix = 0.0;
      for (std::size_t j = 0; j < components.size(); ++j) mix += alpha[j] * components[j][x];
      tv += std::abs(target[x] - mix);
    }
    return 0.5 * tv;
  }

  void subgradient(std::span<const double> alpha, std::vector<double>& g) const {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t x = 0; x < target.size(); ++x) {
      double mix = 0.0;
      for (std::size_t j = 0; j < components.size(); ++j) mix += alpha[j] * components[j][x];
      const double diff = target[x] - mix;
      const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      for (std::size_t j = 0; j < components.size(); ++j) g[j] -= 0.5 * sign * components[j][x];
    }
  }
};

struct SimplexMinimum {
  double value = std::numeric_limits<double>::infinity();
  std::vector<double> alpha;

  void offer(double v, std::span<const double> a) {
    if (v < value) {
      value = v;
      alpha.assign(a.begin(), a.end());
    }
  }
};

void grid_search(const MixtureTv& objective, std::size_t m, const Assumption4Config& config,
                 SimplexMinimum& best) {
  std::vector<double> alpha(m);
  if (m == 2) {
    const std::size_t n = config.grid_resolution_2d;
    for (std::size_t i = 0; i <= n; ++i) {
      alpha[0] = static_cast<double>(i) / static_cast<double>(n);
      alpha[1] = 1.0 - alpha[0];
      best.offer(objective(alpha), alpha);
    }
  } else if (m == 3) {
    const std::size_t n = config.grid_resolution_3d;
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t j = 0; i + j <= n; ++j) {
        alpha[0] = static_cast<double>(i) / static_cast<double>(n);
        alpha[1] = static_cast<double>(j) / static_cast<double>(n);
        alpha[2] = static_cast<double>(n - i - j) / static_cast<double>(n);
        best.offer(objective(alpha), alpha);
      }
  }
}

void projected_descent(const MixtureTv& objective, std::vector<double> alpha,
                       std::size_t iterations, SimplexMinimum& best) {
  std::vector<double> g(alpha.size());
  best.offer(objective(alpha), alpha);
  for (std::size_t t = 1; t <= iterations; ++t) {
    objective.subgradient(alpha, g);
    const double norm = std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0));
    if (norm == 0.0) break;
    const double step = 0.5 / std::sqrt(static_cast<double>(t)) / norm;
    for (std::size_t j = 0; j < alpha.size(); ++j) alpha[j] -= step * g[j];
    project_to_simplex(alpha);
    best.offer(objective(alpha), alpha);
  }
}

SimplexMinimum minimize_mixture_tv(const MixtureTv& objective, const Assumption4Config& config,
                                   std::size_t random_starts, std::size_t iterations) {
  const std::size_t m = objective.components.size();
  SimplexMinimum best;
  std::vector<double> alpha(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    std::fill(alpha.begin(), alpha.end(), 0.0);
    alpha[j] = 1.0;
    projected_descent(objective, alpha, iterations, best);
  }
  std::fill(alpha.begin(), alpha.end(), 1.0 / static_cast<double>(m));
  projected_descent(objective, alpha, iterations, best);

  std::mt19937_64 rng(config.seed);
  std::exponential_distribution<double> expo(1.0);
  for (std::size_t s = 0; s < random_starts; ++s) {
    double total = 0.0;
    for (double& a : alpha) total += (a = expo(rng));
    for (double& a : alpha) a /= total;
    projected_descent(objective, alpha, iterations, best);
  }
  grid_search(objective, m, config, best);
  if (!std::isfinite(best.value))
    throw NumericalError("check_assumption_4: minimization produced a non-finite value", 0.0);
  return best;
}

}  // namespace

std::string_view to_string(EstimatorMethod method) {
  switch (method) {
    case EstimatorMethod::Exact: return "exact";
    case EstimatorMethod::ClosedForm: return "closed-form";
    case EstimatorMethod::Quadrature: return "quadrature";
    case EstimatorMethod::MonteCarlo: return "monte-carlo";
  }
  return "unknown";
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Learn: return "learn";
    case Verdict::Mislearn: return "mislearn";
    case Verdict::Indeterminate: return "indeterminate";
  }
  return "unknown";
}

std::string_view to_string(Limit limit) {
  switch (limit) {
    case Limit::ToZero: return "to-zero";
    case Limit::ToOne: return "to-one";
    case Limit::Unknown: return "unknown";
  }
  return "unknown";
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

double kl_divergence(const LikelihoodModel& model, Index truth, Index theta) {
  const std::size_t h = model.hypotheses();
  if (truth >= h || theta >= h) throw InvalidInput("kl_divergence: hypothesis index out of range");
  if (truth == theta) return 0.0;
  if (model.is_gaussian()) {
    const double delta = model.gaussian().means[truth] - model.gaussian().means[theta];
    return 0.5 * delta * delta;
  }
  const auto& p = model.pmf().rows[truth];
  const auto& q = model.pmf().rows[theta];
  double kl = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) kl += p[x] * (std::log(p[x]) - std::log(q[x]));
  return std::max(kl, 0.0);
}

Estimate kl_to_fictitious(const LikelihoodModel& model, Index truth, Index transmitted,
                          const EstimatorConfig& config) {
  const std::size_t h = model.hypotheses();
  if (truth >= h || transmitted >= h)
    throw InvalidInput("kl_to_fictitious: hypothesis index out of range");
  std::vector<Index> rest;
  for (Index t = 0; t < h; ++t)
    if (t != transmitted) rest.push_back(t);
  if (rest.size() == 1) {
    return Estimate{kl_divergence(model, truth, rest.front()), 0.0,
                    model.is_discrete() ? EstimatorMethod::Exact : EstimatorMethod::ClosedForm};
  }

  if (model.is_discrete()) {
    const auto& p = model.pmf().rows[truth];
    const double inv = 1.0 / static_cast<double>(rest.size());
    double kl = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x) {
      double mix = 0.0;
      for (Index t : rest) mix += model.pmf().rows[t][x];
      kl += p[x] * (std::log(p[x]) - std::log(mix * inv));
    }
    return Estimate{std::max(kl, 0.0), 0.0, EstimatorMethod::Exact};
  }

  const auto& means = model.gaussian().means;
  const bool components_equal = std::all_of(rest.begin(), rest.end(), [&](Index t) {
    return means[t] == means[rest.front()];
  });
  if (components_equal) {
    return Estimate{kl_divergence(model, truth, rest.front()), 0.0, EstimatorMethod::ClosedForm};
  }

  const double mu0 = means[truth];
  auto log_ratio = [&](double x) {
    return gaussian_log_density(x, mu0) - model.fictitious_log_likelihood(transmitted, x);
  };

  if (config.gaussian_mixture == EstimatorMethod::MonteCarlo) {
    std::mt19937_64 rng(config.mc_seed);
    std::normal_distribution<double> noise(mu0, 1.0);
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t n = 1; n <= config.mc_samples; ++n) {
      const double v = log_ratio(noise(rng));
      const double delta = v - mean;
      mean += delta / static_cast<double>(n);
      m2 += delta * (v - mean);
    }
    const double n = static_cast<double>(config.mc_samples);
    const double sd = std::sqrt(m2 / (n - 1.0));
    return Estimate{mean, config.mc_z * sd / std::sqrt(n), EstimatorMethod::MonteCarlo};
  }

  double lo = mu0;
  double hi = mu0;
  for (Index t : rest) {
    lo = std::min(lo, means[t]);
    hi = std::max(hi, means[t]);
  }
  lo -= config.quadrature_sigma_span;
  hi += config.quadrature_sigma_span;
  // Split first so that the coarse initial Simpson estimate cannot miss a peak.
  constexpr int kPanels = 64;
  const double width = (hi - lo) / kPanels;
  auto integrand = [&](double x) { return std::exp(gaussian_log_density(x, mu0)) * log_ratio(x); };
  double total = 0.0;
  for (int p = 0; p < kPanels; ++p)
    total += adaptive_simpson(integrand, lo + p * width, lo + (p + 1) * width,
                              config.quadrature_tol / kPanels, config.quadrature_max_depth);
  return Estimate{std::max(total, 0.0), 0.0, EstimatorMethod::Quadrature};
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InvalidInput("total_variation: size mismatch");
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

std::vector<Index> distinguishable_set(const LikelihoodModel& model, Index truth, double tol) {
  std::vector<Index> out;
  for (Index t = 0; t < model.hypotheses(); ++t)
    if (t != truth && kl_divergence(model, truth, t) > tol) out.push_back(t);
  return out;
}

double DivergenceProfile::non_transmitted_mean() const {
  double acc = 0.0;
  for (Index t = 0; t < hypotheses.count; ++t)
    if (t != hypotheses.transmitted) acc += average[t];
  return acc / static_cast<double>(hypotheses.count - 1);
}

DivergenceProfile divergence_profile(std::span<const LikelihoodModel> models,
                                     const PerronVector& perron, const HypothesisSet& hypotheses,
                                     const EstimatorConfig& config) {
  hypotheses.validate();
  if (models.size() != perron.entries.size())
    throw InvalidInput("divergence_profile: expected one model per agent");
  DivergenceProfile profile;
  profile.hypotheses = hypotheses;
  profile.perron = perron.entries;
  const std::size_t agents = models.size();
  for (const auto& model : models) {
    if (model.hypotheses() != hypotheses.count)
      throw InvalidInput("divergence_profile: model hypothesis count mismatch");
    std::vector<double> row(hypotheses.count);
    for (Index t = 0; t < hypotheses.count; ++t) row[t] = kl_divergence(model, hypotheses.truth, t);
    profile.per_agent.push_back(std::move(row));
    profile.per_agent_fictitious.push_back(
        kl_to_fictitious(model, hypotheses.truth, hypotheses.transmitted, config));
  }
  profile.average.assign(hypotheses.count, 0.0);
  for (Index t = 0; t < hypotheses.count; ++t) {
    std::vector<double> column(agents);
    for (std::size_t k = 0; k < agents; ++k) column[k] = profile.per_agent[k][t];
    profile.average[t] = network_average_divergence(perron, column);
  }
  std::vector<double> fict(agents);
  std::vector<double> ci(agents);
  for (std::size_t k = 0; k < agents; ++k) {
    fict[k] = profile.per_agent_fictitious[k].value;
    ci[k] = profile.per_agent_fictitious[k].ci_half_width;
  }
  profile.average_fictitious = network_average_divergence(perron, fict);
  profile.average_fictitious_ci = network_average_divergence(perron, ci);
  return profile;
}

double tie_tolerance(double ci_half_width) { return std::max(1e-9, 3.0 * ci_half_width); }

double predicted_rate_no_sa(const DivergenceProfile& profile) {
  return profile.transmitted_average() - profile.average_fictitious;
}

RegimeVerdict classify_regime_no_sa(const DivergenceProfile& profile) {
  RegimeVerdict out;
  out.strategy = StrategyKind::PartialNoSA;
  out.tie_tolerance = tie_tolerance(profile.average_fictitious_ci);
  const double raw = predicted_rate_no_sa(profile);
  out.predicted_rate = raw;
  out.quantities = {{"d_ave_tx", profile.transmitted_average()},
                    {"d_ave_complement", profile.average_fictitious}};
  const bool sharing = profile.hypotheses.truth_sharing();
  if (raw > out.tie_tolerance) {
    out.limit = Limit::ToZero;
  } else if (raw < -out.tie_tolerance) {
    out.limit = Limit::ToOne;
  } else {
    out.rule = "tie: d_ave(tx) == d_ave(complement)";
    out.margin = sharing ? -raw : raw;
    return out;
  }
  const bool to_one = out.limit == Limit::ToOne;
  out.verdict = (to_one == sharing) ? Verdict::Learn : Verdict::Mislearn;
  // Learn margins positive, mislearn margins negative.
  out.margin = sharing ? -raw : raw;
  out.rule = to_one ? "d_ave(tx) < d_ave(complement)" : "d_ave(tx) > d_ave(complement)";
  return out;
}

double sa_learn_threshold(const DivergenceProfile& profile) {
  return profile.non_transmitted_mean();
}

double sa_mislearn_threshold(const DivergenceProfile& profile, const NetworkModel& net,
                             double bound_b) {
  if (net.agents() != profile.perron.size())
    throw InvalidInput("sa_mislearn_threshold: network size mismatch");
  double penalty = 0.0;
  for (std::size_t k = 0; k < net.agents(); ++k)
    penalty += net.self_weight(k) *
               (profile.per_agent_fictitious[k].value + profile.perron[k] * bound_b);
  return profile.average_fictitious - penalty;
}

RegimeVerdict classify_regime_sa(const DivergenceProfile& profile, const NetworkModel& net,
                                 std::optional<double> bound_b) {
  if (profile.hypotheses.truth_sharing())
    throw InvalidInput("classify_regime_sa: requires theta_tx != theta0");
  RegimeVerdict out;
  out.strategy = StrategyKind::PartialSA;
  out.tie_tolerance = tie_tolerance(profile.average_fictitious_ci);
  const double d_tx = profile.transmitted_average();
  const double learn = sa_learn_threshold(profile);
  out.quantities = {{"d_ave_tx", d_tx},
                    {"d_ave_complement", profile.average_fictitious},
                    {"learn_threshold", learn}};
  std::optional<double> mislearn;
  if (bound_b) {
    mislearn = sa_mislearn_threshold(profile, net, *bound_b);
    out.quantities.emplace_back("mislearn_threshold", *mislearn);
    out.quantities.emplace_back("B", *bound_b);
  }
  if (d_tx - learn > out.tie_tolerance) {
    out.verdict = Verdict::Learn;
    out.limit = Limit::ToZero;
    out.margin = d_tx - learn;
    out.rule = "d_ave(tx) > mean of d_ave over non-transmitted hypotheses";
  } else if (mislearn && d_tx - *mislearn < -out.tie_tolerance) {
    out.verdict = Verdict::Mislearn;
    out.limit = Limit::ToOne;
    out.margin = d_tx - *mislearn;
    out.rule = "d_ave(tx) below the bounded-likelihood mislearning threshold";
  } else {
    out.rule = bound_b ? "gray region between the sufficient conditions"
                       : "gray region: bounded-likelihood constant unavailable";
  }
  return out;
}

RegimeVerdict classify_truth_sharing_sa(const DivergenceProfile& profile,
                                        std::span<const Assumption4Result> per_agent) {
  if (!profile.hypotheses.truth_sharing())
    throw InvalidInput("classify_truth_sharing_sa: requires theta_tx == theta0");
  RegimeVerdict out;
  out.strategy = StrategyKind::PartialSA;
  out.tie_tolerance = 0.0;
  double best_c = 0.0;
  bool any = false;
  for (const auto& r : per_agent) {
    if (r.holds) any = true;
    best_c = std::max(best_c, r.holds ? r.c_estimate : 0.0);
  }
  out.quantities = {{"max_clear_sighted_c", best_c}};
  if (any) {
    out.verdict = Verdict::Learn;
    out.limit = Limit::ToOne;
    out.margin = best_c > 0.0 ? best_c : std::numeric_limits<double>::min();
    out.rule = "truth sharing with a total-variation clear-sighted agent";
  } else {
    out.rule = "truth sharing without a total-variation clear-sighted agent";
  }
  return out;
}

RegimeVerdict classify_traditional(const DivergenceProfile& profile) {
  RegimeVerdict out;
  out.strategy = StrategyKind::Traditional;
  out.tie_tolerance = tie_tolerance(0.0);
  double weakest = std::numeric_limits<double>::infinity();
  for (Index t = 0; t < profile.hypotheses.count; ++t)
    if (t != profile.hypotheses.truth) weakest = std::min(weakest, profile.average[t]);
  out.quantities = {{"min_d_ave_wrong", weakest}};
  if (weakest > out.tie_tolerance) {
    out.verdict = Verdict::Learn;
    out.limit = profile.hypotheses.truth_sharing() ? Limit::ToOne : Limit::ToZero;
    out.margin = weakest;
    out.rule = "global identifiability";
  } else {
    out.rule = "some wrong hypothesis is indistinguishable network-wide";
  }
  return out;
}

Assumption3Result check_assumption_3(std::span<const LikelihoodModel> models, Index truth,
                                     const EstimatorConfig& config) {
  Assumption3Result out;
  for (std::size_t k = 0; k < models.size(); ++k) {
    const auto est = kl_to_fictitious(models[k], truth, truth, config);
    out.per_agent.push_back(est);
    const bool has_distinguishable = !distinguishable_set(models[k], truth).empty();
    const double threshold = std::max(kZeroDivergence, est.ci_half_width);
    if (!out.holds && has_distinguishable && est.value > threshold) {
      out.holds = true;
      out.witness = k;
    }
  }
  return out;
}

Assumption4Result check_assumption_4(const LikelihoodModel& model, Index truth,
                                     const Assumption4Config& config) {
  Assumption4Result out;
  out.distinguishable = distinguishable_set(model, truth);
  const std::size_t m = out.distinguishable.size();
  if (m == 0) {
    out.method = "empty-distinguishable-set";
    return out;
  }

  std::vector<double> target;
  std::vector<std::vector<double>> rows;
  if (model.is_discrete()) {
    target = model.pmf().rows[truth];
    for (Index t : out.distinguishable) rows.push_back(model.pmf().rows[t]);
  } else {
    const auto& means = model.gaussian().means;
    double lo = means[truth];
    double hi = means[truth];
    for (Index t : out.distinguishable) {
      lo = std::min(lo, means[t]);
      hi = std::max(hi, means[t]);
    }
    lo -= 10.0;
    hi += 10.0;
    const std::size_t n = config.gaussian_grid_points;
    const double dx = (hi - lo) / static_cast<double>(n - 1);
    auto density = [&](Index t, std::size_t i) {
      return std::exp(gaussian_log_density(lo + dx * static_cast<double>(i), means[t])) * dx;
    };
    target.resize(n);
    for (std::size_t i = 0; i < n; ++i) target[i] = density(truth, i);
    for (Index t : out.distinguishable) {
      std::vector<double> row(n);
      for (std::size_t i = 0; i < n; ++i) row[i] = density(t, i);
      rows.push_back(std::move(row));
    }
  }

  MixtureTv objective{target, {}};
  for (const auto& r : rows) objective.components.emplace_back(r);

  if (m == 1) {
    out.c_estimate = total_variation(target, rows.front());
    out.minimizer = {1.0};
    out.method = "exact-vertex";
  } else {
    const bool coarse = model.is_gaussian();
    const auto best = minimize_mixture_tv(objective, config, coarse ? 4 : config.random_starts,
                                          coarse ? 200 : config.iterations);
    out.c_estimate = best.value;
    out.minimizer = best.alpha;
    out.method = "optimized";
  }
  if (model.is_gaussian()) {
    // Finite mixtures of distinct-mean unit Gaussians never reproduce another
    // unit Gaussian, so the condition holds whenever the set is non-empty.
    out.holds = true;
    out.method = "analytic-gaussian";
  } else {
    out.holds = out.c_estimate > config.tolerance;
  }
  return out;
}

std::optional<double> likelihood_bound_B(std::span<const LikelihoodModel> models,
                                         Index transmitted) {
  double bound = 0.0;
  for (const auto& model : models) {
    if (model.is_gaussian()) return std::nullopt;
    const auto& rows = model.pmf().rows;
    for (std::size_t x = 0; x < model.alphabet_size(); ++x)
      for (Index a = 0; a < rows.size(); ++a)
        for (Index b = a + 1; b < rows.size(); ++b) {
          if (a == transmitted || b == transmitted) continue;
          bound = std::max(bound, std::abs(std::log(rows[a][x]) - std::log(rows[b][x])));
        }
  }
  return bound;
}

}  // namespace psl
