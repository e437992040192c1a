#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "psl/models.hpp"
#include "psl/network.hpp"
#include "psl/strategies.hpp"

namespace psl {

enum class EstimatorMethod { Exact, ClosedForm, Quadrature, MonteCarlo };
std::string_view to_string(EstimatorMethod method);

struct EstimatorConfig {
  // How KL(Gaussian || Gaussian mixture) is estimated. Discrete models are
  // always summed exactly; Gaussian-to-Gaussian uses the closed form.
  EstimatorMethod gaussian_mixture = EstimatorMethod::Quadrature;
  double quadrature_tol = 1e-9;
  double quadrature_sigma_span = 10.0;
  int quadrature_max_depth = 50;
  std::size_t mc_samples = 1'000'000;
  std::uint64_t mc_seed = 0x5eed;
  double mc_z = 2.5758293035489004;  // two-sided 99%
};

struct Estimate {
  double value = 0.0;
  double ci_half_width = 0.0;  // 0 for exact and closed-form values
  EstimatorMethod method = EstimatorMethod::Exact;
};

// Integral of f over [a, b] by adaptive Simpson with absolute tolerance tol.
// Throws NumericalError when the recursion depth is exhausted.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth = 50);

// KL(L(.|truth) || L(.|theta)).
double kl_divergence(const LikelihoodModel& model, Index truth, Index theta);

// KL from L(.|truth) to the uniform mixture of L(.|tau), tau != transmitted.
Estimate kl_to_fictitious(const LikelihoodModel& model, Index truth, Index transmitted,
                          const EstimatorConfig& config = {});

// 0.5 * sum |p - q|.
double total_variation(std::span<const double> p, std::span<const double> q);

// Hypotheses tau with d_k(tau) > tol (the distinguishable set of the agent).
std::vector<Index> distinguishable_set(const LikelihoodModel& model, Index truth,
                                       double tol = 1e-12);

struct DivergenceProfile {
  HypothesisSet hypotheses;
  std::vector<double> perron;                      // v_k
  std::vector<std::vector<double>> per_agent;      // d_k(theta)
  std::vector<Estimate> per_agent_fictitious;      // d_k(complement of theta_tx)
  std::vector<double> average;                     // d_ave(theta)
  double average_fictitious = 0.0;                 // d_ave(complement of theta_tx)
  double average_fictitious_ci = 0.0;              // sum_k v_k * CI_k

  double transmitted_average() const { return average[hypotheses.transmitted]; }
  // (1/(H-1)) sum_{tau != tx} d_ave(tau)
  double non_transmitted_mean() const;
};

DivergenceProfile divergence_profile(std::span<const LikelihoodModel> models,
                                     const PerronVector& perron, const HypothesisSet& hypotheses,
                                     const EstimatorConfig& config = {});

enum class Verdict { Learn, Mislearn, Indeterminate };
// Predicted limit of mu_k(theta_tx).
enum class Limit { ToZero, ToOne, Unknown };
std::string_view to_string(Verdict verdict);
std::string_view to_string(Limit limit);

struct RegimeVerdict {
  StrategyKind strategy = StrategyKind::PartialNoSA;
  Verdict verdict = Verdict::Indeterminate;
  Limit limit = Limit::Unknown;
  // Positive for Learn, negative for Mislearn; distance to the deciding
  // threshold. Zero in the gray region.
  double margin = 0.0;
  double tie_tolerance = 0.0;
  std::optional<double> predicted_rate;
  std::string rule;
  std::vector<std::pair<std::string, double>> quantities;
};

// |margin| <= max(1e-9, 3 * CI) is treated as a tie.
double tie_tolerance(double ci_half_width);

RegimeVerdict classify_regime_no_sa(const DivergenceProfile& profile);

// Sufficient conditions for the self-aware strategy when theta_tx != theta0.
// bound_b is the bounded-likelihood constant, absent when it does not exist.
RegimeVerdict classify_regime_sa(const DivergenceProfile& profile, const NetworkModel& net,
                                 std::optional<double> bound_b);

// Upper threshold: (1/(H-1)) sum_{tau != tx} d_ave(tau).
double sa_learn_threshold(const DivergenceProfile& profile);
// Lower threshold: d_ave(complement) - sum_k a_kk (d_k(complement) + v_k B).
double sa_mislearn_threshold(const DivergenceProfile& profile, const NetworkModel& net,
                             double bound_b);

// d_ave(theta_tx) - d_ave(complement): almost-sure slope of
// (1/i) ln[mu(theta) / mu(theta_tx)] under PartialNoSA.
double predicted_rate_no_sa(const DivergenceProfile& profile);

struct Assumption3Result {
  bool holds = false;
  std::optional<std::size_t> witness;
  std::vector<Estimate> per_agent;  // d_k(complement of theta0)
};

Assumption3Result check_assumption_3(std::span<const LikelihoodModel> models, Index truth,
                                     const EstimatorConfig& config = {});

struct Assumption4Config {
  double tolerance = 1e-6;
  std::size_t random_starts = 32;
  std::size_t iterations = 1500;
  std::size_t grid_resolution_2d = 2000;  // |distinguishable| == 2
  std::size_t grid_resolution_3d = 120;   // |distinguishable| == 3
  std::size_t gaussian_grid_points = 4001;
  std::uint64_t seed = 0xa4a4;
};

struct Assumption4Result {
  bool holds = false;
  double c_estimate = 0.0;                 // min TV found over the simplex
  std::vector<Index> distinguishable;
  std::vector<double> minimizer;           // convex weights over `distinguishable`
  std::string method;                      // "exact-vertex", "optimized", "analytic-gaussian"
};

Assumption4Result check_assumption_4(const LikelihoodModel& model, Index truth,
                                     const Assumption4Config& config = {});

// Truth sharing under self-awareness: Learn when some agent satisfies the
// total-variation clear-sightedness condition, Indeterminate otherwise.
RegimeVerdict classify_truth_sharing_sa(const DivergenceProfile& profile,
                                        std::span<const Assumption4Result> per_agent);

// Traditional pooling: learns whenever every wrong hypothesis has positive
// network-average divergence (global identifiability).
RegimeVerdict classify_traditional(const DivergenceProfile& profile);

// max over agents, symbols and tau, tau' != tx of |ln L(x|tau) - ln L(x|tau')|.
// Absent if any model is Gaussian.
std::optional<double> likelihood_bound_B(std::span<const LikelihoodModel> models,
                                         Index transmitted);

}  // namespace psl
