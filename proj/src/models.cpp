#include "psl/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "psl/errors.hpp"

namespace psl {

namespace {

constexpr double kHalfLogTwoPi = 0.91893853320467274178;  // ln(sqrt(2 pi))

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::runtime_error([&] {
        std::string msg = "validation failed";
        for (const auto& v : violations) msg += "\n  - " + v;
        return msg;
      }()),
      violations_(std::move(violations)) {}

void HypothesisSet::validate() const {
  std::vector<std::string> errors;
  if (count < 2) errors.push_back("hypotheses: must be >= 2, got " + std::to_string(count));
  if (truth >= count) errors.push_back("theta0: must be in [1, " + std::to_string(count) + "]");
  if (transmitted >= count)
    errors.push_back("theta_tx: must be in [1, " + std::to_string(count) + "]");
  if (!errors.empty()) throw ValidationError(std::move(errors));
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double peak = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - peak);
  return peak + std::log(acc);
}

BeliefVector BeliefVector::uniform(std::size_t count) {
  if (count == 0) throw InvalidInput("belief vector needs at least one entry");
  return BeliefVector(std::vector<double>(count, -std::log(static_cast<double>(count))));
}

BeliefVector BeliefVector::from_probabilities(std::span<const double> probabilities) {
  std::vector<double> logs;
  logs.reserve(probabilities.size());
  for (double p : probabilities) {
    if (!(p > 0.0) || !std::isfinite(p))
      throw InvalidInput("belief entries must be finite and strictly positive");
    logs.push_back(std::log(p));
  }
  return from_log_unnormalized(std::move(logs));
}

BeliefVector BeliefVector::from_log_unnormalized(std::vector<double> log_entries) {
  if (log_entries.empty()) throw InvalidInput("belief vector needs at least one entry");
  const double norm = log_sum_exp(log_entries);
  if (!std::isfinite(norm)) throw InvalidInput("belief vector has no finite mass");
  for (double& v : log_entries) v -= norm;
  return BeliefVector(std::move(log_entries));
}

BeliefVector BeliefVector::from_log_normalized(std::vector<double> log_entries) {
  return BeliefVector(std::move(log_entries));
}

double BeliefVector::probability(Index theta) const { return std::exp(log_[theta]); }

std::vector<double> BeliefVector::probabilities() const {
  std::vector<double> out(log_.size());
  std::transform(log_.begin(), log_.end(), out.begin(), [](double v) { return std::exp(v); });
  return out;
}

double BeliefVector::simplex_error() const {
  double total = 0.0;
  for (double v : log_) total += std::exp(v);
  return std::abs(total - 1.0);
}

LikelihoodModel::LikelihoodModel(DiscretePmf pmf, double min_cell) {
  std::vector<std::string> errors;
  if (pmf.rows.size() < 2) errors.push_back("pmf: needs at least 2 hypothesis rows");
  const std::size_t width = pmf.rows.empty() ? 0 : pmf.rows.front().size();
  if (width == 0) errors.push_back("pmf: rows must be non-empty");
  for (std::size_t r = 0; r < pmf.rows.size(); ++r) {
    const auto& row = pmf.rows[r];
    const std::string where = "pmf[" + std::to_string(r) + "]";
    if (row.size() != width) {
      errors.push_back(where + ": expected " + std::to_string(width) + " symbols, got " +
                       std::to_string(row.size()));
      continue;
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!std::isfinite(row[c]) || row[c] < min_cell)
        errors.push_back(where + "[" + std::to_string(c) + "]: cell must be >= " +
                         std::to_string(min_cell));
      sum += row[c];
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance)
      errors.push_back(where + ": row must sum to 1 (got " + std::to_string(sum) + ")");
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));

  log_rows_.reserve(pmf.rows.size());
  for (const auto& row : pmf.rows) {
    std::vector<double> logs(row.size());
    std::transform(row.begin(), row.end(), logs.begin(), [](double p) { return std::log(p); });
    log_rows_.push_back(std::move(logs));
  }
  family_ = std::move(pmf);
}

LikelihoodModel::LikelihoodModel(GaussianMeans gaussian) {
  std::vector<std::string> errors;
  if (gaussian.means.size() < 2) errors.push_back("means: needs at least 2 hypotheses");
  for (std::size_t i = 0; i < gaussian.means.size(); ++i)
    if (!std::isfinite(gaussian.means[i]))
      errors.push_back("means[" + std::to_string(i) + "]: must be finite");
  if (!errors.empty()) throw ValidationError(std::move(errors));
  family_ = std::move(gaussian);
}

std::size_t LikelihoodModel::hypotheses() const {
  return is_discrete() ? pmf().rows.size() : gaussian().means.size();
}

std::size_t LikelihoodModel::alphabet_size() const {
  return is_discrete() ? pmf().rows.front().size() : 0;
}

void LikelihoodModel::check_index(Index theta) const {
  if (theta >= hypotheses())
    throw InvalidInput("hypothesis index " + std::to_string(theta) + " out of range");
}

double LikelihoodModel::log_likelihood(Index theta, const Observation& x) const {
  check_index(theta);
  if (is_discrete()) {
    const auto* symbol = std::get_if<Symbol>(&x);
    if (symbol == nullptr) throw InvalidInput("discrete model expects a symbol observation");
    if (symbol->index >= alphabet_size())
      throw InvalidInput("symbol " + std::to_string(symbol->index) + " outside alphabet");
    return log_rows_[theta][symbol->index];
  }
  const auto* value = std::get_if<double>(&x);
  if (value == nullptr) throw InvalidInput("Gaussian model expects a real observation");
  const double delta = *value - gaussian().means[theta];
  return -kHalfLogTwoPi - 0.5 * delta * delta;
}

void LikelihoodModel::log_likelihoods(const Observation& x, std::span<double> out) const {
  if (out.size() != hypotheses()) throw InvalidInput("output span size mismatch");
  for (Index t = 0; t < out.size(); ++t) out[t] = log_likelihood(t, x);
}

Observation LikelihoodModel::sample(Index truth, std::mt19937_64& rng) const {
  check_index(truth);
  if (is_gaussian()) {
    std::normal_distribution<double> noise(gaussian().means[truth], 1.0);
    return noise(rng);
  }
  const auto& row = pmf().rows[truth];
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double cumulative = 0.0;
  for (std::size_t s = 0; s + 1 < row.size(); ++s) {
    cumulative += row[s];
    if (u < cumulative) return Symbol{s};
  }
  return Symbol{row.size() - 1};
}

double LikelihoodModel::fictitious_log_likelihood(Index transmitted, const Observation& x) const {
  check_index(transmitted);
  const std::size_t h = hypotheses();
  std::vector<double> terms;
  terms.reserve(h - 1);
  for (Index t = 0; t < h; ++t)
    if (t != transmitted) terms.push_back(log_likelihood(t, x));
  if (terms.size() == 1) return terms.front();
  return log_sum_exp(terms) - std::log(static_cast<double>(h - 1));
}

double log_likelihood(const LikelihoodModel& model, Index theta, const Observation& x) {
  return model.log_likelihood(theta, x);
}

Observation sample_observation(const LikelihoodModel& model, Index truth, std::mt19937_64& rng) {
  return model.sample(truth, rng);
}

double fictitious_log_likelihood(const LikelihoodModel& model, Index transmitted,
                                 const Observation& x) {
  return model.fictitious_log_likelihood(transmitted, x);
}

}  // namespace psl
