#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <variant>
#include <vector>

namespace psl {

// Hypothesis indices are 0-based inside the library. Config files and CLI
// flags use 1-based indices and convert at the boundary.
using Index = std::size_t;

struct HypothesisSet {
  std::size_t count = 0;
  Index truth = 0;
  Index transmitted = 0;

  // Throws ValidationError unless count >= 2 and both indices are in range.
  void validate() const;
  bool truth_sharing() const { return truth == transmitted; }
};

// Numerically stable ln(sum(exp(x))). For a single element returns it exactly.
double log_sum_exp(std::span<const double> values);

// A point of the probability simplex stored as natural-log entries.
class BeliefVector {
 public:
  BeliefVector() = default;

  static BeliefVector uniform(std::size_t count);
  // Normalizes; throws InvalidInput on non-positive or non-finite entries.
  static BeliefVector from_probabilities(std::span<const double> probabilities);
  // Normalizes by subtracting the log-sum-exp of the entries.
  static BeliefVector from_log_unnormalized(std::vector<double> log_entries);
  // Takes entries as-is; caller guarantees they are already normalized.
  static BeliefVector from_log_normalized(std::vector<double> log_entries);

  std::size_t size() const { return log_.size(); }
  double log(Index theta) const { return log_[theta]; }
  double probability(Index theta) const;
  std::span<const double> log_entries() const { return log_; }
  std::vector<double> probabilities() const;

  // |sum(exp(entries)) - 1|.
  double simplex_error() const;

  friend bool operator==(const BeliefVector&, const BeliefVector&) = default;

 private:
  explicit BeliefVector(std::vector<double> log_entries)
      : log_(std::move(log_entries)) {}

  std::vector<double> log_;
};

struct Symbol {
  std::size_t index = 0;
  friend bool operator==(Symbol, Symbol) = default;
};

// A discrete symbol index or a real scalar, matching the model variant.
using Observation = std::variant<Symbol, double>;

// Rows are hypotheses, columns are symbols. Every cell strictly positive.
struct DiscretePmf {
  std::vector<std::vector<double>> rows;
  friend bool operator==(const DiscretePmf&, const DiscretePmf&) = default;
};

// Unit-variance Gaussian means, one per hypothesis.
struct GaussianMeans {
  std::vector<double> means;
  friend bool operator==(const GaussianMeans&, const GaussianMeans&) = default;
};

class LikelihoodModel {
 public:
  static constexpr double kDefaultMinCell = 1e-12;
  static constexpr double kRowSumTolerance = 1e-12;

  // Throws ValidationError: rows not summing to 1, cells below min_cell,
  // ragged rows, fewer than two hypotheses.
  explicit LikelihoodModel(DiscretePmf pmf, double min_cell = kDefaultMinCell);
  explicit LikelihoodModel(GaussianMeans gaussian);

  bool is_discrete() const { return std::holds_alternative<DiscretePmf>(family_); }
  bool is_gaussian() const { return !is_discrete(); }
  std::size_t hypotheses() const;
  // Alphabet size for discrete models, 0 for Gaussian ones.
  std::size_t alphabet_size() const;

  const DiscretePmf& pmf() const { return std::get<DiscretePmf>(family_); }
  const GaussianMeans& gaussian() const { return std::get<GaussianMeans>(family_); }

  // ln L(x | theta). Throws InvalidInput on variant mismatch or bad index.
  double log_likelihood(Index theta, const Observation& x) const;
  // Fills out[theta] = ln L(x | theta) for all hypotheses.
  void log_likelihoods(const Observation& x, std::span<double> out) const;

  // Deterministic i.i.d. draw from L(. | truth).
  Observation sample(Index truth, std::mt19937_64& rng) const;

  // ln[(1/(H-1)) sum_{tau != transmitted} L(x | tau)], evaluated in log domain.
  double fictitious_log_likelihood(Index transmitted, const Observation& x) const;

  friend bool operator==(const LikelihoodModel&, const LikelihoodModel&) = default;

 private:
  void check_index(Index theta) const;

  std::variant<DiscretePmf, GaussianMeans> family_;
  std::vector<std::vector<double>> log_rows_;  // cached ln of pmf cells
};

double log_likelihood(const LikelihoodModel& model, Index theta, const Observation& x);
Observation sample_observation(const LikelihoodModel& model, Index truth, std::mt19937_64& rng);
double fictitious_log_likelihood(const LikelihoodModel& model, Index transmitted,
                                 const Observation& x);

}  // namespace psl
