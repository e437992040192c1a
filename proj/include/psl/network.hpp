#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace psl {

// Dense square matrix, row-major.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  std::size_t size() const { return n_; }
  double& operator()(std::size_t row, std::size_t col) { return data_[row * n_ + col]; }
  double operator()(std::size_t row, std::size_t col) const { return data_[row * n_ + col]; }

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

using Adjacency = std::vector<std::vector<bool>>;  // adjacency[l][k]: l is an in-neighbor of k

// Directed weighted graph with a left-stochastic combination matrix: column k
// holds agent k's weights over its in-neighbors, weight(l, k) = a_{lk}.
class NetworkModel {
 public:
  static constexpr double kColumnSumTolerance = 1e-12;

  NetworkModel() = default;
  // Validates nonnegativity, column sums, strong connectivity and the
  // presence of at least one positive self-loop.
  explicit NetworkModel(SquareMatrix weights);

  std::size_t agents() const { return weights_.size(); }
  double weight(std::size_t from, std::size_t to) const { return weights_(from, to); }
  double self_weight(std::size_t k) const { return weights_(k, k); }
  const SquareMatrix& weights() const { return weights_; }

  // In-neighbors of k (positive weight), including k itself when a_kk > 0.
  const std::vector<std::size_t>& in_neighbors(std::size_t k) const { return in_neighbors_[k]; }
  bool all_self_loops_positive() const;

 private:
  SquareMatrix weights_;
  std::vector<std::vector<std::size_t>> in_neighbors_;
};

// Positive unit-sum right eigenvector of A at eigenvalue 1.
struct PerronVector {
  std::vector<double> entries;
  double residual = 0.0;  // ||A v - v||_inf at return
  std::size_t iterations = 0;
};

// a_kk = lambda, a_lk = (1 - lambda) / n_k for in-neighbors l != k. A lone
// agent (K = 1) keeps all of its weight.
NetworkModel build_averaging_matrix(const Adjacency& adjacency, double lambda);

bool verify_strongly_connected(const SquareMatrix& weights);
bool verify_strongly_connected(const NetworkModel& net);

PerronVector perron_vector(const NetworkModel& net, double tol = 1e-12,
                           std::size_t max_iters = 100000);

double network_average_divergence(const PerronVector& v, std::span<const double> per_agent);

// Directed edge list helpers. Edges are (from, to), 0-based; self-loops are
// added for every node.
Adjacency adjacency_from_edges(std::size_t agents,
                               std::span<const std::pair<std::size_t, std::size_t>> edges);
std::vector<std::pair<std::size_t, std::size_t>> edges_from_adjacency(const Adjacency& adjacency);

// Named topology presets.
//  "paper-fig4-like": randomly generated strongly-connected 10-node digraph
//      with self-loops, fixed by kFig4LikeSeed. An approximation: the exact
//      edge set of the reference drawing is not available.
//  "complete-<K>":   fully connected K-node graph.
//  "ring-<K>":       directed cycle 1 -> 2 -> ... -> K -> 1.
inline constexpr std::uint64_t kFig4LikeSeed = 20210412;
Adjacency random_strongly_connected(std::size_t agents, double extra_edge_probability,
                                    std::uint64_t seed);
Adjacency topology_preset(const std::string& name);
bool is_topology_preset(const std::string& name);

}  // namespace psl
