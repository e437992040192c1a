#include "psl/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "psl/errors.hpp"
#include "psl/random.hpp"

namespace psl {

namespace {

// Nodes reachable from `start` following edges with positive weight.
// forward: l -> k when weights(l, k) > 0.
std::vector<bool> reachable(const SquareMatrix& weights, std::size_t start, bool forward) {
  const std::size_t n = weights.size();
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    const std::size_t node = stack.back();
    stack.pop_back();
    for (std::size_t other = 0; other < n; ++other) {
      const double w = forward ? weights(node, other) : weights(other, node);
      if (w > 0.0 && !seen[other]) {
        seen[other] = true;
        stack.push_back(other);
      }
    }
  }
  return seen;
}

std::size_t parse_size_suffix(const std::string& name, const std::string& prefix) {
  const std::string digits = name.substr(prefix.size());
  if (digits.empty() || !std::all_of(digits.begin(), digits.end(), ::isdigit))
    throw ValidationError("topology.preset: unknown preset '" + name + "'");
  const auto n = static_cast<std::size_t>(std::stoul(digits));
  if (n == 0) throw ValidationError("topology.preset: '" + name + "' needs at least one agent");
  return n;
}

}  // namespace

NetworkModel::NetworkModel(SquareMatrix weights) : weights_(std::move(weights)) {
  const std::size_t n = weights_.size();
  if (n == 0) throw TopologyError("network: needs at least one agent");
  std::vector<std::string> errors;
  for (std::size_t k = 0; k < n; ++k) {
    double column = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      const double w = weights_(l, k);
      if (!std::isfinite(w) || w < 0.0)
        errors.push_back("weights[" + std::to_string(l) + "][" + std::to_string(k) +
                         "]: must be finite and nonnegative");
      column += w;
    }
    if (std::abs(column - 1.0) > kColumnSumTolerance)
      errors.push_back("weights column " + std::to_string(k) + ": must sum to 1 (got " +
                       std::to_string(column) + ")");
  }
  if (!errors.empty()) throw TopologyError(std::move(errors));
  if (!verify_strongly_connected(weights_))
    throw ConnectivityError("network: graph is not strongly connected");
  bool any_self_loop = false;
  for (std::size_t k = 0; k < n; ++k) any_self_loop = any_self_loop || weights_(k, k) > 0.0;
  if (!any_self_loop) throw TopologyError("network: needs at least one positive self-loop");

  in_neighbors_.resize(n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l)
      if (weights_(l, k) > 0.0) in_neighbors_[k].push_back(l);
}

bool NetworkModel::all_self_loops_positive() const {
  for (std::size_t k = 0; k < agents(); ++k)
    if (!(weights_(k, k) > 0.0)) return false;
  return true;
}

NetworkModel build_averaging_matrix(const Adjacency& adjacency, double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw ValidationError("lambda: must lie in the open interval (0, 1)");
  const std::size_t n = adjacency.size();
  if (n == 0) throw TopologyError("adjacency: needs at least one agent");
  std::vector<std::string> errors;
  for (std::size_t l = 0; l < n; ++l) {
    if (adjacency[l].size() != n) {
      errors.push_back("adjacency row " + std::to_string(l) + ": expected " +
                       std::to_string(n) + " entries");
      continue;
    }
    if (!adjacency[l][l]) errors.push_back("adjacency: agent " + std::to_string(l) +
                                           " is missing its self-loop");
  }
  if (!errors.empty()) throw TopologyError(std::move(errors));

  SquareMatrix weights(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t neighbors = 0;
    for (std::size_t l = 0; l < n; ++l)
      if (l != k && adjacency[l][k]) ++neighbors;
    if (neighbors == 0) {
      weights(k, k) = 1.0;
      continue;
    }
    weights(k, k) = lambda;
    const double share = (1.0 - lambda) / static_cast<double>(neighbors);
    for (std::size_t l = 0; l < n; ++l)
      if (l != k && adjacency[l][k]) weights(l, k) = share;
  }
  if (!verify_strongly_connected(weights))
    throw ConnectivityError("adjacency: graph is not strongly connected");
  return NetworkModel(std::move(weights));
}

bool verify_strongly_connected(const SquareMatrix& weights) {
  const std::size_t n = weights.size();
  if (n == 0) return false;
  const auto forward = reachable(weights, 0, true);
  const auto backward = reachable(weights, 0, false);
  return std::all_of(forward.begin(), forward.end(), [](bool b) { return b; }) &&
         std::all_of(backward.begin(), backward.end(), [](bool b) { return b; });
}

bool verify_strongly_connected(const NetworkModel& net) {
  return verify_strongly_connected(net.weights());
}

PerronVector perron_vector(const NetworkModel& net, double tol, std::size_t max_iters) {
  const std::size_t n = net.agents();
  const auto& a = net.weights();
  std::vector<double> v(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  double residual = 0.0;
  for (std::size_t iter = 1; iter <= max_iters; ++iter) {
    for (std::size_t l = 0; l < n; ++l) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += a(l, k) * v[k];
      next[l] = acc;
    }
    const double total = std::accumulate(next.begin(), next.end(), 0.0);
    residual = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      next[l] /= total;
      residual = std::max(residual, std::abs(next[l] - v[l]));
    }
    v.swap(next);
    if (residual <= tol) {
      // Residual of the returned vector itself.
      double r = 0.0;
      for (std::size_t l = 0; l < n; ++l) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += a(l, k) * v[k];
        r = std::max(r, std::abs(acc - v[l]));
      }
      if (r <= tol && std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0; }))
        return PerronVector{std::move(v), r, iter};
    }
  }
  throw NumericalError("perron_vector: power iteration did not converge (residual " +
                           std::to_string(residual) + ")",
                       residual);
}

double network_average_divergence(const PerronVector& v, std::span<const double> per_agent) {
  if (v.entries.size() != per_agent.size())
    throw InvalidInput("network_average_divergence: expected " +
                       std::to_string(v.entries.size()) + " per-agent values, got " +
                       std::to_string(per_agent.size()));
  double acc = 0.0;
  for (std::size_t k = 0; k < per_agent.size(); ++k) acc += v.entries[k] * per_agent[k];
  return acc;
}

Adjacency adjacency_from_edges(std::size_t agents,
                               std::span<const std::pair<std::size_t, std::size_t>> edges) {
  Adjacency adjacency(agents, std::vector<bool>(agents, false));
  for (std::size_t k = 0; k < agents; ++k) adjacency[k][k] = true;
  for (const auto& [from, to] : edges) {
    if (from >= agents || to >= agents)
      throw ValidationError("topology.edges: edge (" + std::to_string(from + 1) + ", " +
                            std::to_string(to + 1) + ") references an unknown agent");
    adjacency[from][to] = true;
  }
  return adjacency;
}

std::vector<std::pair<std::size_t, std::size_t>> edges_from_adjacency(const Adjacency& adjacency) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t l = 0; l < adjacency.size(); ++l)
    for (std::size_t k = 0; k < adjacency[l].size(); ++k)
      if (l != k && adjacency[l][k]) edges.emplace_back(l, k);
  return edges;
}

Adjacency random_strongly_connected(std::size_t agents, double extra_edge_probability,
                                    std::uint64_t seed) {
  std::uint64_t state = seed;
  std::vector<std::size_t> order(agents);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = agents; i > 1; --i) {
    const auto j = static_cast<std::size_t>(splitmix64(state) % i);
    std::swap(order[i - 1], order[j]);
  }
  Adjacency adjacency(agents, std::vector<bool>(agents, false));
  for (std::size_t k = 0; k < agents; ++k) adjacency[k][k] = true;
  // A random Hamiltonian cycle guarantees strong connectivity.
  for (std::size_t i = 0; i < agents && agents > 1; ++i)
    adjacency[order[i]][order[(i + 1) % agents]] = true;
  for (std::size_t l = 0; l < agents; ++l)
    for (std::size_t k = 0; k < agents; ++k)
      if (l != k && splitmix_unit(state) < extra_edge_probability) adjacency[l][k] = true;
  return adjacency;
}

Adjacency topology_preset(const std::string& name) {
  if (name == "paper-fig4-like") return random_strongly_connected(10, 0.2, kFig4LikeSeed);
  if (name.rfind("complete-", 0) == 0) {
    const std::size_t n = parse_size_suffix(name, "complete-");
    return Adjacency(n, std::vector<bool>(n, true));
  }
  if (name.rfind("ring-", 0) == 0) {
    const std::size_t n = parse_size_suffix(name, "ring-");
    Adjacency adjacency(n, std::vector<bool>(n, false));
    for (std::size_t k = 0; k < n; ++k) {
      adjacency[k][k] = true;
      adjacency[k][(k + 1) % n] = true;
    }
    return adjacency;
  }
  throw ValidationError("topology.preset: unknown preset '" + name + "'");
}

bool is_topology_preset(const std::string& name) {
  try {
    topology_preset(name);
    return true;
  } catch (const ValidationError&) {
    return false;
  }
}

}  // namespace psl
