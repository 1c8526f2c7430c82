#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "graphrank/graph.hpp"
#include "graphrank/rng.hpp"

namespace graphrank {

/// Erdős–Rényi G(n, p): every unordered pair becomes an edge independently.
inline Graph erdos_renyi(std::string id, std::size_t n, double p, Rng& rng) {
  Graph g;
  g.id = std::move(id);
  g.num_nodes = n;
  for (NodeIndex u = 0; u < n; ++u) {
    for (NodeIndex v = u + 1; v < n; ++v) {
      if (rng.uniform() < p) g.edges.emplace_back(u, v);
    }
  }
  return g;
}

namespace detail {

inline std::string numbered_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%05zu", prefix, i);
  return buf;
}

/// Featureless ER graphs with node counts uniform in [min_nodes, max_nodes]
/// and per-graph edge probability uniform in [0.1, 0.5].
template <typename TargetFn>
std::vector<Graph> generate_er_dataset(const char* prefix, std::size_t n_graphs,
                                       std::size_t min_nodes, std::size_t max_nodes,
                                       std::uint64_t seed, TargetFn target) {
  if (min_nodes > max_nodes) {
    throw ValidationError("generator: min_nodes > max_nodes");
  }
  Rng rng(seed);
  std::vector<Graph> out;
  out.reserve(n_graphs);
  for (std::size_t i = 0; i < n_graphs; ++i) {
    const std::size_t n = min_nodes + rng.index(max_nodes - min_nodes + 1);
    const double p = rng.uniform(0.1, 0.5);
    Graph g = erdos_renyi(numbered_id(prefix, i), n, p, rng);
    g.target = target(g);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace detail

/// Graphs labeled with their exact triangle count.
inline std::vector<Graph> generate_triangles_dataset(std::size_t n_graphs,
                                                     std::size_t min_nodes = 3,
                                                     std::size_t max_nodes = 85,
                                                     std::uint64_t seed = 0) {
  if (min_nodes < 3) throw ValidationError("triangles dataset: min_nodes must be >= 3");
  return detail::generate_er_dataset("tri", n_graphs, min_nodes, max_nodes, seed,
                                     [](const Graph& g) {
                                       return static_cast<double>(count_triangles(g));
                                     });
}

/// Graphs labeled with their undirected edge count; a task message passing
/// can solve, useful for desk-scale learnability checks.
inline std::vector<Graph> generate_edgecount_dataset(std::size_t n_graphs,
                                                     std::size_t min_nodes = 1,
                                                     std::size_t max_nodes = 30,
                                                     std::uint64_t seed = 0) {
  if (min_nodes < 1) throw ValidationError("edgecount dataset: min_nodes must be >= 1");
  return detail::generate_er_dataset("edge", n_graphs, min_nodes, max_nodes, seed,
                                     [](const Graph& g) {
                                       return static_cast<double>(g.edges.size());
                                     });
}

}  // namespace graphrank
