#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "graphrank/errors.hpp"
#include "graphrank/tensor.hpp"

namespace graphrank {

using NodeIndex = std::size_t;

/// Undirected simple graph with optional node features and an optional
/// scalar target (the utility a ranking is learned against). Immutable
/// after construction by convention; every operation takes it by const ref.
struct Graph {
  std::string id;
  std::size_t num_nodes = 0;
  std::vector<std::pair<NodeIndex, NodeIndex>> edges;  // undirected, stored once
  std::optional<Tensor> node_features;                 // num_nodes x n
  std::optional<double> target;

  std::size_t feature_dim() const {
    return node_features ? node_features->cols() : 0;
  }

  void validate() const {
    std::set<std::pair<NodeIndex, NodeIndex>> seen;
    for (const auto& [u, v] : edges) {
      if (u >= num_nodes || v >= num_nodes) {
        throw ValidationError("graph '" + id + "': edge (" + std::to_string(u) + "," +
                              std::to_string(v) + ") exceeds num_nodes " +
                              std::to_string(num_nodes));
      }
      if (u == v) {
        throw ValidationError("graph '" + id + "': self-loop at node " + std::to_string(u));
      }
      const auto key = std::minmax(u, v);
      if (!seen.insert(key).second) {
        throw ValidationError("graph '" + id + "': duplicate edge (" + std::to_string(key.first) +
                              "," + std::to_string(key.second) + ")");
      }
    }
    if (node_features) {
      if (node_features->ndim() != 2 || node_features->rows() != num_nodes) {
        throw ValidationError("graph '" + id + "': feature matrix " +
                              node_features->shape_str() + " does not have " +
                              std::to_string(num_nodes) + " rows");
      }
    }
  }

  std::vector<std::vector<NodeIndex>> adjacency() const {
    std::vector<std::vector<NodeIndex>> adj(num_nodes);
    for (const auto& [u, v] : edges) {
      adj[u].push_back(v);
      adj[v].push_back(u);
    }
    for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());
    return adj;
  }
};

/// Many graphs concatenated into one node-feature matrix with per-node
/// segment ids, so a batch needs exactly one embedding pass per distinct
/// graph. Directed edge arrays hold both directions of every undirected
/// edge, with node indices offset into the concatenation.
struct GraphBatch {
  Tensor node_features;               // total_nodes x dim
  std::vector<NodeIndex> edge_src;    // directed: both directions present
  std::vector<NodeIndex> edge_dst;
  std::vector<std::size_t> segment_ids;  // per node, non-decreasing
  std::size_t graph_count = 0;
  std::vector<std::string> graph_ids;
  std::vector<std::size_t> node_offsets;  // graph i occupies [offsets[i], offsets[i+1])

  std::size_t total_nodes() const { return segment_ids.size(); }

  /// Undirected degree of every node in the batch.
  std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> deg(total_nodes(), 0);
    for (NodeIndex d : edge_dst) ++deg[d];
    return deg;
  }
};

/// Index pair (a, b) into a batch meaning graph a is preferred over graph b
/// with the given soft label (1 = a preferred).
struct PreferencePair {
  std::size_t a = 0;
  std::size_t b = 0;
  double label = 1.0;
};

/// Concatenates graphs into a single batch encoding. Node order within each
/// graph is preserved; graphs without features receive the constant scalar
/// feature 1.0 per node. All graphs must agree on feature dimensionality.
inline GraphBatch build_batch(const std::vector<const Graph*>& graphs) {
  GraphBatch batch;
  batch.graph_count = graphs.size();

  bool any_features = false;
  std::size_t dim = 1;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const Graph& g = *graphs[i];
    if (g.node_features) {
      if (!any_features) {
        any_features = true;
        dim = g.node_features->cols();
      } else if (g.node_features->cols() != dim) {
        throw ValidationError("build_batch: graph '" + g.id + "' has feature dim " +
                              std::to_string(g.node_features->cols()) + ", expected " +
                              std::to_string(dim));
      }
    }
  }
  if (any_features) {
    for (const Graph* g : graphs) {
      if (!g->node_features) {
        throw ValidationError("build_batch: graph '" + g->id +
                              "' lacks features while others have them");
      }
    }
  }

  std::size_t total_nodes = 0;
  std::size_t total_edges = 0;
  for (const Graph* g : graphs) {
    total_nodes += g->num_nodes;
    total_edges += g->edges.size();
  }

  batch.node_features = Tensor({total_nodes, dim});
  batch.segment_ids.reserve(total_nodes);
  batch.edge_src.reserve(2 * total_edges);
  batch.edge_dst.reserve(2 * total_edges);
  batch.node_offsets.reserve(graphs.size() + 1);

  std::size_t offset = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const Graph& g = *graphs[i];
    batch.node_offsets.push_back(offset);
    batch.graph_ids.push_back(g.id);
    for (std::size_t v = 0; v < g.num_nodes; ++v) {
      batch.segment_ids.push_back(i);
      if (any_features) {
        for (std::size_t j = 0; j < dim; ++j) {
          batch.node_features.at(offset + v, j) = g.node_features->at(v, j);
        }
      } else {
        batch.node_features.at(offset + v, 0) = 1.0;
      }
    }
    for (const auto& [u, v] : g.edges) {
      batch.edge_src.push_back(offset + u);
      batch.edge_dst.push_back(offset + v);
      batch.edge_src.push_back(offset + v);
      batch.edge_dst.push_back(offset + u);
    }
    offset += g.num_nodes;
  }
  batch.node_offsets.push_back(offset);
  return batch;
}

inline GraphBatch build_batch(const std::vector<Graph>& graphs) {
  std::vector<const Graph*> ptrs;
  ptrs.reserve(graphs.size());
  for (const Graph& g : graphs) ptrs.push_back(&g);
  return build_batch(ptrs);
}

/// Batch of a subset, in the order given by `subset`.
inline GraphBatch build_batch(const std::vector<Graph>& graphs,
                              const std::vector<std::size_t>& subset) {
  std::vector<const Graph*> ptrs;
  ptrs.reserve(subset.size());
  for (std::size_t i : subset) ptrs.push_back(&graphs.at(i));
  return build_batch(ptrs);
}

/// Exact number of 3-cliques, one count per vertex triple. Each triangle
/// {u < v < w} is found once from edge (u, v) via common neighbors above v.
inline std::size_t count_triangles(const Graph& g) {
  const auto adj = g.adjacency();
  std::size_t n = 0;
  for (auto [u, v] : g.edges) {
    if (u > v) std::swap(u, v);
    const auto& au = adj[u];
    const auto& av = adj[v];
    auto iu = std::upper_bound(au.begin(), au.end(), v);
    auto iv = std::upper_bound(av.begin(), av.end(), v);
    while (iu != au.end() && iv != av.end()) {
      if (*iu < *iv) {
        ++iu;
      } else if (*iv < *iu) {
        ++iv;
      } else {
        ++n;
        ++iu;
        ++iv;
      }
    }
  }
  return n;
}

}  // namespace graphrank
