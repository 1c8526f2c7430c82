#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "graphrank/graph.hpp"
#include "graphrank/param_store.hpp"
#include "graphrank/tape.hpp"

namespace graphrank {

enum class ConvType { gcn, gin };
enum class PoolingType { mean, sum, softmax };

inline const char* to_string(ConvType t) { return t == ConvType::gcn ? "GCN" : "GIN"; }

inline const char* to_string(PoolingType p) {
  switch (p) {
    case PoolingType::mean: return "mean";
    case PoolingType::sum: return "sum";
    case PoolingType::softmax: return "softmax";
  }
  return "?";
}

inline ConvType conv_type_from_string(const std::string& s) {
  if (s == "GCN" || s == "gcn") return ConvType::gcn;
  if (s == "GIN" || s == "gin") return ConvType::gin;
  throw ConfigError("unknown conv_type '" + s + "' (expected GCN or GIN)");
}

inline PoolingType pooling_from_string(const std::string& s) {
  if (s == "mean") return PoolingType::mean;
  if (s == "sum") return PoolingType::sum;
  if (s == "softmax") return PoolingType::softmax;
  throw ConfigError("unknown pooling '" + s + "' (expected mean, sum or softmax)");
}

/// Stacked graph convolutions, a pooling layer, and a two-hidden-layer MLP
/// producing one embedding row per graph.
struct EmbedderConfig {
  ConvType conv_type = ConvType::gin;
  std::size_t conv_layers = 3;
  std::size_t width = 32;
  PoolingType pooling = PoolingType::sum;
  std::size_t mlp_hidden_layers = 2;
  Activation activation = Activation::sigmoid;

  void validate() const {
    if (conv_layers == 0) throw ConfigError("embedder.conv_layers: must be >= 1");
    if (width == 0) throw ConfigError("embedder.width: must be >= 1");
    if (mlp_hidden_layers != 2) {
      throw ConfigError("embedder.mlp_hidden_layers: fixed at 2");
    }
  }
};

namespace detail {

/// Neighbor-sum coefficients 1/sqrt((deg_i+1)(deg_j+1)) per directed edge
/// and the self term 1/(deg_i+1) per node (self-loop-augmented symmetric
/// normalization).
struct GcnNorm {
  std::vector<double> edge_weight;
  std::vector<double> self_weight;
};

inline GcnNorm gcn_normalization(const GraphBatch& batch) {
  const auto deg = batch.degrees();
  GcnNorm norm;
  norm.self_weight.resize(deg.size());
  std::vector<double> inv_sqrt(deg.size());
  for (std::size_t i = 0; i < deg.size(); ++i) {
    const double d1 = static_cast<double>(deg[i]) + 1.0;
    norm.self_weight[i] = 1.0 / d1;
    inv_sqrt[i] = 1.0 / std::sqrt(d1);
  }
  norm.edge_weight.resize(batch.edge_src.size());
  for (std::size_t e = 0; e < batch.edge_src.size(); ++e) {
    norm.edge_weight[e] = inv_sqrt[batch.edge_src[e]] * inv_sqrt[batch.edge_dst[e]];
  }
  return norm;
}

}  // namespace detail

/// x'_i = act(W^T (self_i x_i + sum_{j in N(i)} w_ij x_j)) with the
/// normalization above. W has shape (in x out).
inline Tape::VarId gcn_conv(Tape& tape, const GraphBatch& batch, Tape::VarId x, Tape::VarId w,
                            Activation act) {
  const auto norm = detail::gcn_normalization(batch);
  const Tape::VarId nbr =
      tape.edge_aggregate(x, batch.edge_src, batch.edge_dst, norm.edge_weight,
                          batch.total_nodes());
  const Tape::VarId self = tape.scale_rows(x, norm.self_weight);
  return tape.activation(tape.matmul(tape.add(self, nbr), w), act);
}

/// x'_i = MLP(x_i + sum_{j in N(i)} x_j); the internal MLP is one hidden
/// layer of the embedder width. The self term uses a fixed epsilon of 0.
inline Tape::VarId gin_conv(Tape& tape, const GraphBatch& batch, Tape::VarId x, Tape::VarId w1,
                            Tape::VarId b1, Tape::VarId w2, Tape::VarId b2, Activation act) {
  std::vector<double> ones(batch.edge_src.size(), 1.0);
  const Tape::VarId nbr =
      tape.edge_aggregate(x, batch.edge_src, batch.edge_dst, ones, batch.total_nodes());
  const Tape::VarId agg = tape.add(x, nbr);
  const Tape::VarId hidden = tape.activation(tape.add_bias(tape.matmul(agg, w1), b1), act);
  return tape.activation(tape.add_bias(tape.matmul(hidden, w2), b2), act);
}

/// Per-graph reduction of node features; the softmax variant scores each
/// node with a learned linear form and takes the softmax-weighted mean.
inline Tape::VarId pool_nodes(Tape& tape, const GraphBatch& batch, Binder& params,
                              Tape::VarId x, PoolingType pooling) {
  switch (pooling) {
    case PoolingType::mean:
      return tape.segment_mean(x, batch.segment_ids, batch.graph_count);
    case PoolingType::sum:
      return tape.segment_sum(x, batch.segment_ids, batch.graph_count);
    case PoolingType::softmax: {
      const Tape::VarId scores =
          tape.add_bias(tape.matmul(x, params("embed.pool.a")), params("embed.pool.c"));
      return tape.segment_softmax_pool(x, scores, batch.segment_ids, batch.graph_count);
    }
  }
  throw ConfigError("unknown pooling type");
}

/// Registers all embedder parameters in their fixed creation order.
inline void init_embedder_params(ParamStore& store, const EmbedderConfig& cfg,
                                 std::size_t in_dim, Rng& rng) {
  cfg.validate();
  const std::size_t w = cfg.width;
  for (std::size_t layer = 0; layer < cfg.conv_layers; ++layer) {
    const std::size_t fan_in = layer == 0 ? in_dim : w;
    const std::string prefix = "embed.conv" + std::to_string(layer);
    if (cfg.conv_type == ConvType::gcn) {
      store.add_weight(prefix + ".W", fan_in, w, {fan_in, w}, rng);
    } else {
      store.add_weight(prefix + ".W1", fan_in, w, {fan_in, w}, rng);
      store.add_bias(prefix + ".b1", {w});
      store.add_weight(prefix + ".W2", w, w, {w, w}, rng);
      store.add_bias(prefix + ".b2", {w});
    }
  }
  if (cfg.pooling == PoolingType::softmax) {
    store.add_weight("embed.pool.a", w, 1, {w, 1}, rng);
    store.add_bias("embed.pool.c", {1});
  }
  for (std::size_t layer = 0; layer < cfg.mlp_hidden_layers; ++layer) {
    const std::string prefix = "embed.mlp" + std::to_string(layer);
    store.add_weight(prefix + ".W", w, w, {w, w}, rng);
    store.add_bias(prefix + ".b", {w});
  }
}

/// Full embedder forward pass: conv stack, pooling, post-pooling MLP.
/// Returns a (graph_count x width) matrix, one row per graph.
inline Tape::VarId embed(Tape& tape, Binder& params, const GraphBatch& batch,
                         const EmbedderConfig& cfg) {
  Tape::VarId x = tape.constant(batch.node_features);
  for (std::size_t layer = 0; layer < cfg.conv_layers; ++layer) {
    const std::string prefix = "embed.conv" + std::to_string(layer);
    if (cfg.conv_type == ConvType::gcn) {
      x = gcn_conv(tape, batch, x, params(prefix + ".W"), cfg.activation);
    } else {
      x = gin_conv(tape, batch, x, params(prefix + ".W1"), params(prefix + ".b1"),
                   params(prefix + ".W2"), params(prefix + ".b2"), cfg.activation);
    }
  }
  Tape::VarId pooled = pool_nodes(tape, batch, params, x, cfg.pooling);
  for (std::size_t layer = 0; layer < cfg.mlp_hidden_layers; ++layer) {
    const std::string prefix = "embed.mlp" + std::to_string(layer);
    pooled = tape.activation(
        tape.add_bias(tape.matmul(pooled, params(prefix + ".W")), params(prefix + ".b")),
        cfg.activation);
  }
  return pooled;
}

}  // namespace graphrank
