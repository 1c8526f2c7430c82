#pragma once

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "graphrank/embedder.hpp"
#include "graphrank/graph.hpp"
#include "graphrank/heads.hpp"
#include "graphrank/param_store.hpp"

namespace graphrank {

/// Embedder + head + their flat parameter store. The unit that trains,
/// checkpoints, and ranks.
struct Model {
  EmbedderConfig embedder;
  HeadConfig head;
  std::size_t feature_dim = 1;
  ParamStore params;

  std::string name() const {
    return std::string(to_string(embedder.conv_type)) + "-" + to_string(head.kind);
  }

  bool has_utility() const { return head.kind != HeadKind::cmpnn; }
};

/// Creates a model with freshly initialized parameters. Parameter creation
/// order is fixed (embedder first, then head), so identical seeds give
/// identical weights.
inline Model make_model(const EmbedderConfig& embedder, const HeadConfig& head,
                        std::size_t feature_dim, std::uint64_t seed) {
  Model m;
  m.embedder = embedder;
  m.head = head;
  m.feature_dim = feature_dim == 0 ? 1 : feature_dim;
  m.params.rng_seed = seed;
  Rng rng(derive_seed(seed, "init"));
  init_embedder_params(m.params, m.embedder, m.feature_dim, rng);
  init_head_params(m.params, m.head, m.embedder.width, rng);
  return m;
}

/// Forward pass over a prepared batch; returns the (graphs x width)
/// embedding matrix as plain values.
inline Tensor embed_graphs(Model& model, const GraphBatch& batch) {
  Tape tape;
  Binder binder(tape, model.params);
  return tape.value(embed(tape, binder, batch, model.embedder));
}

/// Comparator outputs out_act(logit) for index pairs into an embedding
/// matrix; one model invocation per call.
inline std::vector<double> model_pair_outputs(
    Model& model, const Tensor& z,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  Tape tape;
  Binder binder(tape, model.params);
  std::vector<std::size_t> a_idx, b_idx;
  a_idx.reserve(pairs.size());
  b_idx.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    a_idx.push_back(a);
    b_idx.push_back(b);
  }
  const Tape::VarId logits =
      head_pair_logits(tape, binder, tape.constant(z), a_idx, b_idx, model.head);
  const Tensor& out = tape.value(tape.activation(logits, model.head.output_activation));
  return out.values();
}

/// Utility (or point-wise score) per embedding row; one model invocation.
inline std::vector<double> model_utilities(Model& model, const Tensor& z) {
  Tape tape;
  Binder binder(tape, model.params);
  const Tape::VarId u = head_utilities(tape, binder, tape.constant(z), model.head);
  return tape.value(u).values();
}

// ---- checkpoint I/O ----
// JSON document with config plus a flat (name, shape, values) parameter
// list. Doubles serialize shortest-round-trip, so reloads are bit-exact.

inline nlohmann::json embedder_to_json(const EmbedderConfig& c) {
  return {{"conv_type", to_string(c.conv_type)},
          {"conv_layers", c.conv_layers},
          {"width", c.width},
          {"pooling", to_string(c.pooling)},
          {"mlp_hidden_layers", c.mlp_hidden_layers},
          {"activation", to_string(c.activation)}};
}

inline nlohmann::json head_to_json(const HeadConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"hidden_dim", c.hidden_dim},
          {"internal_activation", to_string(c.internal_activation)},
          {"output_activation", to_string(c.output_activation)}};
}

inline EmbedderConfig embedder_from_json(const nlohmann::json& j) {
  EmbedderConfig c;
  c.conv_type = conv_type_from_string(j.at("conv_type").get<std::string>());
  c.conv_layers = j.at("conv_layers").get<std::size_t>();
  c.width = j.at("width").get<std::size_t>();
  c.pooling = pooling_from_string(j.at("pooling").get<std::string>());
  if (j.contains("mlp_hidden_layers")) {
    c.mlp_hidden_layers = j.at("mlp_hidden_layers").get<std::size_t>();
  }
  if (j.contains("activation")) {
    c.activation = activation_from_string(j.at("activation").get<std::string>());
  }
  c.validate();
  return c;
}

inline HeadConfig head_from_json(const nlohmann::json& j) {
  HeadConfig c;
  c.kind = head_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("hidden_dim")) c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  if (j.contains("internal_activation")) {
    c.internal_activation = activation_from_string(j.at("internal_activation").get<std::string>());
  }
  if (j.contains("output_activation")) {
    c.output_activation = activation_from_string(j.at("output_activation").get<std::string>());
  }
  c.validate();
  return c;
}

inline void save_checkpoint(const Model& model, const std::string& path) {
  nlohmann::json j;
  j["format"] = "graphrank-checkpoint";
  j["version"] = 1;
  j["feature_dim"] = model.feature_dim;
  j["embedder"] = embedder_to_json(model.embedder);
  j["head"] = head_to_json(model.head);
  j["rng_seed"] = model.params.rng_seed;
  auto params = nlohmann::json::array();
  for (const auto& [name, tensor] : model.params.values) {
    params.push_back({{"name", name}, {"shape", tensor.shape()}, {"values", tensor.values()}});
  }
  j["params"] = std::move(params);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed for checkpoint '" + path + "'");
}

inline Model load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint '" + path + "': " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "graphrank-checkpoint") {
      throw ParseError("checkpoint '" + path + "': unrecognized format tag");
    }
    Model m;
    m.feature_dim = j.at("feature_dim").get<std::size_t>();
    m.embedder = embedder_from_json(j.at("embedder"));
    m.head = head_from_json(j.at("head"));
    m.params.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    for (const auto& p : j.at("params")) {
      const auto name = p.at("name").get<std::string>();
      const auto shape = p.at("shape").get<std::vector<std::size_t>>();
      auto values = p.at("values").get<std::vector<double>>();
      m.params.insert(name, Tensor(shape, std::move(values)));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint '" + path + "': " + e.what());
  }
}

}  // namespace graphrank
