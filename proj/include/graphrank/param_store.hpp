#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "graphrank/errors.hpp"
#include "graphrank/rng.hpp"
#include "graphrank/tape.hpp"
#include "graphrank/tensor.hpp"

namespace graphrank {

/// Named parameters with matching gradient buffers. Iteration order is the
/// map's key order, which keeps optimizer updates and checkpoints
/// deterministic regardless of construction details.
struct ParamStore {
  std::map<std::string, Tensor> values;
  std::map<std::string, Tensor> grads;
  std::uint64_t rng_seed = 0;

  /// Registers a weight matrix initialized uniform in [-s, s],
  /// s = sqrt(6 / (fan_in + fan_out)).
  Tensor& add_weight(const std::string& name, std::size_t fan_in, std::size_t fan_out,
                     std::vector<std::size_t> shape, Rng& rng) {
    Tensor t(shape);
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-s, s);
    return insert(name, std::move(t));
  }

  /// Registers a zero-initialized bias.
  Tensor& add_bias(const std::string& name, std::vector<std::size_t> shape) {
    return insert(name, Tensor(std::move(shape)));
  }

  Tensor& insert(const std::string& name, Tensor t) {
    if (values.count(name)) throw ConfigError("parameter '" + name + "' registered twice");
    grads.emplace(name, Tensor::zeros_like(t));
    return values.emplace(name, std::move(t)).first->second;
  }

  const Tensor& value(const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
  }

  Tensor& grad(const std::string& name) {
    auto it = grads.find(name);
    if (it == grads.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
  }

  void zero_grads() {
    for (auto& [name, g] : grads) {
      std::fill(g.values().begin(), g.values().end(), 0.0);
    }
  }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& [name, v] : values) n += v.size();
    return n;
  }
};

/// Binds store parameters to tape leaves for one forward/backward pass.
/// Each parameter becomes a single tracked leaf no matter how many times
/// the model references it.
class Binder {
 public:
  Binder(Tape& tape, ParamStore& store) : tape_(tape), store_(store) {}

  Tape::VarId operator()(const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    const Tape::VarId id = tape_.input(store_.value(name));
    bound_.emplace(name, id);
    return id;
  }

  /// Accumulates tape gradients back into the store after backward().
  void write_grads() {
    for (const auto& [name, id] : bound_) {
      if (!tape_.has_grad(id)) continue;
      const Tensor& g = tape_.grad(id);
      Tensor& dst = store_.grad(name);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    }
  }

  Tape& tape() { return tape_; }
  ParamStore& store() { return store_; }

 private:
  Tape& tape_;
  ParamStore& store_;
  std::map<std::string, Tape::VarId> bound_;
};

}  // namespace graphrank
