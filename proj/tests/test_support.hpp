#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "graphrank/param_store.hpp"
#include "graphrank/tape.hpp"

namespace testsupport {

using graphrank::Binder;
using graphrank::ParamStore;
using graphrank::Tape;

/// Builds a scalar loss from the store's parameters on a fresh tape.
using LossBuilder = std::function<Tape::VarId(Tape&, Binder&)>;

inline double eval_loss(ParamStore& store, const LossBuilder& build) {
  Tape tape;
  Binder binder(tape, store);
  return tape.value(build(tape, binder))[0];
}

/// Central finite difference of the loss w.r.t. one parameter element.
inline double fd_grad(ParamStore& store, const LossBuilder& build, const std::string& name,
                      std::size_t index, double h = 1e-5) {
  graphrank::Tensor& theta = store.values.at(name);
  const double saved = theta[index];
  theta[index] = saved + h;
  const double up = eval_loss(store, build);
  theta[index] = saved - h;
  const double down = eval_loss(store, build);
  theta[index] = saved;
  return (up - down) / (2.0 * h);
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
};

/// Runs backward once and compares every parameter gradient against central
/// finite differences. Relative error uses max(|g|, |fd|, eps) as scale.
inline GradCheckResult check_gradients(ParamStore& store, const LossBuilder& build,
                                       double h = 1e-5, double scale_floor = 1e-6) {
  store.zero_grads();
  {
    Tape tape;
    Binder binder(tape, store);
    const Tape::VarId loss = build(tape, binder);
    tape.backward(loss);
    binder.write_grads();
  }
  GradCheckResult result;
  for (const auto& [name, theta] : store.values) {
    const graphrank::Tensor& g = store.grads.at(name);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double fd = fd_grad(store, build, name, i, h);
      const double scale = std::max({std::fabs(g[i]), std::fabs(fd), scale_floor});
      const double rel = std::fabs(g[i] - fd) / scale;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

inline graphrank::Tensor random_tensor(std::vector<std::size_t> shape, graphrank::Rng& rng,
                                       double lo = -1.0, double hi = 1.0) {
  graphrank::Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

}  // namespace testsupport
