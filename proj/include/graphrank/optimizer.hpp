#pragma once

#include <cmath>
#include <map>
#include <string>

#include "graphrank/param_store.hpp"
#include "graphrank/tensor.hpp"

namespace graphrank {

/// Adam with bias correction. Moment state lives here, keyed by parameter
/// name; one optimizer instance drives one training run.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// One update from the gradients currently held in the store.
  void step(ParamStore& store, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (auto& [name, theta] : store.values) {
      const Tensor& g = store.grad(name);
      Tensor& m = moment(m_, name, theta);
      Tensor& v = moment(v_, name, theta);
      for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
        v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        theta[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  std::size_t steps() const { return t_; }

 private:
  static Tensor& moment(std::map<std::string, Tensor>& m, const std::string& name,
                        const Tensor& like) {
    auto it = m.find(name);
    if (it == m.end()) it = m.emplace(name, Tensor::zeros_like(like)).first;
    return it->second;
  }

  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::map<std::string, Tensor> m_, v_;
};

}  // namespace graphrank
