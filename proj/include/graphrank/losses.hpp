#pragma once

#include <cmath>
#include <vector>

#include "graphrank/errors.hpp"
#include "graphrank/tape.hpp"

namespace graphrank {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Mean binary cross-entropy over comparator logits. Matches the tape op
/// bce_with_logits value for value; this plain form serves validation-loss
/// bookkeeping and tests.
inline double pairwise_loss(const std::vector<double>& logits,
                            const std::vector<double>& labels) {
  if (logits.size() != labels.size() || logits.empty()) {
    throw ShapeError("pairwise_loss: need equally many logits and labels");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = Tape::clamp_p(logistic(logits[i]));
    acc += -(labels[i] * std::log(p) + (1.0 - labels[i]) * std::log1p(-p));
  }
  return acc / static_cast<double>(logits.size());
}

/// Mean squared error.
inline double pointwise_loss(const std::vector<double>& scores,
                             const std::vector<double>& targets) {
  if (scores.size() != targets.size() || scores.empty()) {
    throw ShapeError("pointwise_loss: need equally many scores and targets");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double d = scores[i] - targets[i];
    acc += d * d;
  }
  return acc / static_cast<double>(scores.size());
}

}  // namespace graphrank
