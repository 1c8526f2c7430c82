#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "graphrank/errors.hpp"
#include "graphrank/tensor.hpp"

namespace graphrank {

enum class Activation { identity, sigmoid, tanh, relu };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  throw ConfigError("unknown activation '" + s + "'");
}

namespace detail {

// C(m x n) = A(m x k) * B(k x n)
inline void matmul_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                      std::size_t n) {
  std::fill(c, c + m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      if (av == 0.0) continue;
      const double* brow = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C(m x n) += A(m x k) * B(n x k)^T
inline void matmul_nt_acc(const double* a, const double* b, double* c, std::size_t m,
                          std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double acc = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      crow[j] += acc;
    }
  }
}

// C(k x n) += A(m x k)^T * B(m x n)
inline void matmul_tn_acc(const double* a, const double* b, double* c, std::size_t m,
                          std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      if (av == 0.0) continue;
      double* crow = c + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

inline double apply_activation(Activation f, double x) {
  switch (f) {
    case Activation::identity: return x;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::tanh: return std::tanh(x);
    case Activation::relu: return x > 0.0 ? x : 0.0;
  }
  return x;
}

}  // namespace detail

/// Reverse-mode autodiff over a tape of dense tensors. Build the forward
/// computation through the op methods, call backward() on a scalar node,
/// then read gradients of tracked leaves via grad().
///
/// The tape is single-use per forward/backward pass; distinct tapes are
/// independent and may run concurrently.
class Tape {
 public:
  using VarId = std::int32_t;

  explicit Tape(bool check_finite = true) : check_finite_(check_finite) {}

  /// Tracked leaf (participates in gradients).
  VarId input(Tensor v) { return push(std::move(v), true, nullptr, "input"); }

  /// Untracked leaf; backward never allocates a gradient for it.
  VarId constant(Tensor v) { return push(std::move(v), false, nullptr, "constant"); }

  const Tensor& value(VarId id) const { return nodes_[static_cast<std::size_t>(id)].value; }

  bool has_grad(VarId id) const {
    return nodes_[static_cast<std::size_t>(id)].grad.size() > 0;
  }

  /// Gradient of the last backward() root w.r.t. this node. Exactly zero
  /// (never allocated) when the root does not depend on it.
  const Tensor& grad(VarId id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) {
      throw ShapeError("grad: node has no gradient (did you call backward()?)");
    }
    return n.grad;
  }

  std::size_t node_count() const { return nodes_.size(); }

  // ---- ops ----

  VarId matmul(VarId a, VarId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.ndim() != 2 || tb.ndim() != 2 || ta.cols() != tb.rows()) {
      throw ShapeError("matmul: incompatible shapes " + ta.shape_str() + " x " + tb.shape_str());
    }
    const std::size_t m = ta.rows(), k = ta.cols(), n = tb.cols();
    Tensor out({m, n});
    detail::matmul_nn(ta.data(), tb.data(), out.data(), m, k, n);
    return push(std::move(out), tracked(a) || tracked(b),
                [a, b, m, k, n](Tape& t, const Tensor& g) {
                  if (t.tracked(a)) {
                    detail::matmul_nt_acc(g.data(), t.value(b).data(), t.grad_ref(a).data(), m, n, k);
                  }
                  if (t.tracked(b)) {
                    detail::matmul_tn_acc(t.value(a).data(), g.data(), t.grad_ref(b).data(), m, k, n);
                  }
                },
                "matmul");
  }

  VarId add(VarId a, VarId b) { return add_sub(a, b, +1.0, "add"); }
  VarId sub(VarId a, VarId b) { return add_sub(a, b, -1.0, "sub"); }

  /// Broadcast-add a rank-1 bias {d} over every row of x (rows x d).
  VarId add_bias(VarId x, VarId bias) {
    const Tensor& tx = value(x);
    const Tensor& tb = value(bias);
    if (tb.ndim() != 1 || tb.size() != tx.cols()) {
      throw ShapeError("add_bias: bias " + tb.shape_str() + " does not match " + tx.shape_str());
    }
    const std::size_t rows = tx.rows(), d = tx.cols();
    Tensor out = tx;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < d; ++j) out.data()[r * d + j] += tb[j];
    }
    return push(std::move(out), tracked(x) || tracked(bias),
                [x, bias, rows, d](Tape& t, const Tensor& g) {
                  if (t.tracked(x)) {
                    Tensor& gx = t.grad_ref(x);
                    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                  }
                  if (t.tracked(bias)) {
                    Tensor& gb = t.grad_ref(bias);
                    for (std::size_t r = 0; r < rows; ++r) {
                      for (std::size_t j = 0; j < d; ++j) gb[j] += g[r * d + j];
                    }
                  }
                },
                "add_bias");
  }

  VarId activation(VarId x, Activation f) {
    if (f == Activation::identity) return x;
    const Tensor& tx = value(x);
    Tensor out = tx;
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = detail::apply_activation(f, out[i]);
    }
    VarId out_id = push(std::move(out), tracked(x), nullptr, to_string(f));
    if (tracked(x)) {
      nodes_.back().pull = [x, out_id, f](Tape& t, const Tensor& g) {
        Tensor& gx = t.grad_ref(x);
        const Tensor& y = t.value(out_id);
        const Tensor& in = t.value(x);
        switch (f) {
          case Activation::sigmoid:
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
            break;
          case Activation::tanh:
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
            break;
          case Activation::relu:
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += in[i] > 0.0 ? g[i] : 0.0;
            break;
          case Activation::identity:
            break;
        }
      };
    }
    return out_id;
  }

  VarId mul_scalar(VarId x, double c) {
    Tensor out = value(x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c;
    return push(std::move(out), tracked(x),
                [x, c](Tape& t, const Tensor& g) {
                  if (!t.tracked(x)) return;
                  Tensor& gx = t.grad_ref(x);
                  for (std::size_t i = 0; i < g.size(); ++i) gx[i] += c * g[i];
                },
                "mul_scalar");
  }

  VarId add_scalar(VarId x, double c) {
    Tensor out = value(x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c;
    return push(std::move(out), tracked(x),
                [x](Tape& t, const Tensor& g) {
                  if (!t.tracked(x)) return;
                  Tensor& gx = t.grad_ref(x);
                  for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                },
                "add_scalar");
  }

  VarId square(VarId x) {
    Tensor out = value(x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= out[i];
    return push(std::move(out), tracked(x),
                [x](Tape& t, const Tensor& g) {
                  if (!t.tracked(x)) return;
                  Tensor& gx = t.grad_ref(x);
                  const Tensor& in = t.value(x);
                  for (std::size_t i = 0; i < g.size(); ++i) gx[i] += 2.0 * in[i] * g[i];
                },
                "square");
  }

  /// Mean over all elements, returns a {1} scalar.
  VarId reduce_mean(VarId x) {
    const Tensor& tx = value(x);
    if (tx.size() == 0) throw ShapeError("reduce_mean: empty tensor");
    double acc = 0.0;
    for (std::size_t i = 0; i < tx.size(); ++i) acc += tx[i];
    const double inv = 1.0 / static_cast<double>(tx.size());
    return push(Tensor::scalar(acc * inv), tracked(x),
                [x, inv](Tape& t, const Tensor& g) {
                  if (!t.tracked(x)) return;
                  Tensor& gx = t.grad_ref(x);
                  const double gv = g[0] * inv;
                  for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gv;
                },
                "reduce_mean");
  }

  /// out[i, :] = x[rows[i], :]. Duplicate rows allowed.
  VarId gather_rows(VarId x, std::vector<std::size_t> rows) {
    const Tensor& tx = value(x);
    const std::size_t d = tx.cols();
    for (std::size_t r : rows) {
      if (r >= tx.rows()) throw ShapeError("gather_rows: index out of range");
    }
    Tensor out({rows.size(), d});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double* src = tx.data() + rows[i] * d;
      std::copy(src, src + d, out.data() + i * d);
    }
    return push(std::move(out), tracked(x),
                [x, rows = std::move(rows), d](Tape& t, const Tensor& g) {
                  if (!t.tracked(x)) return;
                  Tensor& gx = t.grad_ref(x);
                  for (std::size_t i = 0; i < rows.size(); ++i) {
                    double* dst = gx.data() + rows[i] * d;
                    const double* src = g.data() + i * d;
                    for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
                  }
                },
                "gather_rows");
  }

  /// out[i, :] = coef[i] * x[i, :] with constant per-row coefficients.
  VarId scale_rows(VarId x, std::vector<double> coef) {
    const Tensor& tx = value(x);
    if (coef.size() != tx.rows()) {
      throw ShapeError("scale_rows: coef length " + std::to_string(coef.size()) +
                       " != rows of " + tx.shape_str());
    }
    const std::size_t d = tx.cols();
    Tensor out = tx;
    for (std::size_t r = 0; r < coef.size(); ++r) {
      for (std::size_t j = 0; j < d; ++j) out.data()[r * d + j] *= coef[r];
    }
    return push(std::move(out), tracked(x),
                [x, coef = std::move(coef), d](Tape& t, const Tensor& g) {
                  if (!t.tracked(x)) return;
                  Tensor& gx = t.grad_ref(x);
                  for (std::size_t r = 0; r < coef.size(); ++r) {
                    for (std::size_t j = 0; j < d; ++j) {
                      gx.data()[r * d + j] += coef[r] * g.data()[r * d + j];
                    }
                  }
                },
                "scale_rows");
  }

  /// Sparse weighted aggregation: out[dst[e], :] += weight[e] * x[src[e], :].
  /// This is gather_rows + scale_rows + scatter-add fused; it carries the
  /// neighbor sums of the graph convolutions.
  VarId edge_aggregate(VarId x, std::vector<std::size_t> src, std::vector<std::size_t> dst,
                       std::vector<double> weight, std::size_t out_rows) {
    const Tensor& tx = value(x);
    if (src.size() != dst.size() || src.size() != weight.size()) {
      throw ShapeError("edge_aggregate: src/dst/weight length mismatch");
    }
    const std::size_t d = tx.cols();
    for (std::size_t e = 0; e < src.size(); ++e) {
      if (src[e] >= tx.rows() || dst[e] >= out_rows) {
        throw ShapeError("edge_aggregate: edge index out of range");
      }
    }
    Tensor out({out_rows, d});
    for (std::size_t e = 0; e < src.size(); ++e) {
      const double w = weight[e];
      const double* xs = tx.data() + src[e] * d;
      double* od = out.data() + dst[e] * d;
      for (std::size_t j = 0; j < d; ++j) od[j] += w * xs[j];
    }
    return push(std::move(out), tracked(x),
                [x, src = std::move(src), dst = std::move(dst), weight = std::move(weight),
                 d](Tape& t, const Tensor& g) {
                  if (!t.tracked(x)) return;
                  Tensor& gx = t.grad_ref(x);
                  for (std::size_t e = 0; e < src.size(); ++e) {
                    const double w = weight[e];
                    const double* gd = g.data() + dst[e] * d;
                    double* xs = gx.data() + src[e] * d;
                    for (std::size_t j = 0; j < d; ++j) xs[j] += w * gd[j];
                  }
                },
                "edge_aggregate");
  }

  VarId segment_sum(VarId x, std::vector<std::size_t> seg, std::size_t groups) {
    return segment_sum_mean(x, std::move(seg), groups, false);
  }

  VarId segment_mean(VarId x, std::vector<std::size_t> seg, std::size_t groups) {
    return segment_sum_mean(x, std::move(seg), groups, true);
  }

  /// Attention-style pooling: per row a scalar score; weights are the
  /// softmax of scores within each segment; out[g] = sum_i w_i * x[i].
  /// Gradients flow into both x and scores.
  VarId segment_softmax_pool(VarId x, VarId scores, std::vector<std::size_t> seg,
                             std::size_t groups) {
    const Tensor& tx = value(x);
    const Tensor& ts = value(scores);
    if (ts.rows() != tx.rows() || ts.cols() != 1) {
      throw ShapeError("segment_softmax_pool: scores " + ts.shape_str() + " must be rows x 1");
    }
    check_segments("segment_softmax_pool", seg, tx.rows(), groups);
    const std::size_t d = tx.cols();
    std::vector<double> weights(tx.rows(), 0.0);
    Tensor out({groups, d});
    std::size_t begin = 0;
    while (begin < seg.size()) {
      std::size_t end = begin;
      while (end < seg.size() && seg[end] == seg[begin]) ++end;
      double mx = ts[begin];
      for (std::size_t i = begin + 1; i < end; ++i) mx = std::max(mx, ts[i]);
      double z = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        weights[i] = std::exp(ts[i] - mx);
        z += weights[i];
      }
      double* og = out.data() + seg[begin] * d;
      for (std::size_t i = begin; i < end; ++i) {
        weights[i] /= z;
        const double* xi = tx.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) og[j] += weights[i] * xi[j];
      }
      begin = end;
    }
    VarId out_id = push(std::move(out), tracked(x) || tracked(scores), nullptr,
                        "segment_softmax_pool");
    nodes_.back().pull = [x, scores, out_id, seg = std::move(seg), weights = std::move(weights),
                          d](Tape& t, const Tensor& g) {
      const Tensor& in = t.value(x);
      const Tensor& pooled = t.value(out_id);
      const bool want_x = t.tracked(x);
      const bool want_s = t.tracked(scores);
      for (std::size_t i = 0; i < seg.size(); ++i) {
        const double* gg = g.data() + seg[i] * d;
        if (want_x) {
          double* gx = t.grad_ref(x).data() + i * d;
          for (std::size_t j = 0; j < d; ++j) gx[j] += weights[i] * gg[j];
        }
        if (want_s) {
          const double* xi = in.data() + i * d;
          const double* og = pooled.data() + seg[i] * d;
          double dot_x = 0.0, dot_out = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            dot_x += xi[j] * gg[j];
            dot_out += og[j] * gg[j];
          }
          t.grad_ref(scores)[i] += weights[i] * (dot_x - dot_out);
        }
      }
    };
    return out_id;
  }

  /// Mean binary cross-entropy of logits against fixed labels; the logit is
  /// the pre-activation comparator difference. p is clamped to
  /// [1e-12, 1 - 1e-12] before the log.
  VarId bce_with_logits(VarId logits, std::vector<double> labels) {
    const Tensor& tl = value(logits);
    if (tl.size() == 0) throw ShapeError("bce_with_logits: no logits");
    if (tl.cols() != 1) {
      throw ShapeError("bce_with_logits: logits " + tl.shape_str() + " must be n x 1");
    }
    if (labels.size() != tl.size()) {
      throw ShapeError("bce_with_logits: label count mismatch");
    }
    const std::size_t n = tl.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = clamp_p(1.0 / (1.0 + std::exp(-tl[i])));
      acc += -(labels[i] * std::log(p) + (1.0 - labels[i]) * std::log1p(-p));
    }
    const double inv = 1.0 / static_cast<double>(n);
    return push(Tensor::scalar(acc * inv), tracked(logits),
                [logits, labels = std::move(labels), inv](Tape& t, const Tensor& g) {
                  if (!t.tracked(logits)) return;
                  Tensor& gl = t.grad_ref(logits);
                  const Tensor& tl = t.value(logits);
                  for (std::size_t i = 0; i < tl.size(); ++i) {
                    const double p = 1.0 / (1.0 + std::exp(-tl[i]));
                    gl[i] += g[0] * inv * (p - labels[i]);
                  }
                },
                "bce_with_logits");
  }

  /// Backpropagates from a scalar root through every node that influences it.
  void backward(VarId root) {
    const Tensor& r = value(root);
    if (r.size() != 1) {
      throw ShapeError("backward: root must be scalar, got " + r.shape_str());
    }
    grad_ref(root)[0] = 1.0;
    for (std::int32_t id = root; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.grad.size() > 0 && n.pull) n.pull(*this, n.grad);
    }
  }

  bool tracked(VarId id) const { return nodes_[static_cast<std::size_t>(id)].track; }

  /// Gradient accumulator for a node, allocated (zeros) on first touch.
  Tensor& grad_ref(VarId id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) n.grad = Tensor::zeros_like(n.value);
    return n.grad;
  }

  static double clamp_p(double p) {
    return std::min(1.0 - 1e-12, std::max(1e-12, p));
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool track = false;
    std::function<void(Tape&, const Tensor&)> pull;
  };

  VarId add_sub(VarId a, VarId b, double sign, const char* name) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb)) {
      throw ShapeError(std::string(name) + ": shapes " + ta.shape_str() + " vs " + tb.shape_str());
    }
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += sign * tb[i];
    return push(std::move(out), tracked(a) || tracked(b),
                [a, b, sign](Tape& t, const Tensor& g) {
                  if (t.tracked(a)) {
                    Tensor& ga = t.grad_ref(a);
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                  }
                  if (t.tracked(b)) {
                    Tensor& gb = t.grad_ref(b);
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign * g[i];
                  }
                },
                name);
  }

  VarId segment_sum_mean(VarId x, std::vector<std::size_t> seg, std::size_t groups, bool mean) {
    const char* name = mean ? "segment_mean" : "segment_sum";
    const Tensor& tx = value(x);
    check_segments(name, seg, tx.rows(), groups);
    const std::size_t d = tx.cols();
    std::vector<double> inv_count;
    if (mean) {
      std::vector<std::size_t> count(groups, 0);
      for (std::size_t s : seg) ++count[s];
      inv_count.resize(groups);
      for (std::size_t gidx = 0; gidx < groups; ++gidx) {
        inv_count[gidx] = 1.0 / static_cast<double>(count[gidx]);
      }
    }
    Tensor out({groups, d});
    for (std::size_t i = 0; i < seg.size(); ++i) {
      const double w = mean ? inv_count[seg[i]] : 1.0;
      const double* xi = tx.data() + i * d;
      double* og = out.data() + seg[i] * d;
      for (std::size_t j = 0; j < d; ++j) og[j] += w * xi[j];
    }
    return push(std::move(out), tracked(x),
                [x, seg = std::move(seg), inv_count = std::move(inv_count), mean,
                 d](Tape& t, const Tensor& g) {
                  if (!t.tracked(x)) return;
                  Tensor& gx = t.grad_ref(x);
                  for (std::size_t i = 0; i < seg.size(); ++i) {
                    const double w = mean ? inv_count[seg[i]] : 1.0;
                    const double* gg = g.data() + seg[i] * d;
                    double* gi = gx.data() + i * d;
                    for (std::size_t j = 0; j < d; ++j) gi[j] += w * gg[j];
                  }
                },
                name);
  }

  static void check_segments(const char* op, const std::vector<std::size_t>& seg,
                             std::size_t rows, std::size_t groups) {
    if (seg.size() != rows) {
      throw ShapeError(std::string(op) + ": segment ids length " + std::to_string(seg.size()) +
                       " != rows " + std::to_string(rows));
    }
    std::size_t prev = 0;
    for (std::size_t i = 0; i < seg.size(); ++i) {
      const bool ok = i == 0 ? seg[0] == 0 : (seg[i] == prev || seg[i] == prev + 1);
      if (!ok) {
        throw ShapeError(std::string(op) + ": segment ids must be non-decreasing without gaps");
      }
      prev = seg[i];
    }
    const std::size_t seen = seg.empty() ? 0 : prev + 1;
    if (seen != groups) {
      throw ShapeError(std::string(op) + ": " + std::to_string(groups) + " groups expected, " +
                       std::to_string(seen) + " present (empty group?)");
    }
  }

  VarId push(Tensor v, bool track, std::function<void(Tape&, const Tensor&)> pull,
             const char* op) {
    if (check_finite_ && !v.all_finite()) {
      throw NumericError(std::string(op) + ": non-finite value produced");
    }
    nodes_.push_back(Node{std::move(v), Tensor{}, track, std::move(pull)});
    return static_cast<VarId>(nodes_.size() - 1);
  }

  bool check_finite_;
  std::vector<Node> nodes_;
};

}  // namespace graphrank
