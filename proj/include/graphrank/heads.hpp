#pragma once

#include <string>
#include <utility>
#include <vector>

#include "graphrank/param_store.hpp"
#include "graphrank/tape.hpp"

namespace graphrank {

enum class HeadKind { direct_ranker, cmpnn, pointwise };

inline const char* to_string(HeadKind k) {
  switch (k) {
    case HeadKind::direct_ranker: return "DirectRanker";
    case HeadKind::cmpnn: return "CmpNN";
    case HeadKind::pointwise: return "PointwiseRegression";
  }
  return "?";
}

inline HeadKind head_kind_from_string(const std::string& s) {
  if (s == "DirectRanker") return HeadKind::direct_ranker;
  if (s == "CmpNN") return HeadKind::cmpnn;
  if (s == "PointwiseRegression") return HeadKind::pointwise;
  throw ConfigError("unknown head kind '" + s +
                    "' (expected DirectRanker, CmpNN or PointwiseRegression)");
}

/// Comparator / scoring head on top of graph embeddings. The output
/// activation must be odd and sign-preserving so that a positive output
/// means the first argument is preferred.
struct HeadConfig {
  HeadKind kind = HeadKind::direct_ranker;
  std::size_t hidden_dim = 32;  // CmpNN internal width
  Activation internal_activation = Activation::sigmoid;
  Activation output_activation = Activation::tanh;

  void validate() const {
    if (output_activation != Activation::tanh && output_activation != Activation::identity) {
      throw ConfigError("head.output_activation: must be odd and sign-preserving "
                        "(tanh or identity)");
    }
    if (kind == HeadKind::cmpnn && hidden_dim == 0) {
      throw ConfigError("head.hidden_dim: must be >= 1");
    }
  }
};

inline void init_head_params(ParamStore& store, const HeadConfig& cfg, std::size_t embed_dim,
                             Rng& rng) {
  cfg.validate();
  switch (cfg.kind) {
    case HeadKind::direct_ranker:
      store.add_weight("head.w", embed_dim, 1, {embed_dim, 1}, rng);
      break;
    case HeadKind::pointwise:
      store.add_weight("head.w", embed_dim, 1, {embed_dim, 1}, rng);
      store.add_bias("head.b", {1});
      break;
    case HeadKind::cmpnn: {
      const std::size_t d = cfg.hidden_dim;
      store.add_weight("head.W1", embed_dim, d, {embed_dim, d}, rng);
      store.add_weight("head.W2", embed_dim, d, {embed_dim, d}, rng);
      store.add_bias("head.b", {d});
      store.add_weight("head.w1", d, 1, {d, 1}, rng);
      store.add_weight("head.w2", d, 1, {d, 1}, rng);
      store.add_bias("head.bp", {1});
      break;
    }
  }
}

/// Scalar utility per embedding row. DirectRanker exposes its implicit
/// utility w.z; the point-wise head its regression score w.z + b. CmpNN has
/// no utility by construction.
inline Tape::VarId head_utilities(Tape& tape, Binder& params, Tape::VarId z,
                                  const HeadConfig& cfg) {
  switch (cfg.kind) {
    case HeadKind::direct_ranker:
      return tape.matmul(z, params("head.w"));
    case HeadKind::pointwise:
      return tape.add_bias(tape.matmul(z, params("head.w")), params("head.b"));
    case HeadKind::cmpnn:
      throw IncompatibleError("CmpNN head has no utility function");
  }
  throw ConfigError("unknown head kind");
}

/// Pre-activation comparator outputs for a list of (a, b) index pairs into
/// the embedding matrix z. Positive logit means graph a is preferred.
///
/// DirectRanker evaluates its utility once per embedding row and takes
/// differences, which makes compare(i,j) = out_act(u_i - u_j) exact.
/// CmpNN mirrors its two weight paths so that swapping (a, b) swaps the
/// internal pair values and flips the sign exactly.
inline Tape::VarId head_pair_logits(Tape& tape, Binder& params, Tape::VarId z,
                                    const std::vector<std::size_t>& a_idx,
                                    const std::vector<std::size_t>& b_idx,
                                    const HeadConfig& cfg) {
  if (a_idx.size() != b_idx.size()) {
    throw ShapeError("head_pair_logits: index list length mismatch");
  }
  switch (cfg.kind) {
    case HeadKind::direct_ranker:
    case HeadKind::pointwise: {
      const Tape::VarId u = head_utilities(tape, params, z, cfg);
      return tape.sub(tape.gather_rows(u, a_idx), tape.gather_rows(u, b_idx));
    }
    case HeadKind::cmpnn: {
      const Tape::VarId za = tape.gather_rows(z, a_idx);
      const Tape::VarId zb = tape.gather_rows(z, b_idx);
      const Tape::VarId w1 = params("head.W1");
      const Tape::VarId w2 = params("head.W2");
      const Tape::VarId b = params("head.b");
      const Activation tau = cfg.internal_activation;
      const Tape::VarId z1 = tape.activation(
          tape.add_bias(tape.add(tape.matmul(za, w1), tape.matmul(zb, w2)), b), tau);
      const Tape::VarId z2 = tape.activation(
          tape.add_bias(tape.add(tape.matmul(za, w2), tape.matmul(zb, w1)), b), tau);
      const Tape::VarId v1 = params("head.w1");
      const Tape::VarId v2 = params("head.w2");
      const Tape::VarId bp = params("head.bp");
      const Tape::VarId z_ge = tape.activation(
          tape.add_bias(tape.add(tape.matmul(z1, v1), tape.matmul(z2, v2)), bp), tau);
      const Tape::VarId z_le = tape.activation(
          tape.add_bias(tape.add(tape.matmul(z1, v2), tape.matmul(z2, v1)), bp), tau);
      return tape.sub(z_ge, z_le);
    }
  }
  throw ConfigError("unknown head kind");
}

inline Tape::VarId head_pair_logits(Tape& tape, Binder& params, Tape::VarId z,
                                    const std::vector<PreferencePair>& pairs,
                                    const HeadConfig& cfg) {
  std::vector<std::size_t> a_idx, b_idx;
  a_idx.reserve(pairs.size());
  b_idx.reserve(pairs.size());
  for (const auto& p : pairs) {
    a_idx.push_back(p.a);
    b_idx.push_back(p.b);
  }
  return head_pair_logits(tape, params, z, a_idx, b_idx, cfg);
}

namespace detail {

inline Tensor stack_rows(const Tensor& a, const Tensor& b) {
  Tensor out({2, a.size()});
  for (std::size_t j = 0; j < a.size(); ++j) {
    out.at(0, j) = a[j];
    out.at(1, j) = b[j];
  }
  return out;
}

}  // namespace detail

/// Comparator output out_act(logit) for a single embedding pair.
inline double head_compare(const Tensor& z_i, const Tensor& z_j, ParamStore& params,
                           const HeadConfig& cfg) {
  if (z_i.size() != z_j.size()) {
    throw ShapeError("head_compare: embedding dimension mismatch");
  }
  Tape tape;
  Binder binder(tape, params);
  const Tape::VarId z = tape.constant(detail::stack_rows(z_i, z_j));
  const Tape::VarId logit = head_pair_logits(tape, binder, z, {0}, {1}, cfg);
  return tape.value(tape.activation(logit, cfg.output_activation))[0];
}

inline double direct_ranker_compare(const Tensor& z_i, const Tensor& z_j, ParamStore& params,
                                    const HeadConfig& cfg) {
  return head_compare(z_i, z_j, params, cfg);
}

inline double cmpnn_compare(const Tensor& z_i, const Tensor& z_j, ParamStore& params,
                            const HeadConfig& cfg) {
  return head_compare(z_i, z_j, params, cfg);
}

/// Implicit utility of one embedding (DirectRanker) or the regression
/// score (point-wise head).
inline double head_utility(const Tensor& z, ParamStore& params, const HeadConfig& cfg) {
  Tape tape;
  Binder binder(tape, params);
  Tensor row({1, z.size()});
  for (std::size_t j = 0; j < z.size(); ++j) row.at(0, j) = z[j];
  const Tape::VarId u = head_utilities(tape, binder, tape.constant(std::move(row)), cfg);
  return tape.value(u)[0];
}

inline double direct_ranker_utility(const Tensor& z, ParamStore& params, const HeadConfig& cfg) {
  return head_utility(z, params, cfg);
}

inline double pointwise_score(const Tensor& z, ParamStore& params, const HeadConfig& cfg) {
  return head_utility(z, params, cfg);
}

}  // namespace graphrank
