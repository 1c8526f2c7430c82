#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "graphrank/losses.hpp"
#include "graphrank/model.hpp"
#include "graphrank/optimizer.hpp"
#include "graphrank/sampling.hpp"

namespace graphrank {

enum class TargetMode { original_utility, normalized_rank, pairwise };

inline const char* to_string(TargetMode m) {
  switch (m) {
    case TargetMode::original_utility: return "original_utility";
    case TargetMode::normalized_rank: return "normalized_rank";
    case TargetMode::pairwise: return "pairwise";
  }
  return "?";
}

inline TargetMode target_mode_from_string(const std::string& s) {
  if (s == "original_utility") return TargetMode::original_utility;
  if (s == "normalized_rank") return TargetMode::normalized_rank;
  if (s == "pairwise") return TargetMode::pairwise;
  throw ConfigError("unknown target_mode '" + s +
                    "' (expected original_utility, normalized_rank or pairwise)");
}

struct TrainConfig {
  double alpha = 20.0;
  double learning_rate = 1e-3;
  std::size_t max_epochs = 2000;
  std::size_t patience = 100;
  double min_delta = 1e-4;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  TargetMode target_mode = TargetMode::pairwise;

  void validate() const {
    if (alpha <= 0.0) throw ConfigError("train.alpha: must be > 0");
    if (learning_rate <= 0.0) throw ConfigError("train.learning_rate: must be > 0");
    if (max_epochs == 0) throw ConfigError("train.max_epochs: must be >= 1");
    if (patience == 0) throw ConfigError("train.patience: must be >= 1");
    if (min_delta < 0.0) throw ConfigError("train.min_delta: must be >= 0");
    if (batch_size == 0) throw ConfigError("train.batch_size: must be >= 1");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  std::size_t stopped_epoch = 0;
};

namespace detail {

/// Local re-indexing of a pair minibatch: each distinct graph appears once
/// in the sub-batch, pairs point at local rows.
struct PairMinibatch {
  std::vector<std::size_t> graphs;  // sorted distinct dataset indices
  std::vector<std::size_t> a_local, b_local;
  std::vector<double> labels;
};

inline PairMinibatch make_pair_minibatch(const std::vector<PreferencePair>& pairs,
                                         const std::vector<std::size_t>& pair_indices) {
  PairMinibatch mb;
  mb.graphs.reserve(2 * pair_indices.size());
  for (std::size_t pi : pair_indices) {
    mb.graphs.push_back(pairs[pi].a);
    mb.graphs.push_back(pairs[pi].b);
  }
  std::sort(mb.graphs.begin(), mb.graphs.end());
  mb.graphs.erase(std::unique(mb.graphs.begin(), mb.graphs.end()), mb.graphs.end());
  auto local_of = [&](std::size_t dataset_index) {
    return static_cast<std::size_t>(
        std::lower_bound(mb.graphs.begin(), mb.graphs.end(), dataset_index) -
        mb.graphs.begin());
  };
  mb.a_local.reserve(pair_indices.size());
  mb.b_local.reserve(pair_indices.size());
  mb.labels.reserve(pair_indices.size());
  for (std::size_t pi : pair_indices) {
    mb.a_local.push_back(local_of(pairs[pi].a));
    mb.b_local.push_back(local_of(pairs[pi].b));
    mb.labels.push_back(pairs[pi].label);
  }
  return mb;
}

inline std::vector<double> targets_of(const std::vector<Graph>& graphs, TargetMode mode) {
  std::vector<double> y;
  y.reserve(graphs.size());
  for (const Graph& g : graphs) {
    if (!g.target) throw ValidationError("train: graph '" + g.id + "' has no target");
    y.push_back(*g.target);
  }
  if (mode == TargetMode::normalized_rank) return normalized_ranks(y);
  return y;
}

}  // namespace detail

/// Trains the model in place. Pairwise mode samples M = alpha * N ordered
/// preference pairs once and optimizes BCE over shuffled minibatches, with
/// one embedding pass per distinct graph in each minibatch. Point-wise
/// modes regress on the original target or the normalized rank with MSE.
///
/// Early stopping: training stops once the validation loss has not improved
/// by at least min_delta for `patience` consecutive epochs; the returned
/// parameters are those of the epoch with the lowest validation loss.
inline TrainResult train(Model& model, const std::vector<Graph>& train_graphs,
                         const std::vector<Graph>& valid_graphs, const TrainConfig& cfg) {
  cfg.validate();
  if (train_graphs.empty()) throw ValidationError("train: empty training split");
  if (valid_graphs.empty()) throw ValidationError("train: empty validation split");

  const bool pairwise = cfg.target_mode == TargetMode::pairwise;

  std::vector<PreferencePair> train_pairs, valid_pairs;
  std::vector<double> train_targets, valid_targets;
  if (pairwise) {
    train_pairs = sample_pairs(train_graphs, cfg.alpha, derive_seed(cfg.seed, "train-pairs"));
    valid_pairs = sample_pairs(valid_graphs, cfg.alpha, derive_seed(cfg.seed, "valid-pairs"));
  } else {
    train_targets = detail::targets_of(train_graphs, cfg.target_mode);
    valid_targets = detail::targets_of(valid_graphs, cfg.target_mode);
  }

  const GraphBatch valid_batch = build_batch(valid_graphs);
  std::vector<std::size_t> valid_a, valid_b;
  std::vector<double> valid_labels;
  for (const auto& p : valid_pairs) {
    valid_a.push_back(p.a);
    valid_b.push_back(p.b);
    valid_labels.push_back(p.label);
  }

  AdamOptimizer adam;
  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));

  const std::size_t n_items = pairwise ? train_pairs.size() : train_graphs.size();
  if (n_items == 0) throw ConfigError("train: no training items (alpha too small?)");
  std::vector<std::size_t> item_order(n_items);
  std::iota(item_order.begin(), item_order.end(), 0);

  TrainResult result;
  std::map<std::string, Tensor> best_params = model.params.values;
  double best_val = std::numeric_limits<double>::infinity();
  double last_improved_val = std::numeric_limits<double>::infinity();
  std::size_t epochs_without_improvement = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(item_order);
    double train_loss_acc = 0.0;

    try {
      for (std::size_t begin = 0; begin < n_items; begin += cfg.batch_size) {
        const std::size_t end = std::min(begin + cfg.batch_size, n_items);
        const std::vector<std::size_t> chunk(item_order.begin() + begin,
                                             item_order.begin() + end);
        model.params.zero_grads();
        Tape tape;
        Binder binder(tape, model.params);
        Tape::VarId loss;
        if (pairwise) {
          const auto mb = detail::make_pair_minibatch(train_pairs, chunk);
          const GraphBatch batch = build_batch(train_graphs, mb.graphs);
          const Tape::VarId z = embed(tape, binder, batch, model.embedder);
          const Tape::VarId logits =
              head_pair_logits(tape, binder, z, mb.a_local, mb.b_local, model.head);
          loss = tape.bce_with_logits(logits, mb.labels);
        } else {
          const GraphBatch batch = build_batch(train_graphs, chunk);
          const Tape::VarId z = embed(tape, binder, batch, model.embedder);
          const Tape::VarId scores = head_utilities(tape, binder, z, model.head);
          Tensor target({chunk.size(), 1});
          for (std::size_t i = 0; i < chunk.size(); ++i) target[i] = train_targets[chunk[i]];
          loss = tape.reduce_mean(tape.square(tape.sub(scores, tape.constant(target))));
        }
        tape.backward(loss);
        binder.write_grads();
        adam.step(model.params, cfg.learning_rate);
        train_loss_acc += tape.value(loss)[0] * static_cast<double>(end - begin);
      }
    } catch (const NumericError& e) {
      throw NumericError("train: epoch " + std::to_string(epoch) + ": " + e.what());
    }

    // validation loss, forward only
    double val_loss;
    {
      Tape tape;
      Binder binder(tape, model.params);
      const Tape::VarId z = embed(tape, binder, valid_batch, model.embedder);
      if (pairwise) {
        const Tape::VarId logits =
            head_pair_logits(tape, binder, z, valid_a, valid_b, model.head);
        val_loss = tape.value(tape.bce_with_logits(logits, valid_labels))[0];
      } else {
        const Tape::VarId scores = head_utilities(tape, binder, z, model.head);
        Tensor target({valid_targets.size(), 1});
        for (std::size_t i = 0; i < valid_targets.size(); ++i) target[i] = valid_targets[i];
        val_loss =
            tape.value(tape.reduce_mean(tape.square(tape.sub(scores, tape.constant(target)))))[0];
      }
    }
    if (!std::isfinite(val_loss)) {
      throw NumericError("train: epoch " + std::to_string(epoch) + ": non-finite validation loss");
    }

    result.history.push_back(
        {epoch, train_loss_acc / static_cast<double>(n_items), val_loss});

    if (val_loss < best_val) {
      best_val = val_loss;
      result.best_epoch = epoch;
      best_params = model.params.values;
    }
    if (last_improved_val - val_loss >= cfg.min_delta) {
      last_improved_val = val_loss;
      epochs_without_improvement = 0;
    } else {
      ++epochs_without_improvement;
    }
    result.stopped_epoch = epoch;
    if (epochs_without_improvement >= cfg.patience) break;
  }

  model.params.values = std::move(best_params);
  result.best_val_loss = best_val;
  return result;
}

}  // namespace graphrank
