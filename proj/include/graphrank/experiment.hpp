#pragma once

#include <atomic>
#include <cstdio>
#include <fstream>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "graphrank/dataset_io.hpp"
#include "graphrank/metrics.hpp"
#include "graphrank/ranking.hpp"
#include "graphrank/training.hpp"

namespace graphrank {

enum class RankMethod { quicksort, utility, borda };

inline const char* to_string(RankMethod m) {
  switch (m) {
    case RankMethod::quicksort: return "quicksort";
    case RankMethod::utility: return "utility";
    case RankMethod::borda: return "borda";
  }
  return "?";
}

inline RankMethod rank_method_from_string(const std::string& s) {
  if (s == "quicksort") return RankMethod::quicksort;
  if (s == "utility") return RankMethod::utility;
  if (s == "borda") return RankMethod::borda;
  throw ConfigError("unknown rank method '" + s + "' (expected quicksort, utility or borda)");
}

/// Prints a double with enough digits to reparse bit-exactly; keeps CSV
/// artifacts byte-stable across identical runs.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Batched comparator backed by a trained model over fixed embeddings.
inline CompareBatchFn model_comparator(Model& model, Tensor embeddings) {
  auto z = std::make_shared<Tensor>(std::move(embeddings));
  return [&model, z](const std::vector<std::pair<std::size_t, std::size_t>>& queries) {
    return model_pair_outputs(model, *z, queries);
  };
}

inline UtilityBatchFn model_utility_oracle(Model& model, Tensor embeddings) {
  auto z = std::make_shared<Tensor>(std::move(embeddings));
  return [&model, z](std::size_t n) {
    auto u = model_utilities(model, *z);
    if (u.size() != n) throw ValidationError("utility oracle: size mismatch");
    return u;
  };
}

/// Ranks a graph list with the chosen method. The graphs are embedded once;
/// every oracle invocation is a single batched head evaluation.
inline Ranking rank_graphs(Model& model, const std::vector<Graph>& graphs, RankMethod method,
                           std::uint64_t seed) {
  for (const Graph& g : graphs) g.validate();
  const GraphBatch batch = build_batch(graphs);
  if ((method == RankMethod::utility) && !model.has_utility()) {
    throw IncompatibleError("utility ranking requires a DirectRanker or point-wise head");
  }
  Tensor z = embed_graphs(model, batch);
  switch (method) {
    case RankMethod::utility:
      return utility_rank(graphs.size(), model_utility_oracle(model, std::move(z)));
    case RankMethod::borda:
      return borda_rank(graphs.size(), model_comparator(model, std::move(z)));
    case RankMethod::quicksort:
      return quicksort_rank(graphs.size(), model_comparator(model, std::move(z)), seed);
  }
  throw ConfigError("unknown rank method");
}

/// Default method per head: O(1) utility pass when the head has one,
/// batched quicksort otherwise.
inline RankMethod default_rank_method(const Model& model) {
  return model.has_utility() ? RankMethod::utility : RankMethod::quicksort;
}

/// Kendall tau_B of the model's ranking against the ground-truth targets.
inline double evaluate_tau(Model& model, const std::vector<Graph>& graphs, std::uint64_t seed) {
  const Ranking ranking = rank_graphs(model, graphs, default_rank_method(model), seed);
  std::vector<std::string> ids;
  ids.reserve(graphs.size());
  for (const Graph& g : graphs) ids.push_back(g.id);
  return kendall_tau_b(RankAssignment::from_ranking(ranking, ids),
                       RankAssignment::from_targets(graphs));
}

// ---- CSV artifacts ----

inline void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "epoch,train_loss,val_loss\n";
  for (const auto& r : history) {
    out << r.epoch << "," << format_double(r.train_loss) << "," << format_double(r.val_loss)
        << "\n";
  }
}

struct MetricRow {
  std::string dataset;
  std::string model;
  std::size_t repeat = 0;
  std::string split;
  double tau_b = 0.0;
};

inline void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "dataset,model,repeat,split,tau_b\n";
  for (const auto& r : rows) {
    out << r.dataset << "," << r.model << "," << r.repeat << "," << r.split << ","
        << format_double(r.tau_b) << "\n";
  }
}

inline void write_ranking_csv(const std::string& path, const Ranking& ranking,
                              const std::vector<Graph>& graphs,
                              const std::vector<double>* utilities) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "rank_position,graph_id,utility\n";
  for (std::size_t pos = 0; pos < ranking.order.size(); ++pos) {
    const std::size_t idx = ranking.order[pos];
    out << pos << "," << graphs[idx].id << ",";
    if (utilities) out << format_double((*utilities)[idx]);
    out << "\n";
  }
}

inline void write_curve_csv(const std::string& path, const UtilityCurve& curve) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "index,normalized_score,normalized_target\n";
  for (std::size_t i = 0; i < curve.normalized_scores.size(); ++i) {
    out << i << "," << format_double(curve.normalized_scores[i]) << ","
        << format_double(curve.normalized_targets[i]) << "\n";
  }
}

// ---- grid search ----

/// Cartesian hyperparameter grid. Defaults are the full 2x2x3x3 = 36
/// configuration search.
struct GridSpec {
  std::vector<std::size_t> widths{32, 64};
  std::vector<std::size_t> conv_layers{3, 5};
  std::vector<PoolingType> poolings{PoolingType::mean, PoolingType::sum, PoolingType::softmax};
  std::vector<double> learning_rates{1e-2, 1e-3, 1e-4};

  void validate() const {
    if (widths.empty() || conv_layers.empty() || poolings.empty() || learning_rates.empty()) {
      throw ConfigError("grid: every dimension needs at least one value");
    }
  }
};

struct GridPoint {
  std::size_t width = 32;
  std::size_t conv_layers = 3;
  PoolingType pooling = PoolingType::sum;
  double learning_rate = 1e-3;

  /// Lexicographic identity used for seeds, resume bookkeeping and
  /// deterministic tie-breaking.
  std::string key() const {
    return "width=" + std::to_string(width) + ",layers=" + std::to_string(conv_layers) +
           ",pool=" + to_string(pooling) + ",lr=" + format_double(learning_rate);
  }
};

inline std::vector<GridPoint> enumerate_grid(const GridSpec& grid) {
  grid.validate();
  std::vector<GridPoint> points;
  for (std::size_t w : grid.widths) {
    for (std::size_t layers : grid.conv_layers) {
      for (PoolingType pool : grid.poolings) {
        for (double lr : grid.learning_rates) {
          points.push_back({w, layers, pool, lr});
        }
      }
    }
  }
  return points;
}

struct GridRowResult {
  GridPoint point;
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  double val_tau = 0.0;
  double test_tau = 0.0;
  std::size_t best_epoch = 0;
  std::string status = "ok";  // "ok" or "error"
  std::string error;
};

struct GridOutcome {
  std::vector<GridRowResult> rows;
  GridPoint best;
  double best_mean_val_tau = 0.0;
  std::size_t skipped = 0;  // rows restored from a previous results file
};

struct GridContext {
  EmbedderConfig embedder;  // width/layers/pooling overridden per point
  HeadConfig head;
  TrainConfig train;        // learning_rate overridden per point
  const std::vector<Graph>* train_graphs = nullptr;
  const std::vector<Graph>* valid_graphs = nullptr;
  const std::vector<Graph>* test_graphs = nullptr;
  std::size_t repeats = 3;
  std::size_t jobs = 1;
  std::uint64_t base_seed = 0;
};

namespace detail {

inline GridRowResult run_grid_row(const GridContext& ctx, const GridPoint& point,
                                  std::size_t repeat) {
  GridRowResult row;
  row.point = point;
  row.repeat = repeat;
  row.seed = derive_seed(ctx.base_seed, point.key(), repeat);
  try {
    EmbedderConfig embedder = ctx.embedder;
    embedder.width = point.width;
    embedder.conv_layers = point.conv_layers;
    embedder.pooling = point.pooling;
    HeadConfig head = ctx.head;
    head.hidden_dim = point.width;
    TrainConfig train_cfg = ctx.train;
    train_cfg.learning_rate = point.learning_rate;
    train_cfg.seed = row.seed;

    const std::size_t feature_dim =
        ctx.train_graphs->empty() ? 1 : (*ctx.train_graphs)[0].feature_dim();
    Model model = make_model(embedder, head, std::max<std::size_t>(feature_dim, 1), row.seed);
    const TrainResult tr = train(model, *ctx.train_graphs, *ctx.valid_graphs, train_cfg);
    row.best_epoch = tr.best_epoch;
    row.val_tau = evaluate_tau(model, *ctx.valid_graphs, derive_seed(row.seed, "rank-valid"));
    row.test_tau = evaluate_tau(model, *ctx.test_graphs, derive_seed(row.seed, "rank-test"));
  } catch (const std::exception& e) {
    row.status = "error";
    row.error = e.what();
    row.val_tau = row.test_tau = -2.0;  // below any attainable tau
  }
  return row;
}

inline std::string grid_csv_header() {
  return "width,conv_layers,pooling,learning_rate,repeat,seed,val_tau_b,test_tau_b,"
         "best_epoch,status,error";
}

inline std::string grid_row_csv(const GridRowResult& r) {
  std::ostringstream out;
  out << r.point.width << "," << r.point.conv_layers << "," << to_string(r.point.pooling) << ","
      << format_double(r.point.learning_rate) << "," << r.repeat << "," << r.seed << ","
      << format_double(r.val_tau) << "," << format_double(r.test_tau) << "," << r.best_epoch
      << "," << r.status << "," << r.error;
  return out.str();
}

}  // namespace detail

/// Reads rows of a previous (possibly interrupted) grid run so finished
/// (config, repeat) cells are not recomputed.
inline std::vector<GridRowResult> load_grid_results(const std::string& path) {
  std::vector<GridRowResult> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t begin = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        fields.push_back(line.substr(begin, i - begin));
        begin = i + 1;
        if (fields.size() == 10) break;  // the error field may contain commas
      }
    }
    if (begin <= line.size() && fields.size() == 10) fields.push_back(line.substr(begin));
    if (fields.size() < 11) throw ParseError("grid results '" + path + "': malformed row");
    GridRowResult r;
    r.point.width = std::stoul(fields[0]);
    r.point.conv_layers = std::stoul(fields[1]);
    r.point.pooling = pooling_from_string(fields[2]);
    r.point.learning_rate = std::stod(fields[3]);
    r.repeat = std::stoul(fields[4]);
    r.seed = std::stoull(fields[5]);
    r.val_tau = std::stod(fields[6]);
    r.test_tau = std::stod(fields[7]);
    r.best_epoch = std::stoul(fields[8]);
    r.status = fields[9];
    r.error = fields[10];
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Trains every grid point `repeats` times and selects the configuration
/// with the highest mean validation tau_B (ties broken lexicographically by
/// config key). Rows stream into `results_path` as they finish, the file is
/// rewritten in deterministic order at the end, and rows already present
/// are not recomputed. Per-config failures are recorded and skipped at
/// selection. Jobs > 1 runs points concurrently; results are independent of
/// scheduling because seeds derive from (config key, repeat, base seed).
inline GridOutcome grid_search(const GridSpec& grid, const GridContext& ctx,
                               const std::string& results_path) {
  const std::vector<GridPoint> points = enumerate_grid(grid);

  std::set<std::pair<std::string, std::size_t>> done;
  std::vector<GridRowResult> rows;
  if (!results_path.empty()) {
    for (auto& r : load_grid_results(results_path)) {
      if (done.emplace(r.point.key(), r.repeat).second) rows.push_back(std::move(r));
    }
  }
  GridOutcome outcome;
  outcome.skipped = rows.size();

  struct Task {
    GridPoint point;
    std::size_t repeat;
  };
  std::vector<Task> tasks;
  for (const GridPoint& p : points) {
    for (std::size_t rep = 0; rep < ctx.repeats; ++rep) {
      if (!done.count({p.key(), rep})) tasks.push_back({p, rep});
    }
  }

  std::mutex mu;
  std::ofstream appender;
  if (!results_path.empty()) {
    const bool fresh = rows.empty();
    appender.open(results_path, fresh ? std::ios::trunc : std::ios::app);
    if (!appender) throw IoError("cannot write '" + results_path + "'");
    if (fresh) appender << detail::grid_csv_header() << "\n";
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      GridRowResult row = detail::run_grid_row(ctx, tasks[t].point, tasks[t].repeat);
      std::lock_guard<std::mutex> lock(mu);
      if (appender.is_open()) appender << detail::grid_row_csv(row) << "\n" << std::flush;
      rows.push_back(std::move(row));
    }
  };
  const std::size_t n_workers = std::max<std::size_t>(1, std::min(ctx.jobs, tasks.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }

  // deterministic order: by config key, then repeat
  std::sort(rows.begin(), rows.end(), [](const GridRowResult& a, const GridRowResult& b) {
    const std::string ka = a.point.key(), kb = b.point.key();
    return ka != kb ? ka < kb : a.repeat < b.repeat;
  });
  if (!results_path.empty()) {
    appender.close();
    std::ofstream out(results_path, std::ios::trunc);
    if (!out) throw IoError("cannot rewrite '" + results_path + "'");
    out << detail::grid_csv_header() << "\n";
    for (const auto& r : rows) out << detail::grid_row_csv(r) << "\n";
  }

  // selection by mean validation tau over successful repeats
  bool have_best = false;
  for (const GridPoint& p : points) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : rows) {
      if (r.point.key() == p.key() && r.status == "ok") {
        sum += r.val_tau;
        ++count;
      }
    }
    if (count == 0) continue;
    const double mean = sum / static_cast<double>(count);
    const bool better =
        !have_best || mean > outcome.best_mean_val_tau ||
        (mean == outcome.best_mean_val_tau && p.key() < outcome.best.key());
    if (better) {
      outcome.best = p;
      outcome.best_mean_val_tau = mean;
      have_best = true;
    }
  }
  if (!have_best) throw ValidationError("grid_search: every configuration failed");
  outcome.rows = std::move(rows);
  return outcome;
}

}  // namespace graphrank
