// Command-line front end: dataset generation, training, ranking,
// evaluation, utility-curve export and hyperparameter grid search.
//
// Every command is deterministic given its seed flags; all artifacts are
// CSV/JSON/JSONL files documented in the README.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "graphrank/dataset_io.hpp"
#include "graphrank/experiment.hpp"
#include "graphrank/generators.hpp"
#include "graphrank/model.hpp"
#include "graphrank/run_config.hpp"
#include "graphrank/training.hpp"

namespace fs = std::filesystem;
using namespace graphrank;

namespace {

std::vector<double> parse_fractions(const std::string& spec) {
  std::vector<double> fractions;
  std::size_t begin = 0;
  for (std::size_t i = 0; i <= spec.size(); ++i) {
    if (i == spec.size() || spec[i] == ',') {
      fractions.push_back(std::stod(spec.substr(begin, i - begin)));
      begin = i + 1;
    }
  }
  if (fractions.size() != 3) {
    throw ConfigError("--splits: expected three comma-separated fractions");
  }
  double sum = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw ConfigError("--splits: fractions must be non-negative");
    sum += f;
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw ConfigError("--splits: fractions must sum to 1");
  return fractions;
}

/// Largest-remainder split sizes, exact for exact fractions.
std::vector<std::size_t> split_counts(std::size_t n, const std::vector<double>& fractions) {
  std::vector<std::size_t> counts(fractions.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double exact = fractions[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    assigned += counts[i];
    remainders.push_back({exact - std::floor(exact + 1e-9), i});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) {
    counts[remainders[k % remainders.size()].second] += 1;
  }
  return counts;
}

int cmd_generate(const std::string& task, std::size_t n, std::size_t min_nodes,
                 std::size_t max_nodes, std::uint64_t seed, const std::string& splits,
                 const std::string& out_dir) {
  const auto fractions = parse_fractions(splits);
  std::vector<Graph> graphs;
  if (task == "triangles") {
    graphs = generate_triangles_dataset(n, min_nodes, max_nodes, seed);
  } else if (task == "edgecount") {
    graphs = generate_edgecount_dataset(n, min_nodes, max_nodes, seed);
  } else {
    throw ConfigError("--task: expected 'triangles' or 'edgecount'");
  }

  std::vector<std::size_t> order(graphs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(order);
  const auto counts = split_counts(graphs.size(), fractions);

  fs::create_directories(out_dir);
  const char* names[3] = {"train", "valid", "test"};
  std::size_t cursor = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    std::vector<Graph> part;
    part.reserve(counts[s]);
    for (std::size_t i = 0; i < counts[s]; ++i) part.push_back(graphs[order[cursor++]]);
    if (part.empty()) {
      std::cerr << "warning: split '" << names[s] << "' is empty\n";
    }
    save_dataset(out_dir + "/" + names[s] + ".jsonl", part);
  }
  std::cout << "wrote " << counts[0] << "/" << counts[1] << "/" << counts[2]
            << " graphs to " << out_dir << "\n";
  return 0;
}

MetricRow tau_row(Model& model, const std::vector<Graph>& graphs, const std::string& dataset,
                  const std::string& split, std::size_t repeat, std::uint64_t seed) {
  return {dataset, model.name(), repeat, split, evaluate_tau(model, graphs, seed)};
}

int cmd_train(const std::string& config_path, const std::string& out_override,
              std::int64_t seed_override) {
  RunConfig cfg = load_run_config(config_path);
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (seed_override >= 0) cfg.train.seed = static_cast<std::uint64_t>(seed_override);
  if (cfg.head.kind == HeadKind::cmpnn && cfg.train.target_mode != TargetMode::pairwise) {
    throw IncompatibleError("CmpNN head requires target_mode 'pairwise'");
  }

  const auto train_graphs = load_dataset(cfg.train_path);
  const auto valid_graphs = load_dataset(cfg.valid_path);
  const auto test_graphs = load_dataset(cfg.test_path);
  if (train_graphs.empty()) throw ValidationError("training split is empty");

  const std::size_t feature_dim = std::max<std::size_t>(train_graphs[0].feature_dim(), 1);
  Model model = make_model(cfg.embedder, cfg.head, feature_dim, cfg.train.seed);
  const TrainResult result = train(model, train_graphs, valid_graphs, cfg.train);

  fs::create_directories(cfg.out_dir);
  write_history_csv(cfg.out_dir + "/history.csv", result.history);
  save_checkpoint(model, cfg.out_dir + "/checkpoint.json");

  std::vector<MetricRow> metrics;
  const std::string dataset = fs::path(cfg.train_path).stem().string();
  metrics.push_back(tau_row(model, valid_graphs, dataset, "valid", 0,
                            derive_seed(cfg.train.seed, "rank-valid")));
  metrics.push_back(tau_row(model, test_graphs, dataset, "test", 0,
                            derive_seed(cfg.train.seed, "rank-test")));
  write_metrics_csv(cfg.out_dir + "/metrics.csv", metrics);

  std::cout << "model " << model.name() << " stopped at epoch " << result.stopped_epoch
            << " (best " << result.best_epoch << ", val loss "
            << format_double(result.best_val_loss) << ")\n";
  for (const auto& row : metrics) {
    std::cout << row.split << " tau_b " << format_double(row.tau_b) << "\n";
  }
  return 0;
}

int cmd_rank(const std::string& checkpoint_path, const std::string& data_path,
             const std::string& method_name, std::uint64_t seed, const std::string& out_path) {
  Model model = load_checkpoint(checkpoint_path);
  const auto graphs = load_dataset(data_path);
  if (!graphs.empty() && std::max<std::size_t>(graphs[0].feature_dim(), 1) != model.feature_dim) {
    throw IncompatibleError("checkpoint expects feature dim " +
                            std::to_string(model.feature_dim) + ", dataset has " +
                            std::to_string(std::max<std::size_t>(graphs[0].feature_dim(), 1)));
  }
  const RankMethod method = rank_method_from_string(method_name);
  const Ranking ranking = rank_graphs(model, graphs, method, seed);

  std::vector<double> utilities;
  const std::vector<double>* utilities_ptr = nullptr;
  if (model.has_utility() && !graphs.empty()) {
    utilities = model_utilities(model, embed_graphs(model, build_batch(graphs)));
    utilities_ptr = &utilities;
  }
  write_ranking_csv(out_path, ranking, graphs, utilities_ptr);
  std::cout << "ranked " << graphs.size() << " graphs with " << to_string(method)
            << ", comparator_calls=" << ranking.comparator_calls << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& data_path,
             const std::string& split, std::size_t repeat, std::uint64_t seed,
             const std::string& out_path) {
  Model model = load_checkpoint(checkpoint_path);
  const auto graphs = load_dataset(data_path);
  const std::string dataset = fs::path(data_path).stem().string();
  std::vector<MetricRow> rows{tau_row(model, graphs, dataset, split, repeat, seed)};
  if (!out_path.empty()) write_metrics_csv(out_path, rows);
  std::cout << "tau_b " << format_double(rows[0].tau_b) << "\n";
  return 0;
}

int cmd_curve(const std::string& checkpoint_path, const std::string& data_path,
              const std::string& out_path) {
  Model model = load_checkpoint(checkpoint_path);
  if (!model.has_utility()) {
    throw IncompatibleError("utility curve requires a DirectRanker or point-wise head");
  }
  const auto graphs = load_dataset(data_path);
  if (graphs.empty()) throw ValidationError("dataset is empty");
  const auto scores = model_utilities(model, embed_graphs(model, build_batch(graphs)));
  std::vector<double> targets;
  targets.reserve(graphs.size());
  for (const Graph& g : graphs) {
    if (!g.target) throw ValidationError("graph '" + g.id + "' has no target");
    targets.push_back(*g.target);
  }
  const UtilityCurve curve = utility_curve(scores, targets);
  if (curve.degenerate_scores) {
    std::cerr << "warning: constant scores, curve degenerates to 0.5\n";
  }
  write_curve_csv(out_path, curve);
  std::cout << "wrote " << curve.normalized_scores.size() << " curve points\n";
  return 0;
}

int cmd_grid(const std::string& config_path, std::size_t repeats_flag, std::size_t jobs,
             const std::string& out_override) {
  std::ifstream in(config_path);
  if (!in) throw IoError("cannot open config '" + config_path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config '" + config_path + "': " + e.what());
  }

  RunConfig base = run_config_from_json(j);
  if (!out_override.empty()) base.out_dir = out_override;
  if (j.contains("conv_type")) {
    base.embedder.conv_type = conv_type_from_string(j.at("conv_type").get<std::string>());
  }
  if (j.contains("head_kind")) {
    base.head.kind = head_kind_from_string(j.at("head_kind").get<std::string>());
  }

  GridSpec grid;
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    if (g.contains("widths")) grid.widths = g.at("widths").get<std::vector<std::size_t>>();
    if (g.contains("conv_layers")) {
      grid.conv_layers = g.at("conv_layers").get<std::vector<std::size_t>>();
    }
    if (g.contains("poolings")) {
      grid.poolings.clear();
      for (const auto& p : g.at("poolings")) {
        grid.poolings.push_back(pooling_from_string(p.get<std::string>()));
      }
    }
    if (g.contains("learning_rates")) {
      grid.learning_rates = g.at("learning_rates").get<std::vector<double>>();
    }
  }

  const auto train_graphs = load_dataset(base.train_path);
  const auto valid_graphs = load_dataset(base.valid_path);
  const auto test_graphs = load_dataset(base.test_path);

  GridContext ctx;
  ctx.embedder = base.embedder;
  ctx.head = base.head;
  ctx.train = base.train;
  ctx.train_graphs = &train_graphs;
  ctx.valid_graphs = &valid_graphs;
  ctx.test_graphs = &test_graphs;
  ctx.repeats = repeats_flag > 0 ? repeats_flag
                                 : (j.contains("repeats") ? j.at("repeats").get<std::size_t>() : 3);
  ctx.jobs = jobs;
  ctx.base_seed = base.train.seed;

  fs::create_directories(base.out_dir);
  const GridOutcome outcome = grid_search(grid, ctx, base.out_dir + "/results.csv");

  RunConfig best = base;
  best.embedder.width = outcome.best.width;
  best.embedder.conv_layers = outcome.best.conv_layers;
  best.embedder.pooling = outcome.best.pooling;
  best.head.hidden_dim = outcome.best.width;
  best.train.learning_rate = outcome.best.learning_rate;
  best.out_dir = base.out_dir + "/best";
  {
    std::ofstream out(base.out_dir + "/best_config.json");
    if (!out) throw IoError("cannot write best_config.json");
    out << run_config_to_json(best).dump(2) << "\n";
  }
  std::cout << "grid finished: " << outcome.rows.size() << " rows (" << outcome.skipped
            << " restored), best " << outcome.best.key() << " mean val tau_b "
            << format_double(outcome.best_mean_val_tau) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graph learning-to-rank trainer and ranker"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "generate a synthetic dataset with splits");
  std::string gen_task = "edgecount";
  std::size_t gen_n = 500, gen_min = 5, gen_max = 30;
  std::uint64_t gen_seed = 0;
  std::string gen_splits = "0.8,0.1,0.1";
  std::string gen_out = "data";
  gen->add_option("--task", gen_task, "triangles or edgecount");
  gen->add_option("--n", gen_n, "number of graphs");
  gen->add_option("--min-nodes", gen_min, "minimum node count");
  gen->add_option("--max-nodes", gen_max, "maximum node count");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--splits", gen_splits, "train,valid,test fractions");
  gen->add_option("--out", gen_out, "output directory");

  // train
  auto* tr = app.add_subcommand("train", "train a model from a run config");
  std::string train_config;
  std::string train_out;
  std::int64_t train_seed = -1;
  tr->add_option("--config", train_config, "run config JSON")->required();
  tr->add_option("--out", train_out, "output directory override");
  tr->add_option("--seed", train_seed, "seed override");

  // rank
  auto* rk = app.add_subcommand("rank", "rank a dataset with a trained model");
  std::string rank_ckpt, rank_data, rank_method = "quicksort", rank_out = "ranking.csv";
  std::uint64_t rank_seed = 0;
  rk->add_option("--checkpoint", rank_ckpt, "checkpoint JSON")->required();
  rk->add_option("--data", rank_data, "dataset JSONL")->required();
  rk->add_option("--method", rank_method, "quicksort, utility or borda");
  rk->add_option("--seed", rank_seed, "pivot seed");
  rk->add_option("--out", rank_out, "ranking CSV path");

  // eval
  auto* ev = app.add_subcommand("eval", "compute tau_b of a model on a dataset");
  std::string eval_ckpt, eval_data, eval_split = "test", eval_out;
  std::size_t eval_repeat = 0;
  std::uint64_t eval_seed = 0;
  ev->add_option("--checkpoint", eval_ckpt, "checkpoint JSON")->required();
  ev->add_option("--data", eval_data, "dataset JSONL")->required();
  ev->add_option("--split", eval_split, "split label for the report");
  ev->add_option("--repeat", eval_repeat, "repeat index for the report");
  ev->add_option("--seed", eval_seed, "ranking seed (CmpNN quicksort)");
  ev->add_option("--out", eval_out, "metrics CSV path");

  // curve
  auto* cv = app.add_subcommand("curve", "export the normalized utility curve");
  std::string curve_ckpt, curve_data, curve_out = "curve.csv";
  cv->add_option("--checkpoint", curve_ckpt, "checkpoint JSON")->required();
  cv->add_option("--data", curve_data, "dataset JSONL")->required();
  cv->add_option("--out", curve_out, "curve CSV path");

  // grid
  auto* gr = app.add_subcommand("grid", "hyperparameter grid search");
  std::string grid_config, grid_out;
  std::size_t grid_repeats = 0, grid_jobs = 1;
  gr->add_option("--config", grid_config, "grid config JSON")->required();
  gr->add_option("--repeats", grid_repeats, "training repeats per configuration");
  gr->add_option("--jobs", grid_jobs, "concurrent configurations");
  gr->add_option("--out", grid_out, "output directory override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[usage]: " << e.what() << "\n";
    return 2;
  }

  try {
    if (gen->parsed()) {
      return cmd_generate(gen_task, gen_n, gen_min, gen_max, gen_seed, gen_splits, gen_out);
    }
    if (tr->parsed()) return cmd_train(train_config, train_out, train_seed);
    if (rk->parsed()) return cmd_rank(rank_ckpt, rank_data, rank_method, rank_seed, rank_out);
    if (ev->parsed()) {
      return cmd_eval(eval_ckpt, eval_data, eval_split, eval_repeat, eval_seed, eval_out);
    }
    if (cv->parsed()) return cmd_curve(curve_ckpt, curve_data, curve_out);
    if (gr->parsed()) return cmd_grid(grid_config, grid_repeats, grid_jobs, grid_out);
  } catch (const Error& e) {
    std::cerr << "error[" << e.category() << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
