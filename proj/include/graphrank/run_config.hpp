#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "graphrank/experiment.hpp"
#include "graphrank/training.hpp"

namespace graphrank {

/// One training run: dataset split paths, embedder, head, training
/// hyperparameters and the output directory. JSON on disk.
struct RunConfig {
  std::string train_path, valid_path, test_path;
  EmbedderConfig embedder;
  HeadConfig head;
  TrainConfig train;
  std::string out_dir = ".";
};

namespace detail {

template <typename T>
T get_field(const nlohmann::json& j, const std::string& path, const std::string& field,
            const T& fallback, bool required = false) {
  if (!j.contains(field)) {
    if (required) throw ConfigError(path + field + ": required field missing");
    return fallback;
  }
  try {
    return j.at(field).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + field + ": wrong type");
  }
}

}  // namespace detail

inline TrainConfig train_config_from_json(const nlohmann::json& j, const std::string& path) {
  TrainConfig c;
  c.alpha = detail::get_field(j, path, "alpha", c.alpha);
  c.learning_rate = detail::get_field(j, path, "learning_rate", c.learning_rate);
  c.max_epochs = detail::get_field(j, path, "max_epochs", c.max_epochs);
  c.patience = detail::get_field(j, path, "patience", c.patience);
  c.min_delta = detail::get_field(j, path, "min_delta", c.min_delta);
  c.batch_size = detail::get_field(j, path, "batch_size", c.batch_size);
  c.seed = detail::get_field(j, path, "seed", c.seed);
  if (j.contains("target_mode")) {
    try {
      c.target_mode = target_mode_from_string(j.at("target_mode").get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(path + "target_mode: " + e.what());
    }
  }
  c.validate();
  return c;
}

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {{"alpha", c.alpha},
          {"learning_rate", c.learning_rate},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"min_delta", c.min_delta},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"target_mode", to_string(c.target_mode)}};
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  if (!j.contains("data")) throw ConfigError("data: required section missing");
  const auto& data = j.at("data");
  cfg.train_path = detail::get_field<std::string>(data, "data.", "train", "", true);
  cfg.valid_path = detail::get_field<std::string>(data, "data.", "valid", "", true);
  cfg.test_path = detail::get_field<std::string>(data, "data.", "test", "", true);
  try {
    if (j.contains("embedder")) cfg.embedder = embedder_from_json(j.at("embedder"));
    if (j.contains("head")) cfg.head = head_from_json(j.at("head"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("embedder/head: ") + e.what());
  }
  if (j.contains("train")) cfg.train = train_config_from_json(j.at("train"), "train.");
  cfg.out_dir = detail::get_field<std::string>(j, "", "out_dir", cfg.out_dir);
  return cfg;
}

inline nlohmann::json run_config_to_json(const RunConfig& cfg) {
  return {{"data",
           {{"train", cfg.train_path}, {"valid", cfg.valid_path}, {"test", cfg.test_path}}},
          {"embedder", embedder_to_json(cfg.embedder)},
          {"head", head_to_json(cfg.head)},
          {"train", train_config_to_json(cfg.train)},
          {"out_dir", cfg.out_dir}};
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config '" + path + "': " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace graphrank
