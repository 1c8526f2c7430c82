#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphrank/errors.hpp"
#include "graphrank/graph.hpp"

namespace graphrank {

/// Dataset files are JSON Lines, one graph per line:
///   {"id": str, "num_nodes": int, "edges": [[int,int],...],
///    "features": [[float,...],...] (optional), "target": float (optional)}
inline std::vector<Graph> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file '" + path + "'");
  std::vector<Graph> graphs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    Graph g;
    try {
      g.id = j.at("id").get<std::string>();
      g.num_nodes = j.at("num_nodes").get<std::size_t>();
      for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2) {
          throw ParseError(path + ":" + std::to_string(lineno) + ": edge must be a pair");
        }
        g.edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
      }
      if (j.contains("features")) {
        const auto& rows = j.at("features");
        const std::size_t r = rows.size();
        const std::size_t c = r > 0 ? rows[0].size() : 0;
        Tensor feat({r, c});
        for (std::size_t i = 0; i < r; ++i) {
          if (rows[i].size() != c) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": ragged feature rows");
          }
          for (std::size_t k = 0; k < c; ++k) feat.at(i, k) = rows[i][k].get<double>();
        }
        g.node_features = std::move(feat);
      }
      if (j.contains("target")) g.target = j.at("target").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    g.validate();
    graphs.push_back(std::move(g));
  }
  return graphs;
}

inline void save_dataset(const std::string& path, const std::vector<Graph>& graphs) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset file '" + path + "'");
  for (const Graph& g : graphs) {
    nlohmann::json j;
    j["id"] = g.id;
    j["num_nodes"] = g.num_nodes;
    auto edges = nlohmann::json::array();
    for (const auto& [u, v] : g.edges) edges.push_back({u, v});
    j["edges"] = std::move(edges);
    if (g.node_features) {
      auto rows = nlohmann::json::array();
      for (std::size_t i = 0; i < g.node_features->rows(); ++i) {
        auto row = nlohmann::json::array();
        for (std::size_t k = 0; k < g.node_features->cols(); ++k) {
          row.push_back(g.node_features->at(i, k));
        }
        rows.push_back(std::move(row));
      }
      j["features"] = std::move(rows);
    }
    if (g.target) j["target"] = *g.target;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace graphrank
