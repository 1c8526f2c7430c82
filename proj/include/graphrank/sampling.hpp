#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "graphrank/errors.hpp"
#include "graphrank/graph.hpp"
#include "graphrank/rng.hpp"

namespace graphrank {

/// Draws round(alpha * N) ordered index pairs (a, b), a != b, uniformly with
/// replacement, labeled 1 when target_a > target_b and 0 when smaller.
/// Tied pairs carry no binary preference and are redrawn.
inline std::vector<PreferencePair> sample_pairs(const std::vector<Graph>& graphs, double alpha,
                                                std::uint64_t seed) {
  const std::size_t n = graphs.size();
  if (n < 2) throw ValidationError("sample_pairs: need at least 2 graphs");
  if (alpha <= 0.0) throw ConfigError("sample_pairs: alpha must be positive");
  for (const Graph& g : graphs) {
    if (!g.target) {
      throw ValidationError("sample_pairs: graph '" + g.id + "' has no target");
    }
  }
  const double first = *graphs[0].target;
  bool any_distinct = false;
  for (const Graph& g : graphs) {
    if (*g.target != first) {
      any_distinct = true;
      break;
    }
  }
  if (!any_distinct) {
    throw ValidationError("sample_pairs: all targets equal, no pair can be labeled");
  }

  const std::size_t m = static_cast<std::size_t>(std::llround(alpha * static_cast<double>(n)));
  Rng rng(seed);
  std::vector<PreferencePair> pairs;
  pairs.reserve(m);
  while (pairs.size() < m) {
    const std::size_t a = rng.index(n);
    std::size_t b = rng.index(n - 1);
    if (b >= a) ++b;
    const double ya = *graphs[a].target;
    const double yb = *graphs[b].target;
    if (ya == yb) continue;  // redraw
    pairs.push_back({a, b, ya > yb ? 1.0 : 0.0});
  }
  return pairs;
}

/// Normalized ordinal index of each element when sorted ascending by value:
/// rank position / (N - 1), ties sharing the mean of their positional
/// indices. A single element gets 0.
inline std::vector<double> normalized_ranks(const std::vector<double>& targets) {
  const std::size_t n = targets.size();
  if (n == 0) return {};
  if (n == 1) return {0.0};
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return targets[a] < targets[b]; });
  std::vector<double> ranks(n, 0.0);
  const double denom = static_cast<double>(n - 1);
  std::size_t begin = 0;
  while (begin < n) {
    std::size_t end = begin;
    while (end < n && targets[order[end]] == targets[order[begin]]) ++end;
    const double mean_pos = 0.5 * static_cast<double>(begin + end - 1);
    for (std::size_t i = begin; i < end; ++i) ranks[order[i]] = mean_pos / denom;
    begin = end;
  }
  return ranks;
}

}  // namespace graphrank
