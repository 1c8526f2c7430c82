#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "graphrank/errors.hpp"
#include "graphrank/graph.hpp"
#include "graphrank/ranking.hpp"

namespace graphrank {

/// Rank value per graph id; lower value = more preferred. Built either from
/// a model Ranking (positions) or from raw targets (negated, since larger
/// utility means more preferred).
struct RankAssignment {
  std::map<std::string, double> ranks;

  static RankAssignment from_ranking(const Ranking& ranking,
                                     const std::vector<std::string>& ids) {
    RankAssignment r;
    for (std::size_t pos = 0; pos < ranking.order.size(); ++pos) {
      r.ranks[ids[ranking.order[pos]]] = static_cast<double>(pos);
    }
    return r;
  }

  static RankAssignment from_targets(const std::vector<Graph>& graphs) {
    RankAssignment r;
    for (const Graph& g : graphs) {
      if (!g.target) {
        throw ValidationError("rank assignment: graph '" + g.id + "' has no target");
      }
      r.ranks[g.id] = -*g.target;
    }
    return r;
  }
};

namespace detail {

struct TauCounts {
  std::int64_t concordant = 0;
  std::int64_t discordant = 0;
  std::int64_t tied_first_only = 0;
  std::int64_t tied_second_only = 0;
};

/// Joins two assignments over identical key sets into rank-value pairs.
inline std::vector<std::pair<double, double>> join_ranks(const RankAssignment& r1,
                                                         const RankAssignment& r2) {
  if (r1.ranks.size() != r2.ranks.size()) {
    throw ValidationError("kendall_tau_b: assignments rank different item sets");
  }
  std::vector<std::pair<double, double>> xy;
  xy.reserve(r1.ranks.size());
  auto it2 = r2.ranks.begin();
  for (auto it1 = r1.ranks.begin(); it1 != r1.ranks.end(); ++it1, ++it2) {
    if (it1->first != it2->first) {
      throw ValidationError("kendall_tau_b: assignments rank different item sets ('" +
                            it1->first + "' vs '" + it2->first + "')");
    }
    xy.emplace_back(it1->second, it2->second);
  }
  return xy;
}

/// Strict inversions of the second component when sorted by the first
/// (merge-sort count); with the input sorted by (first asc, second asc)
/// this is exactly the discordant pair count.
inline std::int64_t merge_count_inversions(std::vector<double>& v) {
  std::int64_t inversions = 0;
  std::vector<double> buf(v.size());
  for (std::size_t width = 1; width < v.size(); width *= 2) {
    for (std::size_t lo = 0; lo + width < v.size(); lo += 2 * width) {
      const std::size_t mid = lo + width;
      const std::size_t hi = std::min(lo + 2 * width, v.size());
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (v[j] < v[i]) {
          inversions += static_cast<std::int64_t>(mid - i);
          buf[k++] = v[j++];
        } else {
          buf[k++] = v[i++];
        }
      }
      while (i < mid) buf[k++] = v[i++];
      while (j < hi) buf[k++] = v[j++];
      std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
    }
  }
  return inversions;
}

inline std::int64_t tied_pairs(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::int64_t total = 0;
  std::size_t begin = 0;
  while (begin < values.size()) {
    std::size_t end = begin;
    while (end < values.size() && values[end] == values[begin]) ++end;
    const std::int64_t t = static_cast<std::int64_t>(end - begin);
    total += t * (t - 1) / 2;
    begin = end;
  }
  return total;
}

/// Pair counts via the O(n log n) sort/merge route. Doubly-tied pairs are
/// excluded from both tie counts.
inline TauCounts tau_counts(const RankAssignment& r1, const RankAssignment& r2) {
  auto xy = join_ranks(r1, r2);
  const std::int64_t n = static_cast<std::int64_t>(xy.size());
  if (n < 2) throw ValidationError("kendall_tau_b: need at least 2 items");
  const std::int64_t n0 = n * (n - 1) / 2;

  std::sort(xy.begin(), xy.end());

  std::int64_t n1 = 0;  // pairs tied in r1 (incl. doubly tied)
  std::int64_t n3 = 0;  // pairs tied in both
  {
    std::size_t begin = 0;
    while (begin < xy.size()) {
      std::size_t end = begin;
      while (end < xy.size() && xy[end].first == xy[begin].first) ++end;
      const std::int64_t t = static_cast<std::int64_t>(end - begin);
      n1 += t * (t - 1) / 2;
      std::size_t b2 = begin;
      while (b2 < end) {
        std::size_t e2 = b2;
        while (e2 < end && xy[e2].second == xy[b2].second) ++e2;
        const std::int64_t t2 = static_cast<std::int64_t>(e2 - b2);
        n3 += t2 * (t2 - 1) / 2;
        b2 = e2;
      }
      begin = end;
    }
  }

  std::vector<double> second(xy.size());
  for (std::size_t i = 0; i < xy.size(); ++i) second[i] = xy[i].second;
  const std::int64_t n2 = tied_pairs(second);
  const std::int64_t d = merge_count_inversions(second);

  TauCounts c;
  c.discordant = d;
  c.concordant = n0 - n1 - n2 + n3 - d;
  c.tied_first_only = n1 - n3;
  c.tied_second_only = n2 - n3;
  return c;
}

}  // namespace detail

/// Tie-adjusted rank correlation
///   tau_B = (C - D) / sqrt((C + D + T1)(C + D + T2))
/// where T1/T2 count pairs tied in exactly one assignment. Errors out when
/// either assignment ties everything (denominator zero).
inline double kendall_tau_b(const RankAssignment& r1, const RankAssignment& r2) {
  const auto c = detail::tau_counts(r1, r2);
  const std::int64_t den1 = c.concordant + c.discordant + c.tied_first_only;
  const std::int64_t den2 = c.concordant + c.discordant + c.tied_second_only;
  if (den1 == 0 || den2 == 0) {
    throw ValidationError("kendall_tau_b: all ranks tied in one assignment, undefined");
  }
  return static_cast<double>(c.concordant - c.discordant) /
         std::sqrt(static_cast<double>(den1) * static_cast<double>(den2));
}

/// Number of discordant pairs (inversions) between two assignments.
inline std::size_t count_inversions(const RankAssignment& r1, const RankAssignment& r2) {
  return static_cast<std::size_t>(detail::tau_counts(r1, r2).discordant);
}

/// Scores min-max normalized to [0, 1], emitted in ascending order of the
/// ground-truth target (the layout of a learned-utility curve plot).
/// Degenerate constant scores map to 0.5 with the flag set.
struct UtilityCurve {
  std::vector<double> normalized_scores;
  std::vector<double> normalized_targets;
  bool degenerate_scores = false;
};

inline UtilityCurve utility_curve(const std::vector<double>& scores,
                                  const std::vector<double>& targets) {
  if (scores.size() != targets.size() || scores.empty()) {
    throw ValidationError("utility_curve: need equally many scores and targets");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return targets[a] < targets[b]; });

  auto normalize = [n](const std::vector<double>& v, const std::vector<std::size_t>& ord,
                       bool* degenerate) {
    double lo = v[0], hi = v[0];
    for (double x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    std::vector<double> out(n);
    if (hi == lo) {
      if (degenerate) *degenerate = true;
      std::fill(out.begin(), out.end(), 0.5);
      return out;
    }
    for (std::size_t i = 0; i < n; ++i) out[i] = (v[ord[i]] - lo) / (hi - lo);
    return out;
  };

  UtilityCurve curve;
  curve.normalized_scores = normalize(scores, order, &curve.degenerate_scores);
  curve.normalized_targets = normalize(targets, order, nullptr);
  return curve;
}

}  // namespace graphrank
