#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <utility>
#include <vector>

#include "graphrank/errors.hpp"
#include "graphrank/rng.hpp"

namespace graphrank {

/// Batched comparator oracle: one invocation answers a whole list of
/// ordered index pairs. Positive result means the first index is preferred.
using CompareBatchFn =
    std::function<std::vector<double>(const std::vector<std::pair<std::size_t, std::size_t>>&)>;

/// Batched utility oracle: one invocation scores all n items.
using UtilityBatchFn = std::function<std::vector<double>(std::size_t n)>;

/// A permutation of item indices, most preferred first, plus the number of
/// oracle invocations spent producing it.
struct Ranking {
  std::vector<std::size_t> order;
  std::size_t comparator_calls = 0;
};

/// Quicksort driven by the batched comparator. All pivot comparisons of one
/// recursion depth are submitted as a single oracle call, so the number of
/// calls equals the depth of the call tree. Elements comparing exactly 0
/// against the pivot join the pivot's tie band, kept in batch-index order.
inline Ranking quicksort_rank(std::size_t n, const CompareBatchFn& compare_batch,
                              std::uint64_t seed) {
  Ranking result;
  result.order.assign(n, 0);
  std::iota(result.order.begin(), result.order.end(), 0);
  if (n < 2) return result;

  Rng rng(seed);

  // Partitions pending at the current depth, each owning a slice of the
  // output; resolved slices hold final positions.
  struct Part {
    std::vector<std::size_t> elems;
    std::size_t pivot = 0;
  };
  std::vector<Part> active;
  active.push_back({std::move(result.order), 0});
  result.order.clear();

  // The in-progress order is a sequence of slots, each either a resolved
  // run of final indices or a reference to an active partition.
  struct Slot {
    bool is_active;
    std::size_t index;  // into `active` or `resolved`
  };
  std::vector<std::vector<std::size_t>> resolved;
  std::vector<Slot> layout{{true, 0}};

  while (!active.empty()) {
    // Pick pivots and gather this depth's comparison queries.
    std::vector<std::pair<std::size_t, std::size_t>> queries;
    std::vector<std::size_t> query_offset(active.size() + 1, 0);
    for (std::size_t p = 0; p < active.size(); ++p) {
      Part& part = active[p];
      part.pivot = part.elems[rng.index(part.elems.size())];
      for (std::size_t e : part.elems) {
        if (e != part.pivot) queries.emplace_back(e, part.pivot);
      }
      query_offset[p + 1] = queries.size();
    }
    const std::vector<double> outcome = compare_batch(queries);
    if (outcome.size() != queries.size()) {
      throw ValidationError("quicksort_rank: oracle returned wrong result count");
    }
    ++result.comparator_calls;

    // Split each partition into before / tie band / after.
    std::vector<Part> next_active;
    std::vector<Slot> next_layout;
    std::size_t part_index = 0;
    for (const Slot& slot : layout) {
      if (!slot.is_active) {
        next_layout.push_back(slot);
        continue;
      }
      const Part& part = active[part_index];
      const std::size_t base = query_offset[part_index];
      ++part_index;
      std::vector<std::size_t> before, tie, after;
      std::size_t q = base;
      for (std::size_t e : part.elems) {
        if (e == part.pivot) continue;
        const double c = outcome[q++];
        if (c > 0.0) {
          before.push_back(e);
        } else if (c < 0.0) {
          after.push_back(e);
        } else {
          tie.push_back(e);
        }
      }
      tie.push_back(part.pivot);
      std::sort(tie.begin(), tie.end());

      auto emit = [&](std::vector<std::size_t>&& run) {
        if (run.empty()) return;
        if (run.size() == 1) {
          if (!next_layout.empty() && !next_layout.back().is_active) {
            resolved[next_layout.back().index].push_back(run[0]);
          } else {
            next_layout.push_back({false, resolved.size()});
            resolved.push_back(std::move(run));
          }
        } else {
          next_layout.push_back({true, next_active.size()});
          next_active.push_back({std::move(run), 0});
        }
      };
      emit(std::move(before));
      // tie band is fully ordered
      if (!next_layout.empty() && !next_layout.back().is_active) {
        auto& dst = resolved[next_layout.back().index];
        dst.insert(dst.end(), tie.begin(), tie.end());
      } else {
        next_layout.push_back({false, resolved.size()});
        resolved.push_back(std::move(tie));
      }
      emit(std::move(after));
    }
    active = std::move(next_active);
    layout = std::move(next_layout);
  }

  for (const Slot& slot : layout) {
    const auto& run = resolved[slot.index];
    result.order.insert(result.order.end(), run.begin(), run.end());
  }
  if (result.order.size() != n) {
    throw ValidationError("quicksort_rank: lost elements during partitioning");
  }
  return result;
}

/// Ranks by descending utility in a single oracle call; ties keep
/// batch-index order.
inline Ranking utility_rank(std::size_t n, const UtilityBatchFn& utility_batch) {
  Ranking result;
  result.order.assign(n, 0);
  std::iota(result.order.begin(), result.order.end(), 0);
  if (n == 0) return result;
  const std::vector<double> u = utility_batch(n);
  if (u.size() != n) {
    throw ValidationError("utility_rank: oracle returned wrong result count");
  }
  result.comparator_calls = 1;
  std::stable_sort(result.order.begin(), result.order.end(),
                   [&](std::size_t a, std::size_t b) { return u[a] > u[b]; });
  return result;
}

/// Borda count aggregation: evaluates all n(n-1) ordered pairs in one
/// oracle call and ranks by number of wins, ties by batch index. The O(n^2)
/// baseline that stays meaningful for intransitive comparators.
inline Ranking borda_rank(std::size_t n, const CompareBatchFn& compare_batch) {
  Ranking result;
  result.order.assign(n, 0);
  std::iota(result.order.begin(), result.order.end(), 0);
  if (n < 2) return result;
  std::vector<std::pair<std::size_t, std::size_t>> queries;
  queries.reserve(n * (n - 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) queries.emplace_back(i, j);
    }
  }
  const std::vector<double> outcome = compare_batch(queries);
  if (outcome.size() != queries.size()) {
    throw ValidationError("borda_rank: oracle returned wrong result count");
  }
  result.comparator_calls = 1;
  std::vector<std::size_t> wins(n, 0);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    if (outcome[q] > 0.0) ++wins[queries[q].first];
  }
  std::stable_sort(result.order.begin(), result.order.end(),
                   [&](std::size_t a, std::size_t b) { return wins[a] > wins[b]; });
  return result;
}

/// Comparator induced by a utility vector: compare(i, j) = u_i - u_j.
/// Transitive by construction; handy for tests and for ranking with
/// score-based models.
inline CompareBatchFn utility_comparator(std::vector<double> utilities) {
  return [utilities = std::move(utilities)](
             const std::vector<std::pair<std::size_t, std::size_t>>& queries) {
    std::vector<double> out;
    out.reserve(queries.size());
    for (const auto& [i, j] : queries) out.push_back(utilities[i] - utilities[j]);
    return out;
  };
}

}  // namespace graphrank
