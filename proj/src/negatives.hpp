#pragma once

#include <algorithm>
#include <vector>

#include "neurec/data.hpp"
#include "neurec/models.hpp"
#include "neurec/rng.hpp"

namespace neurec::models::detail {

// min(t, #unobserved) distinct unobserved items for user u, uniformly without
// replacement. When every negative is taken the result is in ascending order.
inline std::vector<int> draw_unobserved(const data::InteractionMatrix& train, int u, int t, Rng& rng) {
  const auto& observed = train.row(u);
  const int n_items = train.num_items();
  const int n_neg = n_items - static_cast<int>(observed.size());
  if (n_neg <= 0) throw ModelError("user " + std::to_string(u) + " has no unobserved items");

  std::vector<int> out;
  if (t >= n_neg) {
    out.reserve(static_cast<std::size_t>(n_neg));
    std::size_t k = 0;
    for (int i = 0; i < n_items; ++i) {
      if (k < observed.size() && observed[k] == i) {
        ++k;
      } else {
        out.push_back(i);
      }
    }
    return out;
  }

  out.reserve(static_cast<std::size_t>(t));
  if (2 * n_neg >= n_items) {
    // Mostly-empty row: rejection is cheap.
    while (static_cast<int>(out.size()) < t) {
      const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_items)));
      if (std::binary_search(observed.begin(), observed.end(), i)) continue;
      if (std::find(out.begin(), out.end(), i) != out.end()) continue;
      out.push_back(i);
    }
    return out;
  }

  // Dense row: enumerate negatives and take a partial Fisher-Yates prefix.
  std::vector<int> pool;
  pool.reserve(static_cast<std::size_t>(n_neg));
  std::size_t k = 0;
  for (int i = 0; i < n_items; ++i) {
    if (k < observed.size() && observed[k] == i) {
      ++k;
    } else {
      pool.push_back(i);
    }
  }
  for (int c = 0; c < t; ++c) {
    const auto j = static_cast<std::size_t>(c) + static_cast<std::size_t>(rng.below(pool.size() - static_cast<std::size_t>(c)));
    std::swap(pool[static_cast<std::size_t>(c)], pool[j]);
    out.push_back(pool[static_cast<std::size_t>(c)]);
  }
  return out;
}

// Candidate with the highest score; ties go to the lower item index.
template <typename ScoreFn>
int best_scored(const std::vector<int>& candidates, ScoreFn&& score) {
  int best = -1;
  double best_score = 0.0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const double s = score(c);
    if (best < 0 || s > best_score || (s == best_score && candidates[c] < best)) {
      best = candidates[c];
      best_score = s;
    }
  }
  return best;
}

}  // namespace neurec::models::detail
