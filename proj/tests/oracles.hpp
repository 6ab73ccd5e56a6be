/*
 * Copyright 2026 The hbgmm Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Quadratic reference implementations of the ranking metrics. None of them
// sorts; each reads the definition off directly.

#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "hbgmm/metrics.hpp"

namespace hbgmm::oracle {

/// Pairwise count over every (OOD, ID) pair, ties = 1/2.
inline double auroc(const ScoredPixels& d) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!d.is_ood[i]) continue;
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (d.is_ood[j]) continue;
      pairs += 1;
      if (d.scores[i] > d.scores[j]) wins += 1;
      else if (d.scores[i] == d.scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// Precision at each positive's rank; rank counts items strictly above it
/// plus tied items at or before it in input order.
inline double auprc(const ScoredPixels& d) {
  double sum = 0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!d.is_ood[i]) continue;
    ++n_pos;
    std::size_t rank = 0, hits = 0;
    for (std::size_t j = 0; j < d.size(); ++j) {
      const bool ahead = d.scores[j] > d.scores[i] || (d.scores[j] == d.scores[i] && j <= i);
      if (!ahead) continue;
      ++rank;
      hits += d.is_ood[j];
    }
    sum += double(hits) / double(rank);
  }
  return sum / double(n_pos);
}

/// Minimum FPR over every threshold equal to an observed score.
inline double fpr_at_tpr(const ScoredPixels& d, double target) {
  std::size_t pos = 0, neg = 0;
  for (auto f : d.is_ood) (f ? pos : neg)++;
  double best = 1.0;
  for (double t : d.scores) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (d.scores[j] >= t) (d.is_ood[j] ? tp : fp)++;
    }
    if (double(tp) / double(pos) >= target - 1e-12) best = std::min(best, double(fp) / double(neg));
  }
  return best;
}

/// Random instance with both classes present; `tie_levels` > 0 quantizes
/// scores onto that many values so ties are common.
inline ScoredPixels random_instance(std::mt19937_64& rng, std::size_t n, int tie_levels) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution ood(std::uniform_real_distribution<double>(0.05, 0.95)(rng));
  ScoredPixels d;
  for (std::size_t i = 0; i < n; ++i) {
    const bool f = ood(rng);
    double s = u(rng) + (f ? 0.3 : 0.0);
    if (tie_levels > 0) s = std::floor(s * tie_levels) / tie_levels;
    d.push_back(s, f);
  }
  d.is_ood[0] = 1;
  d.is_ood[n - 1] = 0;
  return d;
}

}  // namespace hbgmm::oracle
