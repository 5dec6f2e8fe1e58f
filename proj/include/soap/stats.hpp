/*
 * Copyright 2026 The SOAP-AP Authors.
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

#ifndef SOAP_STATS_HPP_
#define SOAP_STATS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "soap/error.hpp"

namespace soap {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw UsageError("mean of empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) /
         static_cast<double>(xs.size());
}

// Unbiased (n - 1) standard deviation; 0 for a single observation.
inline double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

// Pearson correlation; nullopt when either series is constant.
inline std::optional<double> pearson(std::span<const double> a,
                                     std::span<const double> b) {
  if (a.size() != b.size()) throw UsageError("series differ in length");
  if (a.size() < 2) return std::nullopt;
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

// 1-based ranks, ties share their average rank.
inline std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return xs[i] < xs[j]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t k = 0; k < order.size();) {
    std::size_t end = k;
    while (end < order.size() && xs[order[end]] == xs[order[k]]) ++end;
    const double r = 0.5 * static_cast<double>(k + 1 + end);
    for (std::size_t q = k; q < end; ++q) ranks[order[q]] = r;
    k = end;
  }
  return ranks;
}

inline std::optional<double> spearman(std::span<const double> a,
                                      std::span<const double> b) {
  const auto ra = average_ranks(a), rb = average_ranks(b);
  return pearson(ra, rb);
}

}  // namespace soap

#endif  // SOAP_STATS_HPP_
