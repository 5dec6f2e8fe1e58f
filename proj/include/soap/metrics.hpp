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

// Ranking metrics over (score, label) pairs. Labels use the {+1, -1}
// convention throughout the library.

#ifndef SOAP_METRICS_HPP_
#define SOAP_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "soap/error.hpp"

namespace soap {

namespace detail {

inline std::size_t check_scored(std::span<const double> scores,
                                 std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw UsageError("scores and labels differ in length (" +
                     std::to_string(scores.size()) + " vs " +
                     std::to_string(labels.size()) + ")");
  }
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw NumericError("non-finite score at index " + std::to_string(i));
    }
    if (labels[i] == 1) {
      ++n_pos;
    } else if (labels[i] != -1) {
      throw UsageError("label at index " + std::to_string(i) +
                       " is not +1/-1");
    }
  }
  if (n_pos == 0) {
    throw UndefinedMetricError("metric undefined: no positive labels");
  }
  return n_pos;
}

// Indices sorted by descending score; ties keep ascending index order.
inline std::vector<std::size_t> descending_order(
    std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });
  return order;
}

}  // namespace detail

// Average precision with ">=" comparisons:
//
//   AP = 1/n+ * sum_{i: y_i = 1} #{s: y_s = 1, h_s >= h_i} / #{s: h_s >= h_i}
//
// The self pair is counted in both numerator and denominator. Per-positive
// ratios are accumulated in ascending index order so that the surrogate
// objective with an indicator loss reproduces this value bit for bit.
inline double average_precision(std::span<const double> scores,
                                std::span<const int> labels) {
  const std::size_t n_pos = detail::check_scored(scores, labels);
  const std::size_t n = scores.size();
  const auto order = detail::descending_order(scores);

  // at_least[i] = #{s: h_s >= h_i}, pos_at_least[i] likewise for positives.
  std::vector<std::size_t> at_least(n), pos_at_least(n);
  std::size_t seen = 0, seen_pos = 0;
  for (std::size_t k = 0; k < n;) {
    std::size_t end = k;
    while (end < n && scores[order[end]] == scores[order[k]]) {
      seen += 1;
      seen_pos += labels[order[end]] == 1 ? 1 : 0;
      ++end;
    }
    for (std::size_t q = k; q < end; ++q) {
      at_least[order[q]] = seen;
      pos_at_least[order[q]] = seen_pos;
    }
    k = end;
  }

  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 1) continue;
    sum += static_cast<double>(pos_at_least[i]) /
           static_cast<double>(at_least[i]);
  }
  return sum / static_cast<double>(n_pos);
}

struct PRPoint {
  double recall;
  double precision;
  double threshold;
};

// Precision-recall curve with one point per distinct score, thresholds
// descending. A point at threshold c counts every sample scored >= c.
struct PRCurve {
  std::vector<PRPoint> points;
  std::size_t n_pos = 0;
  std::size_t n_total = 0;

  void write_csv(std::ostream& os) const;
};

inline PRCurve pr_curve(std::span<const double> scores,
                        std::span<const int> labels) {
  PRCurve curve;
  curve.n_pos = detail::check_scored(scores, labels);
  curve.n_total = scores.size();
  const auto order = detail::descending_order(scores);
  std::size_t tp = 0, seen = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double threshold = scores[order[k]];
    while (k < order.size() && scores[order[k]] == threshold) {
      tp += labels[order[k]] == 1 ? 1 : 0;
      ++seen;
      ++k;
    }
    curve.points.push_back(
        {static_cast<double>(tp) / static_cast<double>(curve.n_pos),
         static_cast<double>(tp) / static_cast<double>(seen), threshold});
  }
  return curve;
}

inline void PRCurve::write_csv(std::ostream& os) const {
  char buf[96];
  os << "threshold,recall,precision\n";
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", p.threshold,
                  p.recall, p.precision);
    os << buf;
  }
}

// Trapezoidal area under a PR curve, anchored at (recall 0, precision of
// the first point).
inline double auprc_trapezoid(const PRCurve& curve) {
  if (curve.points.empty() || curve.points.back().recall != 1.0) {
    throw UsageError("invalid PR curve: must end at recall 1");
  }
  double area = 0.0;
  double prev_r = 0.0;
  double prev_p = curve.points.front().precision;
  for (const auto& p : curve.points) {
    if (p.recall < prev_r) {
      throw UsageError("invalid PR curve: recall decreases");
    }
    area += (p.recall - prev_r) * 0.5 * (p.precision + prev_p);
    prev_r = p.recall;
    prev_p = p.precision;
  }
  return area;
}

// n+ / n.
inline double imbalance_ratio(std::span<const int> labels) {
  if (labels.empty()) throw UsageError("imbalance_ratio of empty labels");
  const auto n_pos = std::count(labels.begin(), labels.end(), 1);
  return static_cast<double>(n_pos) / static_cast<double>(labels.size());
}

}  // namespace soap

#endif  // SOAP_METRICS_HPP_
