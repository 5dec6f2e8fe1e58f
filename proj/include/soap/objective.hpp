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

// Full-batch surrogate AP objective
//
//   P(w) = 1/n+ sum_{i in D+} f(g_i(w)),   f(s) = -s1 / s2,
//   g_i(w) = 1/n sum_j ( I(y_j = 1) l(h_i - h_j), l(h_i - h_j) ),
//
// its inner and outer pieces, and the exact chain-rule gradient. This is the
// O(n+ * n) reference that the stochastic estimator is tested against.

#ifndef SOAP_OBJECTIVE_HPP_
#define SOAP_OBJECTIVE_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "soap/data.hpp"
#include "soap/error.hpp"
#include "soap/model.hpp"
#include "soap/surrogate.hpp"

namespace soap {

// g_i(w): positive-restricted and total mean surrogate mass.
struct InnerValue {
  double g1 = 0.0;
  double g2 = 0.0;
};

struct OuterValue {
  double value;
  std::array<double, 2> grad;  // (df/ds1, df/ds2)
};

inline OuterValue f_outer(const InnerValue& s) {
  if (!(s.g2 > 0.0)) {
    throw DomainError("f(s) = -s1/s2 needs s2 > 0, got " +
                      std::to_string(s.g2));
  }
  return {-s.g1 / s.g2, {-1.0 / s.g2, s.g1 / (s.g2 * s.g2)}};
}

namespace detail {

inline void require_positive_row(const Dataset& data, std::size_t i) {
  if (i >= data.size() || data.y[i] != 1) {
    throw UsageError("index " + std::to_string(i) + " is not a positive");
  }
}

inline void require_positives(const Dataset& data) {
  if (data.n_pos() == 0) {
    throw UsageError("objective needs at least one positive example");
  }
}

// Unnormalised sums over j of I(y_j = 1) l and l for anchor i, given scores.
template <PairLoss Loss>
InnerValue inner_sums(const Loss& loss, std::span<const double> scores,
                      std::span<const int> y, std::size_t i) {
  InnerValue s;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    const double l = loss.value(scores[i] - scores[j]);
    if (y[j] == 1) s.g1 += l;
    s.g2 += l;
  }
  return s;
}

inline void check_objective_range(double value) {
  if (!(value >= -1.0 && value < 0.0)) {
    throw NumericError("objective left [-1, 0): " + std::to_string(value));
  }
}

}  // namespace detail

// g_i(w) over the full dataset, self pair included, normalised by 1/n.
template <PairLoss Loss>
InnerValue g_inner_exact(const ScoreModel& model, const Loss& loss,
                         const Dataset& data, std::size_t i) {
  detail::require_positive_row(data, i);
  const auto scores = forward(model, data.X);
  auto s = detail::inner_sums(loss, scores, data.y, i);
  const double n = static_cast<double>(data.size());
  return {s.g1 / n, s.g2 / n};
}

// P(w) from precomputed scores. f is evaluated on the unnormalised sums;
// f(s / n) == f(s), and this keeps indicator-loss results bit-identical to
// average_precision().
template <PairLoss Loss>
double objective_from_scores(const Loss& loss, std::span<const double> scores,
                             const Dataset& data) {
  detail::require_positives(data);
  double sum = 0.0;
  for (std::size_t i : data.pos_idx) {
    sum += f_outer(detail::inner_sums(loss, scores, data.y, i)).value;
  }
  const double value = sum / static_cast<double>(data.n_pos());
  detail::check_objective_range(value);
  return value;
}

template <PairLoss Loss>
double objective_P(const ScoreModel& model, const Loss& loss,
                   const Dataset& data) {
  detail::require_positives(data);
  return objective_from_scores(loss, forward(model, data.X), data);
}

// Exact gradient of P. For anchor i and partner j the pair term is
//   (1/n) (a_i I(y_j = 1) + b_i) l'(h_i - h_j) (grad h_i - grad h_j)
// with (a_i, b_i) = grad f(g_i). Coefficients are folded into one d_scores
// vector and pushed through a single backward pass.
template <DifferentiablePairLoss Loss>
std::vector<double> grad_P_exact(const ScoreModel& model, const Loss& loss,
                                 const Dataset& data) {
  detail::require_positives(data);
  const auto scores = forward(model, data.X);
  const std::size_t n = data.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double inv_pos = 1.0 / static_cast<double>(data.n_pos());
  std::vector<double> d_scores(n, 0.0);
  for (std::size_t i : data.pos_idx) {
    const auto s = detail::inner_sums(loss, scores, data.y, i);
    const auto outer = f_outer({s.g1 * inv_n, s.g2 * inv_n});
    const double a = outer.grad[0], b = outer.grad[1];
    double anchor = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double coef = (data.y[j] == 1 ? a + b : b) *
                          loss.derivative(scores[i] - scores[j]) * inv_n *
                          inv_pos;
      anchor += coef;
      d_scores[j] -= coef;
    }
    d_scores[i] += anchor;
  }
  return backward(model, data.X, d_scores);
}

}  // namespace soap

#endif  // SOAP_OBJECTIVE_HPP_
