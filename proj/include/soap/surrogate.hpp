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

#ifndef SOAP_SURROGATE_HPP_
#define SOAP_SURROGATE_HPP_

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <string>
#include <string_view>

#include "soap/error.hpp"

namespace soap {

enum class SurrogateKind { kSquaredHinge, kLogistic, kSigmoid };

inline std::string_view to_string(SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::kSquaredHinge: return "squared_hinge";
    case SurrogateKind::kLogistic: return "logistic";
    case SurrogateKind::kSigmoid: return "sigmoid";
  }
  return "?";
}

inline SurrogateKind parse_surrogate_kind(std::string_view name) {
  if (name == "squared_hinge") return SurrogateKind::kSquaredHinge;
  if (name == "logistic") return SurrogateKind::kLogistic;
  if (name == "sigmoid") return SurrogateKind::kSigmoid;
  throw UsageError("unknown surrogate '" + std::string(name) + "'");
}

namespace detail {

// 1 / (1 + exp(-z)) without overflow.
inline double logistic_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
inline double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

inline void check_diff(double diff) {
  if (!std::isfinite(diff)) {
    throw NumericError("surrogate loss evaluated at a non-finite score gap");
  }
}

}  // namespace detail

// Pairwise surrogate of I(h(x_s) >= h(x_i)), written as a function of the
// score gap diff = h(x_i) - h(x_s). Every kind is non-increasing in diff.
struct SurrogateSpec {
  SurrogateKind kind = SurrogateKind::kSquaredHinge;
  double margin = 1.0;  // squared_hinge
  double scale = 1.0;   // logistic, sigmoid

  void validate() const {
    if (kind == SurrogateKind::kSquaredHinge) {
      if (!(margin > 0.0) || !std::isfinite(margin)) {
        throw UsageError("squared_hinge margin must be finite and > 0");
      }
    } else if (!(scale > 0.0) || !std::isfinite(scale)) {
      throw UsageError(std::string(to_string(kind)) +
                       " scale must be finite and > 0");
    }
  }

  double value(double diff) const;
  double derivative(double diff) const;
};

inline double loss(const SurrogateSpec& spec, double diff) {
  detail::check_diff(diff);
  switch (spec.kind) {
    case SurrogateKind::kSquaredHinge: {
      const double slack = std::max(spec.margin - diff, 0.0);
      return slack * slack;
    }
    case SurrogateKind::kLogistic:
      return detail::softplus(-spec.scale * diff);
    case SurrogateKind::kSigmoid:
      return detail::logistic_sigmoid(-spec.scale * diff);
  }
  return 0.0;
}

// d loss / d diff.
inline double loss_grad(const SurrogateSpec& spec, double diff) {
  detail::check_diff(diff);
  switch (spec.kind) {
    case SurrogateKind::kSquaredHinge:
      return -2.0 * std::max(spec.margin - diff, 0.0);
    case SurrogateKind::kLogistic:
      return -spec.scale * detail::logistic_sigmoid(-spec.scale * diff);
    case SurrogateKind::kSigmoid: {
      const double s = detail::logistic_sigmoid(-spec.scale * diff);
      return -spec.scale * s * (1.0 - s);
    }
  }
  return 0.0;
}

inline double SurrogateSpec::value(double diff) const {
  return loss(*this, diff);
}
inline double SurrogateSpec::derivative(double diff) const {
  return loss_grad(*this, diff);
}

// The exact indicator I(h_s >= h_i), i.e. 1 when diff <= 0. Not
// differentiable; only usable where no gradient is requested.
struct IndicatorLoss {
  double value(double diff) const { return diff <= 0.0 ? 1.0 : 0.0; }
};

template <typename L>
concept PairLoss = requires(const L& l, double d) {
  { l.value(d) } -> std::convertible_to<double>;
};

template <typename L>
concept DifferentiablePairLoss = PairLoss<L> && requires(const L& l, double d) {
  { l.derivative(d) } -> std::convertible_to<double>;
};

// Whether "C <= l(w; x_i, x_i)" and "l(w; x_j, x_i) <= M" hold for every
// parameter vector, given the range of the score model.
struct LossBounds {
  bool bounded = false;
  double lower_self = 0.0;  // C, the self-pair loss
  double upper = std::numeric_limits<double>::infinity();  // M
  std::string note;
};

inline LossBounds loss_bounds(const SurrogateSpec& spec, bool scores_in_unit_interval) {
  spec.validate();
  LossBounds b;
  b.lower_self = loss(spec, 0.0);
  if (scores_in_unit_interval) {
    // Score gaps lie in (-1, 1); every kind is non-increasing.
    b.bounded = true;
    b.upper = loss(spec, -1.0);
    b.note = "scores squashed into (0,1): losses bounded";
  } else if (spec.kind == SurrogateKind::kSigmoid) {
    b.bounded = true;
    b.upper = 1.0;
    b.note = "sigmoid loss bounded by 1";
  } else {
    b.note = std::string(to_string(spec.kind)) +
             " loss is unbounded for unsquashed scores";
  }
  return b;
}

}  // namespace soap

#endif  // SOAP_SURROGATE_HPP_
