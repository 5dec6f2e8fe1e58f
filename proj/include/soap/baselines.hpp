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

// Decomposable per-example baselines: cross entropy, class-balanced cross
// entropy and focal loss. They reuse the score models and the UW step of
// the SOAP optimiser so that comparisons only differ in the objective.

#ifndef SOAP_BASELINES_HPP_
#define SOAP_BASELINES_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "soap/data.hpp"
#include "soap/error.hpp"
#include "soap/metrics.hpp"
#include "soap/model.hpp"
#include "soap/optimizer.hpp"
#include "soap/run_record.hpp"

namespace soap {

enum class BaselineKind { kCe, kCbCe, kFocal };

inline std::string_view to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::kCe: return "ce";
    case BaselineKind::kCbCe: return "cb_ce";
    case BaselineKind::kFocal: return "focal";
  }
  return "?";
}

struct BaselineSpec {
  BaselineKind kind = BaselineKind::kCe;
  double focal_gamma = 2.0;
  double cb_beta = 0.999;
  // Per-class multipliers; only cb_ce sets them away from 1.
  double pos_weight = 1.0;
  double neg_weight = 1.0;

  void validate() const {
    if (!(focal_gamma >= 0.0) || !std::isfinite(focal_gamma)) {
      throw UsageError("focal_gamma must be finite and >= 0");
    }
    if (!(cb_beta >= 0.0 && cb_beta < 1.0)) {
      throw UsageError("cb_beta must lie in [0,1)");
    }
  }
};

// Effective-number class weights w_y = (1 - beta) / (1 - beta^{n_y}),
// rescaled so the two class weights average to 1. No-op unless cb_ce.
inline BaselineSpec with_class_counts(BaselineSpec spec, std::size_t n_pos,
                                      std::size_t n_neg) {
  spec.validate();
  if (spec.kind != BaselineKind::kCbCe) return spec;
  if (n_pos == 0 || n_neg == 0) {
    throw UsageError("class-balanced weights need both classes present");
  }
  const auto effective = [&](std::size_t n) {
    if (spec.cb_beta == 0.0) return 1.0;
    return (1.0 - spec.cb_beta) /
           (1.0 - std::pow(spec.cb_beta, static_cast<double>(n)));
  };
  const double wp = effective(n_pos), wn = effective(n_neg);
  const double mean = 0.5 * (wp + wn);
  spec.pos_weight = wp / mean;
  spec.neg_weight = wn / mean;
  return spec;
}

struct LossAndGrad {
  double loss;
  double grad;  // d loss / d score
};

// score is the squashed probability of the positive class.
inline LossAndGrad baseline_loss_grad(const BaselineSpec& spec, double score,
                                      int label) {
  if (!(score > 0.0 && score < 1.0)) {
    throw DomainError("baseline losses need a score strictly inside (0,1); "
                      "use a squashed model");
  }
  if (label != 1 && label != -1) throw UsageError("label must be +1/-1");
  const double q = label == 1 ? score : 1.0 - score;
  const double dq = label == 1 ? 1.0 : -1.0;
  const double log_q = std::log(q);
  double loss = -log_q;
  double dloss_dq = -1.0 / q;
  if (spec.kind == BaselineKind::kFocal && spec.focal_gamma != 0.0) {
    const double g = spec.focal_gamma;
    const double mod = std::pow(1.0 - q, g);
    loss = -mod * log_q;
    dloss_dq = g * std::pow(1.0 - q, g - 1.0) * log_q - mod / q;
  }
  const double w = label == 1 ? spec.pos_weight : spec.neg_weight;
  return {w * loss, w * dloss_dq * dq};
}

struct BaselineConfig {
  UpdateParams update;
  std::size_t iterations = 1000;
  std::size_t batch = 64;
  std::size_t eval_every = 100;
  std::uint64_t seed = 0;
};

inline double mean_baseline_loss(const BaselineSpec& spec,
                                 std::span<const double> scores,
                                 std::span<const int> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    s += baseline_loss_grad(spec, scores[i], y[i]).loss;
  }
  return s / static_cast<double>(scores.size());
}

// Minibatch training on the mean per-example loss, B examples drawn
// uniformly with replacement per step. spec must already carry its class
// weights (see with_class_counts).
inline TrainResult baseline_train(const BaselineConfig& config,
                                  const Dataset& data, ScoreModel model,
                                  const BaselineSpec& spec,
                                  const TrainHooks& hooks = {}) {
  model.validate();
  spec.validate();
  if (!model.squash) {
    throw UsageError("baselines need a squashed (probability) model");
  }
  if (data.size() == 0) throw UsageError("empty training data");
  if (config.batch == 0) throw UsageError("batch must be >= 1");
  if (config.eval_every == 0) throw UsageError("eval_every must be >= 1");

  TrainResult result;
  result.stats.schedule = {config.update.alpha, 0.0};
  UpdateState upd(config.update, model.params.size());
  auto rng = make_rng(config.seed, 0x62617365ULL);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  const double inv_b = 1.0 / static_cast<double>(config.batch);
  const Stopwatch clock;
  std::vector<std::size_t> idx(config.batch);
  std::vector<double> d_scores(config.batch);

  for (std::size_t t = 1; t <= config.iterations; ++t) {
    for (auto& i : idx) i = pick(rng);
    const Matrix rows = data.X.gather(idx);
    const auto p = forward(model, rows);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      d_scores[k] = baseline_loss_grad(spec, p[k], data.y[idx[k]]).grad * inv_b;
    }
    const auto G = backward(model, rows, d_scores);
    uw_step(upd, model.params, G);
    if (t % config.eval_every == 0) {
      const auto scores = forward(model, data.X);
      RunRecord r;
      r.iter = t;
      r.objective = mean_baseline_loss(spec, scores, data.y);
      r.train_ap = data.n_pos() ? average_precision(scores, data.y)
                                : std::numeric_limits<double>::quiet_NaN();
      r.val_ap = hooks.val ? average_precision(forward(model, hooks.val->X),
                                               hooks.val->y)
                           : std::numeric_limits<double>::quiet_NaN();
      r.grad_norm = detail::l2_norm(G);
      r.wall_ms = clock.elapsed_ms();
      if (hooks.on_record) hooks.on_record(r);
      result.log.push_back(r);
    }
  }
  result.model = std::move(model);
  return result;
}

}  // namespace soap

#endif  // SOAP_BASELINES_HPP_
