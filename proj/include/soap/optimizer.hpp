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

// SOAP: stochastic optimisation of average precision.
//
// Each positive x_i owns a moving-average estimate u_i = (u1, u2) of its
// inner value g_i(w). An iteration draws B+ positives and B examples,
// refreshes u for the drawn positives (UG), forms the biased gradient
// estimate
//
//   G = 1/B+ sum_{i in B+} sum_{j in B}
//         (u1_i - u2_i I(y_j = 1)) / (B u2_i^2) * grad l(w; x_j, x_i)
//
// and applies an SGD, Adam or AMSGrad step (UW).

#ifndef SOAP_OPTIMIZER_HPP_
#define SOAP_OPTIMIZER_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "soap/data.hpp"
#include "soap/error.hpp"
#include "soap/metrics.hpp"
#include "soap/model.hpp"
#include "soap/objective.hpp"
#include "soap/run_record.hpp"
#include "soap/surrogate.hpp"

namespace soap {

class EstimatorState {
 public:
  EstimatorState(const Dataset& data, double gamma, double u0)
      : gamma_(gamma), u0_(u0), row_of_(data.size(), kNoRow) {
    if (!(gamma > 0.0 && gamma <= 1.0)) {
      throw UsageError("gamma must lie in (0,1]");
    }
    if (!(u0 >= 0.0) || !std::isfinite(u0)) {
      throw UsageError("u0 must be finite and >= 0");
    }
    for (std::size_t r = 0; r < data.pos_idx.size(); ++r) {
      row_of_[data.pos_idx[r]] = r;
    }
    u_.assign(data.n_pos(), {0.0, 0.0});
    initialized_.assign(data.n_pos(), false);
  }

  double gamma() const { return gamma_; }
  double u0() const { return u0_; }
  std::size_t rows() const { return u_.size(); }

  // Row for dataset index i; throws if i is not a positive.
  std::size_t row_of(std::size_t i) const {
    if (i >= row_of_.size() || row_of_[i] == kNoRow) {
      throw UsageError("index " + std::to_string(i) + " is not a positive");
    }
    return row_of_[i];
  }

  const std::array<double, 2>& u(std::size_t i) const { return u_[row_of(i)]; }
  bool initialized(std::size_t i) const { return initialized_[row_of(i)]; }

  // Direct assignment, for warm starts and tests.
  void set(std::size_t i, double u1, double u2) {
    const auto r = row_of(i);
    u_[r] = {u1, u2};
    initialized_[r] = true;
  }

  // First touch replaces the row by the minibatch estimate; later touches
  // take a gamma-weighted step towards it. u2 is floored at u0 either way.
  void update(std::size_t i, double g1, double g2) {
    const auto r = row_of(i);
    auto& row = u_[r];
    if (!initialized_[r]) {
      row = {g1, std::max(g2, u0_)};
      initialized_[r] = true;
    } else {
      row[0] = (1.0 - gamma_) * row[0] + gamma_ * g1;
      row[1] = std::max((1.0 - gamma_) * row[1] + gamma_ * g2, u0_);
    }
  }

 private:
  static constexpr std::size_t kNoRow = std::numeric_limits<std::size_t>::max();

  double gamma_;
  double u0_;
  std::vector<std::size_t> row_of_;
  std::vector<std::array<double, 2>> u_;
  std::vector<bool> initialized_;
};

namespace detail {

// Scores of B+ then B, evaluated in one forward pass.
struct BatchScores {
  Matrix rows;
  std::vector<double> scores;
  std::size_t n_pos = 0;

  double pos(std::size_t k) const { return scores[k]; }
  double all(std::size_t j) const { return scores[n_pos + j]; }
};

inline BatchScores score_batch(const ScoreModel& model, const Dataset& data,
                               std::span<const std::size_t> batch_all,
                               std::span<const std::size_t> batch_pos) {
  if (batch_all.empty()) throw UsageError("batch B must be nonempty");
  if (batch_pos.empty()) throw UsageError("batch B+ must be nonempty");
  std::vector<std::size_t> idx(batch_pos.begin(), batch_pos.end());
  idx.insert(idx.end(), batch_all.begin(), batch_all.end());
  for (auto i : idx) {
    if (i >= data.size()) throw UsageError("batch index out of range");
  }
  BatchScores bs;
  bs.rows = data.X.gather(idx);
  bs.scores = forward(model, bs.rows);
  bs.n_pos = batch_pos.size();
  return bs;
}

template <PairLoss Loss>
void ug_from_scores(EstimatorState& state, const Loss& loss,
                    const BatchScores& bs, const Dataset& data,
                    std::span<const std::size_t> batch_all,
                    std::span<const std::size_t> batch_pos) {
  const double inv_b = 1.0 / static_cast<double>(batch_all.size());
  for (std::size_t k = 0; k < batch_pos.size(); ++k) {
    double g1 = 0.0, g2 = 0.0;
    for (std::size_t j = 0; j < batch_all.size(); ++j) {
      const double l = loss.value(bs.pos(k) - bs.all(j));
      if (data.y[batch_all[j]] == 1) g1 += l;
      g2 += l;
    }
    state.update(batch_pos[k], g1 * inv_b, g2 * inv_b);
  }
}

template <DifferentiablePairLoss Loss>
std::vector<double> estimator_from_scores(
    const EstimatorState& state, const ScoreModel& model, const Loss& loss,
    const BatchScores& bs, const Dataset& data,
    std::span<const std::size_t> batch_all,
    std::span<const std::size_t> batch_pos) {
  const double B = static_cast<double>(batch_all.size());
  const double inv_pos = 1.0 / static_cast<double>(batch_pos.size());
  std::vector<double> d_scores(bs.scores.size(), 0.0);
  for (std::size_t k = 0; k < batch_pos.size(); ++k) {
    const auto i = batch_pos[k];
    if (!state.initialized(i)) {
      throw UsageError("estimator row for positive " + std::to_string(i) +
                       " was never updated");
    }
    const auto [u1, u2] = state.u(i);
    if (!(u2 > 0.0)) {
      throw DomainError(
          "u2 = 0 for positive " + std::to_string(i) +
          "; set u0 > 0 or warm-start the estimator before stepping");
    }
    const double denom = B * u2 * u2;
    double anchor = 0.0;
    for (std::size_t j = 0; j < batch_all.size(); ++j) {
      const double weight =
          (u1 - (data.y[batch_all[j]] == 1 ? u2 : 0.0)) / denom;
      const double coef =
          weight * loss.derivative(bs.pos(k) - bs.all(j)) * inv_pos;
      anchor += coef;
      d_scores[bs.n_pos + j] -= coef;
    }
    d_scores[k] += anchor;
  }
  return backward(model, bs.rows, d_scores);
}

}  // namespace detail

// UG: refreshes u_i for every i in B+ from minibatch means over B.
template <PairLoss Loss>
void ug_update(EstimatorState& state, const ScoreModel& model,
               const Loss& loss, std::span<const std::size_t> batch_all,
               std::span<const std::size_t> batch_pos, const Dataset& data) {
  const auto bs = detail::score_batch(model, data, batch_all, batch_pos);
  detail::ug_from_scores(state, loss, bs, data, batch_all, batch_pos);
}

// Biased stochastic gradient estimate G(w) from the current u rows.
template <DifferentiablePairLoss Loss>
std::vector<double> gradient_estimator(const EstimatorState& state,
                                       const ScoreModel& model,
                                       const Loss& loss,
                                       std::span<const std::size_t> batch_all,
                                       std::span<const std::size_t> batch_pos,
                                       const Dataset& data) {
  const auto bs = detail::score_batch(model, data, batch_all, batch_pos);
  return detail::estimator_from_scores(state, model, loss, bs, data,
                                       batch_all, batch_pos);
}

enum class UpdateStyle { kSgd, kAdam, kAmsgrad };

inline std::string_view to_string(UpdateStyle s) {
  switch (s) {
    case UpdateStyle::kSgd: return "sgd";
    case UpdateStyle::kAdam: return "adam";
    case UpdateStyle::kAmsgrad: return "amsgrad";
  }
  return "?";
}

inline UpdateStyle parse_update_style(std::string_view name) {
  if (name == "sgd") return UpdateStyle::kSgd;
  if (name == "adam") return UpdateStyle::kAdam;
  if (name == "amsgrad") return UpdateStyle::kAmsgrad;
  throw UsageError("unknown update style '" + std::string(name) + "'");
}

struct UpdateParams {
  UpdateStyle style = UpdateStyle::kAdam;
  double alpha = 1e-3;
  double eta1 = 0.9;
  double eta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw UsageError("alpha must be finite and > 0");
    }
    if (style == UpdateStyle::kSgd) return;
    if (!(eta1 >= 0.0 && eta1 < 1.0) || !(eta2 >= 0.0 && eta2 < 1.0)) {
      throw UsageError("eta1 and eta2 must lie in [0,1)");
    }
    if (!(epsilon > 0.0)) throw UsageError("epsilon must be > 0");
    if (eta1 > std::sqrt(eta2)) {
      throw UsageError("need eta1 <= sqrt(eta2)");
    }
  }
};

// UW state. Adam-style steps follow
//   h <- eta1 h + (1 - eta1) G
//   v <- eta2 v_hat + (1 - eta2) G^2
//   v_hat <- v (adam) or max(v_hat, v) (amsgrad)
//   w <- w - alpha h / sqrt(eps + v_hat)
// with no bias correction.
struct UpdateState {
  UpdateParams params;
  std::vector<double> h, v, v_hat;

  UpdateState(UpdateParams p, std::size_t dim) : params(p) {
    params.validate();
    if (params.style != UpdateStyle::kSgd) {
      h.assign(dim, 0.0);
      v.assign(dim, 0.0);
      v_hat.assign(dim, 0.0);
    }
  }
};

inline void uw_step(UpdateState& state, std::vector<double>& w,
                    std::span<const double> G) {
  if (G.size() != w.size()) {
    throw UsageError("gradient dimension " + std::to_string(G.size()) +
                     " != parameter dimension " + std::to_string(w.size()));
  }
  for (std::size_t k = 0; k < G.size(); ++k) {
    if (!std::isfinite(G[k])) {
      throw NumericError("non-finite gradient component " + std::to_string(k));
    }
  }
  const auto& p = state.params;
  if (p.style == UpdateStyle::kSgd) {
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= p.alpha * G[k];
    return;
  }
  for (std::size_t k = 0; k < w.size(); ++k) {
    state.h[k] = p.eta1 * state.h[k] + (1.0 - p.eta1) * G[k];
    state.v[k] = p.eta2 * state.v_hat[k] + (1.0 - p.eta2) * G[k] * G[k];
    state.v_hat[k] = p.style == UpdateStyle::kAmsgrad
                         ? std::max(state.v_hat[k], state.v[k])
                         : state.v[k];
    w[k] -= p.alpha * state.h[k] / std::sqrt(p.epsilon + state.v_hat[k]);
  }
}

struct Schedule {
  double alpha;
  double gamma;
};

// alpha = 1 / (n+^{2/5} T^{3/5}), gamma = n+^{2/5} / T^{2/5}; needs T > n+.
inline Schedule theoretical_schedule(std::size_t n_pos, std::size_t T) {
  if (n_pos == 0 || T <= n_pos) {
    throw UsageError("theoretical schedule needs T > n+ >= 1 (T = " +
                     std::to_string(T) + ", n+ = " + std::to_string(n_pos) +
                     ")");
  }
  const double np = static_cast<double>(n_pos);
  const double t = static_cast<double>(T);
  return {1.0 / (std::pow(np, 0.4) * std::pow(t, 0.6)),
          std::pow(np, 0.4) / std::pow(t, 0.4)};
}

struct SoapConfig {
  UpdateParams update;
  double gamma = 0.9;  // weight on the fresh minibatch estimate in UG
  double u0 = 0.0;
  bool theoretical = false;  // override alpha and gamma by the schedule
  std::size_t iterations = 1000;
  std::size_t batch = 64;
  std::size_t batch_pos = 2;
  std::size_t eval_every = 100;
  bool nested_batch = false;
  std::uint64_t seed = 0;
};

struct TrainStats {
  std::size_t clip_violations = 0;
  double min_touched_u2 = std::numeric_limits<double>::infinity();
  LossBounds bounds;
  Schedule schedule{0.0, 0.0};  // alpha, gamma actually used
};

struct TrainResult {
  ScoreModel model;
  std::vector<RunRecord> log;
  TrainStats stats;
};

struct TrainHooks {
  const Dataset* val = nullptr;
  RecordSink on_record;
  // Called after every update with the new iterate.
  std::function<void(std::size_t iter, const ScoreModel&,
                     const EstimatorState&, const UpdateState&)>
      on_step;
};

namespace detail {

template <PairLoss Loss>
RunRecord evaluate(std::size_t iter, const ScoreModel& model, const Loss& loss,
                   const Dataset& train, const Dataset* val, double grad_norm,
                   const Stopwatch& clock) {
  const auto scores = forward(model, train.X);
  RunRecord r;
  r.iter = iter;
  r.objective = objective_from_scores(loss, scores, train);
  r.train_ap = average_precision(scores, train.y);
  r.val_ap = val ? average_precision(forward(model, val->X), val->y)
                 : std::numeric_limits<double>::quiet_NaN();
  r.grad_norm = grad_norm;
  r.wall_ms = clock.elapsed_ms();
  return r;
}

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace detail

// Runs SOAP for config.iterations steps and returns the last iterate.
// Records are passed to hooks.on_record as soon as they are produced, so a
// failing run still leaves the records logged up to that point.
template <DifferentiablePairLoss Loss>
TrainResult soap_train(const SoapConfig& config, const Dataset& data,
                       ScoreModel model, const Loss& loss,
                       const TrainHooks& hooks = {}) {
  model.validate();
  if (data.n_pos() == 0) throw UsageError("training data has no positives");
  if (config.eval_every == 0) throw UsageError("eval_every must be >= 1");

  TrainResult result;
  if constexpr (std::is_same_v<Loss, SurrogateSpec>) {
    loss.validate();
    result.stats.bounds = model.loss_bounds(loss);
  }
  UpdateParams up = config.update;
  double gamma = config.gamma;
  if (config.theoretical) {
    const auto s = theoretical_schedule(data.n_pos(), config.iterations);
    up.alpha = s.alpha;
    gamma = s.gamma;
  }
  result.stats.schedule = {up.alpha, gamma};

  EstimatorState est(data, gamma, config.u0);
  UpdateState upd(up, model.params.size());
  StratifiedSampler sampler(data, config.batch_pos, config.batch, config.seed,
                            config.nested_batch);
  const Stopwatch clock;

  for (std::size_t t = 1; t <= config.iterations; ++t) {
    const auto batch = sampler.next();
    const auto bs = detail::score_batch(model, data, batch.all, batch.pos);
    detail::ug_from_scores(est, loss, bs, data, batch.all, batch.pos);
    for (auto i : batch.pos) {
      const double u2 = est.u(i)[1];
      result.stats.min_touched_u2 = std::min(result.stats.min_touched_u2, u2);
      if (u2 < config.u0) ++result.stats.clip_violations;
    }
    const auto G = detail::estimator_from_scores(est, model, loss, bs, data,
                                                 batch.all, batch.pos);
    uw_step(upd, model.params, G);
    if (hooks.on_step) hooks.on_step(t, model, est, upd);
    if (t % config.eval_every == 0) {
      auto r = detail::evaluate(t, model, loss, data, hooks.val,
                                detail::l2_norm(G), clock);
      if (hooks.on_record) hooks.on_record(r);
      result.log.push_back(r);
    }
  }
  result.model = std::move(model);
  return result;
}

}  // namespace soap

#endif  // SOAP_OPTIMIZER_HPP_
