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

// Score models h_w(x) with hand-written reverse mode. Optimizers only see
// the flat parameter vector, forward() and backward().

#ifndef SOAP_MODEL_HPP_
#define SOAP_MODEL_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "soap/error.hpp"
#include "soap/matrix.hpp"
#include "soap/surrogate.hpp"

namespace soap {

// linear{d_in} when hidden is empty, otherwise a tanh MLP
// d_in -> hidden[0] -> ... -> 1.
struct Architecture {
  std::size_t d_in = 0;
  std::vector<std::size_t> hidden;

  static Architecture linear(std::size_t d_in) { return {d_in, {}}; }
  static Architecture mlp(std::size_t d_in, std::vector<std::size_t> hidden) {
    return {d_in, std::move(hidden)};
  }

  bool is_linear() const { return hidden.empty(); }

  // Layer widths including input and the scalar output.
  std::vector<std::size_t> widths() const {
    std::vector<std::size_t> w{d_in};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(1);
    return w;
  }

  std::size_t parameter_count() const {
    const auto w = widths();
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
      count += w[l] * w[l + 1] + w[l + 1];
    }
    return count;
  }

  void validate() const {
    if (d_in == 0) throw UsageError("architecture needs d_in >= 1");
    for (auto h : hidden) {
      if (h == 0) throw UsageError("hidden layer width must be >= 1");
    }
  }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

// "linear" or "mlp:16,8".
inline Architecture parse_architecture(std::string_view text,
                                       std::size_t d_in) {
  if (text == "linear") return Architecture::linear(d_in);
  if (text.starts_with("mlp:")) {
    Architecture arch{d_in, {}};
    std::stringstream ss{std::string(text.substr(4))};
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t used = 0;
        const long v = std::stol(tok, &used);
        if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
        arch.hidden.push_back(static_cast<std::size_t>(v));
      } catch (const std::exception&) {
        throw UsageError("bad hidden width '" + tok + "' in arch '" +
                         std::string(text) + "'");
      }
    }
    if (arch.hidden.empty()) {
      throw UsageError("mlp arch needs at least one hidden width");
    }
    return arch;
  }
  throw UsageError("unknown arch '" + std::string(text) +
                   "' (expected linear or mlp:W1,W2,...)");
}

inline std::string arch_name(const Architecture& arch) {
  if (arch.is_linear()) return "linear";
  std::string s = "mlp:";
  for (std::size_t k = 0; k < arch.hidden.size(); ++k) {
    if (k) s += ',';
    s += std::to_string(arch.hidden[k]);
  }
  return s;
}

struct ScoreModel {
  Architecture arch;
  bool squash = true;  // apply a sigmoid to the raw output
  std::vector<double> params;

  void validate() const {
    arch.validate();
    if (params.size() != arch.parameter_count()) {
      throw UsageError("model has " + std::to_string(params.size()) +
                       " parameters, architecture needs " +
                       std::to_string(arch.parameter_count()));
    }
  }

  // Score range is (0,1) exactly when squashed.
  LossBounds loss_bounds(const SurrogateSpec& spec) const {
    return soap::loss_bounds(spec, squash);
  }
};

// Deterministic given seed. Linear models start at zero; MLP weights and
// biases are uniform in +-1/sqrt(fan_in).
inline std::vector<double> init_params(const Architecture& arch,
                                       std::uint64_t seed) {
  arch.validate();
  std::vector<double> params(arch.parameter_count(), 0.0);
  if (arch.is_linear()) return params;
  std::mt19937_64 rng(seed);
  const auto w = arch.widths();
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t n = w[l] * w[l + 1] + w[l + 1];
    for (std::size_t k = 0; k < n; ++k) params[offset + k] = dist(rng);
    offset += n;
  }
  return params;
}

inline ScoreModel make_model(const Architecture& arch, bool squash,
                             std::uint64_t seed) {
  return ScoreModel{arch, squash, init_params(arch, seed)};
}

namespace detail {

inline void check_input(const ScoreModel& model, const Matrix& X) {
  model.validate();
  if (X.cols() != model.arch.d_in) {
    throw UsageError("feature matrix has " + std::to_string(X.cols()) +
                     " columns, model expects " +
                     std::to_string(model.arch.d_in));
  }
  for (double v : X.data()) {
    if (!std::isfinite(v)) throw NumericError("non-finite feature value");
  }
}

// Forward pass for one row. acts[l] receives the activation of layer l
// (acts[0] is the input); returns the raw (pre-squash) output.
inline double forward_row(const ScoreModel& model,
                          std::span<const double> x,
                          std::vector<std::vector<double>>& acts) {
  const auto w = model.arch.widths();
  acts.resize(w.size() - 1);
  acts[0].assign(x.begin(), x.end());
  const double* p = model.params.data();
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const std::size_t in = w[l], out = w[l + 1];
    const double* W = p;
    const double* b = p + in * out;
    const bool last = l + 2 == w.size();
    if (last) {
      double z = b[0];
      for (std::size_t k = 0; k < in; ++k) z += W[k] * acts[l][k];
      return z;
    }
    auto& next = acts[l + 1];
    next.assign(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      double z = b[o];
      for (std::size_t k = 0; k < in; ++k) z += W[o * in + k] * acts[l][k];
      next[o] = std::tanh(z);
    }
    p += in * out + out;
  }
  return 0.0;
}

}  // namespace detail

inline std::vector<double> forward(const ScoreModel& model, const Matrix& X) {
  detail::check_input(model, X);
  std::vector<double> scores(X.rows());
  std::vector<std::vector<double>> acts;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const double z = detail::forward_row(model, X.row(i), acts);
    scores[i] = model.squash ? detail::logistic_sigmoid(z) : z;
  }
  return scores;
}

// Vector-Jacobian product: sum_i d_scores[i] * grad_w h_w(x_i).
inline std::vector<double> backward(const ScoreModel& model, const Matrix& X,
                                    std::span<const double> d_scores) {
  detail::check_input(model, X);
  if (d_scores.size() != X.rows()) {
    throw UsageError("d_scores has " + std::to_string(d_scores.size()) +
                     " entries for " + std::to_string(X.rows()) + " rows");
  }
  const auto w = model.arch.widths();
  const std::size_t layers = w.size() - 1;
  std::vector<std::size_t> offsets(layers);
  for (std::size_t l = 0, off = 0; l < layers; ++l) {
    offsets[l] = off;
    off += w[l] * w[l + 1] + w[l + 1];
  }

  std::vector<double> grad(model.params.size(), 0.0);
  std::vector<std::vector<double>> acts;
  std::vector<double> delta, prev_delta;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    if (d_scores[i] == 0.0) continue;
    const double z = detail::forward_row(model, X.row(i), acts);
    double g = d_scores[i];
    if (model.squash) {
      const double s = detail::logistic_sigmoid(z);
      g *= s * (1.0 - s);
    }
    delta.assign(1, g);
    for (std::size_t l = layers; l-- > 0;) {
      const std::size_t in = w[l], out = w[l + 1];
      const double* W = model.params.data() + offsets[l];
      double* gW = grad.data() + offsets[l];
      double* gb = gW + in * out;
      const auto& a = acts[l];
      for (std::size_t o = 0; o < out; ++o) {
        gb[o] += delta[o];
        for (std::size_t k = 0; k < in; ++k) gW[o * in + k] += delta[o] * a[k];
      }
      if (l == 0) break;
      prev_delta.assign(in, 0.0);
      for (std::size_t k = 0; k < in; ++k) {
        double s = 0.0;
        for (std::size_t o = 0; o < out; ++o) s += W[o * in + k] * delta[o];
        prev_delta[k] = s * (1.0 - a[k] * a[k]);  // tanh'
      }
      delta.swap(prev_delta);
    }
  }
  return grad;
}

// Checkpoint text format:
//
//   arch=<linear|mlp:W1,...> d_in=<d> activation=tanh squash=<0|1> params=<D>
//   <param 0>
//   ...
//   <param D-1>
//
// Values are printed with 17 significant digits so they round-trip exactly.
inline void save_checkpoint(std::ostream& os, const ScoreModel& model) {
  model.validate();
  os << "arch=" << arch_name(model.arch) << " d_in=" << model.arch.d_in
     << " activation=tanh squash=" << (model.squash ? 1 : 0)
     << " params=" << model.params.size() << '\n';
  char buf[40];
  for (double v : model.params) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", v);
    os << buf;
  }
}

inline ScoreModel load_checkpoint(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw ParseError(1, "empty checkpoint");
  std::string arch_text;
  std::size_t d_in = 0, count = 0;
  int squash = -1;
  std::istringstream hs(header);
  std::string tok;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ParseError(1, "bad token '" + tok + "'");
    const auto key = tok.substr(0, eq), val = tok.substr(eq + 1);
    try {
      if (key == "arch") arch_text = val;
      else if (key == "d_in") d_in = std::stoul(val);
      else if (key == "squash") squash = std::stoi(val);
      else if (key == "params") count = std::stoul(val);
      else if (key == "activation" && val != "tanh")
        throw ParseError(1, "unsupported activation '" + val + "'");
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      throw ParseError(1, "bad value in '" + tok + "'");
    }
  }
  if (arch_text.empty() || d_in == 0 || (squash != 0 && squash != 1)) {
    throw ParseError(1, "incomplete checkpoint header");
  }
  ScoreModel model;
  try {
    model.arch = parse_architecture(arch_text, d_in);
  } catch (const UsageError& e) {
    throw ParseError(1, e.what());
  }
  model.squash = squash == 1;
  if (count != model.arch.parameter_count()) {
    throw ParseError(1, "parameter count does not match architecture");
  }
  model.params.reserve(count);
  std::string line;
  std::size_t lineno = 1;
  while (model.params.size() < count && std::getline(is, line)) {
    ++lineno;
    try {
      std::size_t used = 0;
      const double v = std::stod(line, &used);
      if (used != line.size()) throw std::invalid_argument(line);
      model.params.push_back(v);
    } catch (const std::exception&) {
      throw ParseError(lineno, "bad parameter value '" + line + "'");
    }
  }
  if (model.params.size() != count) {
    throw ParseError(lineno, "checkpoint truncated");
  }
  return model;
}

}  // namespace soap

#endif  // SOAP_MODEL_HPP_
