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

// Experiment orchestration: flat key=value configs, seeded multi-run
// execution with artifact files, batch-size sweeps and objective/AP
// consistency reports.
//
// Output layout of run_experiment(config):
//
//   <out_dir>/config.txt                 resolved configuration
//   <out_dir>/summary.csv                method,seed,test_ap,test_auprc
//   <out_dir>/seed_<s>/curve.csv         iter,objective,train_ap,val_ap,grad_norm,wall_ms
//   <out_dir>/seed_<s>/pr_curve.csv      threshold,recall,precision (test split)
//   <out_dir>/seed_<s>/model.ckpt        see save_checkpoint()
//
// summary.csv ends with a "mean" and a "std" row (unbiased, n - 1; 0 for a
// single seed) over the seeds that completed.

#ifndef SOAP_HARNESS_HPP_
#define SOAP_HARNESS_HPP_

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "soap/baselines.hpp"
#include "soap/data.hpp"
#include "soap/error.hpp"
#include "soap/metrics.hpp"
#include "soap/model.hpp"
#include "soap/objective.hpp"
#include "soap/optimizer.hpp"
#include "soap/run_record.hpp"
#include "soap/stats.hpp"
#include "soap/surrogate.hpp"

namespace soap {

enum class Method { kSoapSgd, kSoapAdam, kSoapAmsgrad, kCe, kCbCe, kFocal };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::kSoapSgd: return "soap_sgd";
    case Method::kSoapAdam: return "soap_adam";
    case Method::kSoapAmsgrad: return "soap_amsgrad";
    case Method::kCe: return "ce";
    case Method::kCbCe: return "cb_ce";
    case Method::kFocal: return "focal";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  for (auto m : {Method::kSoapSgd, Method::kSoapAdam, Method::kSoapAmsgrad,
                 Method::kCe, Method::kCbCe, Method::kFocal}) {
    if (to_string(m) == s) return m;
  }
  throw UsageError("unknown method '" + std::string(s) + "'");
}

inline bool is_soap(Method m) {
  return m == Method::kSoapSgd || m == Method::kSoapAdam ||
         m == Method::kSoapAmsgrad;
}

struct ExperimentConfig {
  // Data: CSV when data_csv is set, otherwise isotropic Gaussians.
  std::string data_csv;
  std::size_t n = 4000;
  std::size_t d = 10;
  double ratio = 0.02;
  double sep = 1.5;
  std::uint64_t data_seed = 0;
  double keep = 1.0;
  std::array<double, 3> split{0.8, 0.1, 0.1};

  std::string arch = "linear";
  bool squash = true;

  Method method = Method::kSoapAdam;
  SurrogateSpec surrogate;
  double focal_gamma = 2.0;
  double cb_beta = 0.999;
  UpdateStyle optimizer = UpdateStyle::kAdam;  // baselines and warm start

  std::size_t T = 1000;
  std::size_t B = 64;
  std::size_t B_pos = 2;
  double alpha = 1e-3;
  double gamma = 0.9;
  double u0 = 0.0;
  double eta1 = 0.9;
  double eta2 = 0.999;
  double epsilon = 1e-8;
  bool theoretical = false;  // schedule=theoretical
  bool nested_batch = false;

  std::vector<std::uint64_t> seeds{1};
  std::size_t eval_every = 100;
  std::size_t warm_start = 0;    // CE pre-training steps before SOAP
  double warm_start_alpha = 0.0;  // 0: reuse alpha
  std::string out_dir = "out";
  std::size_t workers = 1;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    T out{};
    if constexpr (std::is_floating_point_v<T>) {
      out = static_cast<T>(std::stod(v, &used));
    } else {
      if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
      out = static_cast<T>(std::stoull(v, &used));
    }
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw UsageError("bad value '" + v + "' for key '" + key + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw UsageError("bad boolean '" + v + "' for key '" + key + "'");
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Shortest text that parses back to the same double.
inline std::string format_shortest(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

struct ConfigKey {
  std::string_view name;
  std::string_view help;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define SOAP_NUM_KEY(field, type, help)                                   \
  ConfigKey {                                                             \
    #field, help,                                                         \
        [](ExperimentConfig& c, const std::string& v) {                   \
          c.field = parse_number<type>(#field, v);                        \
        },                                                                \
        [](const ExperimentConfig& c) {                                   \
          if constexpr (std::is_floating_point_v<type>)                   \
            return format_shortest(c.field);                                \
          else                                                            \
            return std::to_string(c.field);                               \
        }                                                                 \
  }

inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"data_csv", "CSV dataset path (empty: synthetic Gaussians)",
       [](ExperimentConfig& c, const std::string& v) { c.data_csv = v; },
       [](const ExperimentConfig& c) { return c.data_csv; }},
      SOAP_NUM_KEY(n, std::size_t, "synthetic sample count"),
      SOAP_NUM_KEY(d, std::size_t, "synthetic feature dimension"),
      SOAP_NUM_KEY(ratio, double, "synthetic positive fraction"),
      SOAP_NUM_KEY(sep, double, "synthetic class-mean separation"),
      SOAP_NUM_KEY(data_seed, std::uint64_t, "seed for data generation"),
      SOAP_NUM_KEY(keep, double, "fraction of positives kept"),
      {"split", "train,val,test fractions",
       [](ExperimentConfig& c, const std::string& v) {
         const auto parts = split_list(v);
         if (parts.size() != 3) throw UsageError("split needs 3 fractions");
         for (int k = 0; k < 3; ++k) {
           c.split[k] = parse_number<double>("split", parts[k]);
         }
       },
       [](const ExperimentConfig& c) {
         return format_shortest(c.split[0]) + "," + format_shortest(c.split[1]) +
                "," + format_shortest(c.split[2]);
       }},
      {"arch", "linear or mlp:W1,W2,...",
       [](ExperimentConfig& c, const std::string& v) {
         parse_architecture(v, 1);
         c.arch = v;
       },
       [](const ExperimentConfig& c) { return c.arch; }},
      {"squash", "sigmoid on the model output (0/1)",
       [](ExperimentConfig& c, const std::string& v) {
         c.squash = parse_bool("squash", v);
       },
       [](const ExperimentConfig& c) { return std::string(c.squash ? "1" : "0"); }},
      {"method", "soap_sgd|soap_adam|soap_amsgrad|ce|cb_ce|focal",
       [](ExperimentConfig& c, const std::string& v) { c.method = parse_method(v); },
       [](const ExperimentConfig& c) { return std::string(to_string(c.method)); }},
      {"surrogate", "squared_hinge|logistic|sigmoid",
       [](ExperimentConfig& c, const std::string& v) {
         c.surrogate.kind = parse_surrogate_kind(v);
       },
       [](const ExperimentConfig& c) {
         return std::string(to_string(c.surrogate.kind));
       }},
      {"margin", "squared-hinge margin m",
       [](ExperimentConfig& c, const std::string& v) {
         c.surrogate.margin = parse_number<double>("margin", v);
       },
       [](const ExperimentConfig& c) { return format_shortest(c.surrogate.margin); }},
      {"scale", "logistic/sigmoid scale c",
       [](ExperimentConfig& c, const std::string& v) {
         c.surrogate.scale = parse_number<double>("scale", v);
       },
       [](const ExperimentConfig& c) { return format_shortest(c.surrogate.scale); }},
      SOAP_NUM_KEY(focal_gamma, double, "focal loss exponent"),
      SOAP_NUM_KEY(cb_beta, double, "class-balanced beta"),
      {"optimizer", "sgd|adam|amsgrad for baselines and warm start",
       [](ExperimentConfig& c, const std::string& v) {
         c.optimizer = parse_update_style(v);
       },
       [](const ExperimentConfig& c) { return std::string(to_string(c.optimizer)); }},
      SOAP_NUM_KEY(T, std::size_t, "training iterations"),
      SOAP_NUM_KEY(B, std::size_t, "minibatch size"),
      SOAP_NUM_KEY(B_pos, std::size_t, "positives per iteration"),
      SOAP_NUM_KEY(alpha, double, "step size"),
      SOAP_NUM_KEY(gamma, double, "moving-average weight on new estimates"),
      SOAP_NUM_KEY(u0, double, "floor on u2"),
      SOAP_NUM_KEY(eta1, double, "first-moment decay"),
      SOAP_NUM_KEY(eta2, double, "second-moment decay"),
      SOAP_NUM_KEY(epsilon, double, "Adam epsilon (inside the sqrt)"),
      {"schedule", "manual|theoretical",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "manual") c.theoretical = false;
         else if (v == "theoretical") c.theoretical = true;
         else throw UsageError("schedule must be manual or theoretical");
       },
       [](const ExperimentConfig& c) {
         return std::string(c.theoretical ? "theoretical" : "manual");
       }},
      {"nested_batch", "draw B+ inside B (0/1)",
       [](ExperimentConfig& c, const std::string& v) {
         c.nested_batch = parse_bool("nested_batch", v);
       },
       [](const ExperimentConfig& c) {
         return std::string(c.nested_batch ? "1" : "0");
       }},
      {"seeds", "comma-separated run seeds",
       [](ExperimentConfig& c, const std::string& v) {
         c.seeds.clear();
         for (const auto& s : split_list(v)) {
           c.seeds.push_back(parse_number<std::uint64_t>("seeds", s));
         }
         if (c.seeds.empty()) throw UsageError("seeds must not be empty");
       },
       [](const ExperimentConfig& c) {
         std::string s;
         for (std::size_t k = 0; k < c.seeds.size(); ++k) {
           if (k) s += ',';
           s += std::to_string(c.seeds[k]);
         }
         return s;
       }},
      SOAP_NUM_KEY(eval_every, std::size_t, "iterations between log records"),
      SOAP_NUM_KEY(warm_start, std::size_t, "CE pre-training steps"),
      SOAP_NUM_KEY(warm_start_alpha, double, "warm-start step size (0: alpha)"),
      {"out_dir", "output directory",
       [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; },
       [](const ExperimentConfig& c) { return c.out_dir; }},
      SOAP_NUM_KEY(workers, std::size_t, "seeds trained concurrently"),
  };
  return keys;
}

#undef SOAP_NUM_KEY

}  // namespace detail

inline std::vector<std::pair<std::string, std::string>> config_key_help() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : detail::config_keys()) {
    out.emplace_back(std::string(k.name), std::string(k.help));
  }
  return out;
}

inline void apply_setting(ExperimentConfig& config, const std::string& key,
                          const std::string& value) {
  for (const auto& k : detail::config_keys()) {
    if (k.name == key) {
      k.set(config, value);
      return;
    }
  }
  throw UsageError("unknown config key '" + key + "'");
}

// "key = value" lines; '#' starts a comment.
inline void apply_config_text(ExperimentConfig& config, std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ParseError(lineno, "expected key=value");
    }
    try {
      apply_setting(config, detail::trim(text.substr(0, eq)),
                    detail::trim(text.substr(eq + 1)));
    } catch (const UsageError& e) {
      throw ParseError(lineno, e.what());
    }
  }
}

inline void write_config_text(std::ostream& os, const ExperimentConfig& c) {
  for (const auto& k : detail::config_keys()) {
    os << k.name << " = " << k.get(c) << '\n';
  }
}

inline void validate(const ExperimentConfig& c) {
  if (c.T > 0 && c.eval_every == 0) throw UsageError("eval_every must be >= 1");
  if (c.B == 0 || c.B_pos == 0) throw UsageError("B and B_pos must be >= 1");
  if (c.workers == 0) throw UsageError("workers must be >= 1");
  if (c.seeds.empty()) throw UsageError("no seeds given");
  c.surrogate.validate();
  BaselineSpec{BaselineKind::kCe, c.focal_gamma, c.cb_beta}.validate();
  UpdateParams{c.optimizer, c.alpha, c.eta1, c.eta2, c.epsilon}.validate();
  if (!(c.gamma > 0.0 && c.gamma <= 1.0)) {
    throw UsageError("gamma must lie in (0,1]");
  }
  if (!c.squash && !is_soap(c.method)) {
    throw UsageError("baseline methods need squash=1");
  }
}

// Dataset named by the config, before splitting.
inline Dataset load_experiment_data(const ExperimentConfig& c) {
  Dataset data = c.data_csv.empty()
                     ? gen_gaussians(c.n, c.d, c.ratio, c.sep, c.data_seed)
                     : load_csv(c.data_csv);
  if (c.keep < 1.0) data = subsample_positives(data, c.keep, c.data_seed);
  return data;
}

struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double test_ap = std::numeric_limits<double>::quiet_NaN();
  double test_auprc = std::numeric_limits<double>::quiet_NaN();
  std::vector<RunRecord> log;
  ScoreModel model;
};

struct ExperimentSummary {
  Method method = Method::kSoapAdam;
  std::vector<SeedResult> seeds;
  double mean_test_ap = std::numeric_limits<double>::quiet_NaN();
  double std_test_ap = std::numeric_limits<double>::quiet_NaN();
  double mean_test_auprc = std::numeric_limits<double>::quiet_NaN();
  double std_test_auprc = std::numeric_limits<double>::quiet_NaN();

  std::size_t failures() const {
    std::size_t f = 0;
    for (const auto& s : seeds) f += s.ok ? 0 : 1;
    return f;
  }
  std::vector<double> test_aps() const {
    std::vector<double> v;
    for (const auto& s : seeds) {
      if (s.ok) v.push_back(s.test_ap);
    }
    return v;
  }
};

class RunFailure : public Error {
 public:
  using Error::Error;
};

struct RunOptions {
  bool write_files = true;
};

namespace detail {

inline UpdateParams update_params(const ExperimentConfig& c, UpdateStyle style,
                                  double alpha) {
  return {style, alpha, c.eta1, c.eta2, c.epsilon};
}

inline BaselineConfig baseline_config(const ExperimentConfig& c,
                                      std::size_t iterations, double alpha,
                                      std::uint64_t seed) {
  BaselineConfig bc;
  bc.update = update_params(c, c.optimizer, alpha);
  bc.iterations = iterations;
  bc.batch = c.B;
  bc.eval_every = c.eval_every == 0 ? 1 : c.eval_every;
  bc.seed = seed;
  return bc;
}

inline SeedResult run_seed(const ExperimentConfig& c, const Dataset& data,
                           std::uint64_t seed, const RunOptions& opts) {
  SeedResult res;
  res.seed = seed;
  const std::filesystem::path dir =
      std::filesystem::path(c.out_dir) / ("seed_" + std::to_string(seed));
  std::ofstream curve;
  if (opts.write_files) {
    std::filesystem::create_directories(dir);
    curve.open(dir / "curve.csv");
    if (!curve) throw UsageError("cannot write " + (dir / "curve.csv").string());
    curve << kRunRecordHeader << '\n';
  }
  try {
    const auto split = stratified_split(data, c.split, seed);
    ScoreModel model = make_model(parse_architecture(c.arch, data.dim()),
                                  c.squash, seed);
    TrainHooks hooks;
    hooks.val = &split.val;
    if (opts.write_files) {
      hooks.on_record = [&](const RunRecord& r) {
        write_record(curve, r);
        curve.flush();
      };
    }
    const std::size_t n_pos = split.train.n_pos();
    const std::size_t n_neg = split.train.size() - n_pos;

    if (c.warm_start > 0 && is_soap(c.method)) {
      const double a = c.warm_start_alpha > 0.0 ? c.warm_start_alpha : c.alpha;
      model = baseline_train(baseline_config(c, c.warm_start, a, seed ^ 0x5741),
                             split.train, std::move(model),
                             {BaselineKind::kCe})
                  .model;
    }

    TrainResult tr;
    if (is_soap(c.method)) {
      SoapConfig sc;
      const UpdateStyle style = c.method == Method::kSoapSgd ? UpdateStyle::kSgd
                                : c.method == Method::kSoapAdam
                                    ? UpdateStyle::kAdam
                                    : UpdateStyle::kAmsgrad;
      sc.update = update_params(c, style, c.alpha);
      sc.gamma = c.gamma;
      sc.u0 = c.u0;
      sc.theoretical = c.theoretical;
      sc.iterations = c.T;
      sc.batch = c.B;
      sc.batch_pos = c.B_pos;
      sc.eval_every = c.eval_every == 0 ? 1 : c.eval_every;
      sc.nested_batch = c.nested_batch;
      sc.seed = seed;
      tr = soap_train(sc, split.train, std::move(model), c.surrogate, hooks);
    } else {
      const BaselineKind kind = c.method == Method::kCe     ? BaselineKind::kCe
                                : c.method == Method::kCbCe ? BaselineKind::kCbCe
                                                            : BaselineKind::kFocal;
      const auto spec = with_class_counts(
          {kind, c.focal_gamma, c.cb_beta}, n_pos, n_neg);
      tr = baseline_train(baseline_config(c, c.T, c.alpha, seed), split.train,
                          std::move(model), spec, hooks);
    }

    const auto test_scores = forward(tr.model, split.test.X);
    res.test_ap = average_precision(test_scores, split.test.y);
    const auto curve_pts = pr_curve(test_scores, split.test.y);
    res.test_auprc = auprc_trapezoid(curve_pts);
    if (opts.write_files) {
      std::ofstream pr(dir / "pr_curve.csv");
      curve_pts.write_csv(pr);
      std::ofstream ckpt(dir / "model.ckpt");
      save_checkpoint(ckpt, tr.model);
    }
    res.log = std::move(tr.log);
    res.model = std::move(tr.model);
    res.ok = true;
  } catch (const Error& e) {
    res.error = e.what();
  }
  return res;
}

inline void write_summary_row(std::ostream& os, std::string_view method,
                              const std::string& seed, double ap,
                              double auprc) {
  os << method << ',' << seed << ',' << format_double(ap) << ','
     << format_double(auprc) << '\n';
}

}  // namespace detail

inline void write_summary_csv(std::ostream& os, const ExperimentSummary& s) {
  os << "method,seed,test_ap,test_auprc\n";
  const auto m = to_string(s.method);
  for (const auto& r : s.seeds) {
    detail::write_summary_row(os, m, std::to_string(r.seed), r.test_ap,
                              r.test_auprc);
  }
  detail::write_summary_row(os, m, "mean", s.mean_test_ap, s.mean_test_auprc);
  detail::write_summary_row(os, m, "std", s.std_test_ap, s.std_test_auprc);
}

// Trains config.method once per seed. A failing seed is recorded and the
// rest proceed; RunFailure is thrown only when every seed fails.
inline ExperimentSummary run_experiment(const ExperimentConfig& c,
                                        const RunOptions& opts = {}) {
  validate(c);
  const Dataset data = load_experiment_data(c);
  if (opts.write_files) {
    std::filesystem::create_directories(c.out_dir);
    std::ofstream cfg(std::filesystem::path(c.out_dir) / "config.txt");
    write_config_text(cfg, c);
  }

  ExperimentSummary summary;
  summary.method = c.method;
  summary.seeds.resize(c.seeds.size());
  for (std::size_t start = 0; start < c.seeds.size(); start += c.workers) {
    const std::size_t end = std::min(c.seeds.size(), start + c.workers);
    if (end - start == 1) {
      summary.seeds[start] = detail::run_seed(c, data, c.seeds[start], opts);
      continue;
    }
    std::vector<std::future<SeedResult>> jobs;
    for (std::size_t k = start; k < end; ++k) {
      jobs.push_back(std::async(std::launch::async, [&, k] {
        return detail::run_seed(c, data, c.seeds[k], opts);
      }));
    }
    for (std::size_t k = start; k < end; ++k) {
      summary.seeds[k] = jobs[k - start].get();
    }
  }

  std::vector<double> aps, auprcs;
  for (const auto& r : summary.seeds) {
    if (!r.ok) continue;
    aps.push_back(r.test_ap);
    auprcs.push_back(r.test_auprc);
  }
  if (!aps.empty()) {
    summary.mean_test_ap = mean(aps);
    summary.std_test_ap = sample_std(aps);
    summary.mean_test_auprc = mean(auprcs);
    summary.std_test_auprc = sample_std(auprcs);
  }
  if (opts.write_files) {
    std::ofstream out(std::filesystem::path(c.out_dir) / "summary.csv");
    write_summary_csv(out, summary);
  }
  if (aps.empty()) {
    throw RunFailure("all " + std::to_string(c.seeds.size()) +
                     " seeds failed; first error: " + summary.seeds[0].error);
  }
  return summary;
}

struct SweepRow {
  std::size_t batch = 0;
  ExperimentSummary summary;
};

// One run_experiment per batch size, same seeds, outputs under
// <out_dir>/B_<size>/; sweep.csv lists batch_size,seed,test_ap,test_auprc.
inline std::vector<SweepRow> batch_size_sweep(
    const ExperimentConfig& c, const std::vector<std::size_t>& sizes,
    const RunOptions& opts = {}) {
  if (sizes.empty()) throw UsageError("batch-size sweep needs sizes");
  std::vector<SweepRow> rows;
  for (auto b : sizes) {
    ExperimentConfig cb = c;
    cb.B = b;
    cb.out_dir =
        (std::filesystem::path(c.out_dir) / ("B_" + std::to_string(b))).string();
    rows.push_back({b, run_experiment(cb, opts)});
  }
  if (opts.write_files) {
    std::filesystem::create_directories(c.out_dir);
    std::ofstream out(std::filesystem::path(c.out_dir) / "sweep.csv");
    out << "batch_size,seed,test_ap,test_auprc\n";
    for (const auto& r : rows) {
      const auto b = std::to_string(r.batch);
      for (const auto& s : r.summary.seeds) {
        out << b << ',' << s.seed << ',' << detail::format_double(s.test_ap)
            << ',' << detail::format_double(s.test_auprc) << '\n';
      }
      out << b << ",mean," << detail::format_double(r.summary.mean_test_ap)
          << ',' << detail::format_double(r.summary.mean_test_auprc) << '\n';
    }
  }
  return rows;
}

struct ConsistencyReport {
  std::size_t records = 0;
  std::optional<double> spearman;  // nullopt: a series is constant
  std::optional<double> pearson;
};

// Correlation between -objective and train AP over a run log.
inline ConsistencyReport consistency_report(
    const std::vector<RunRecord>& log) {
  if (log.size() < 10) {
    throw UsageError("consistency report needs >= 10 records, got " +
                     std::to_string(log.size()));
  }
  std::vector<double> neg_obj, ap;
  for (const auto& r : log) {
    neg_obj.push_back(-r.objective);
    ap.push_back(r.train_ap);
  }
  return {log.size(), spearman(neg_obj, ap), pearson(neg_obj, ap)};
}

inline std::vector<RunRecord> read_run_log(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line) || detail::trim(line) != kRunRecordHeader) {
    throw ParseError(1, std::string("expected header ") + kRunRecordHeader);
  }
  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_list(line);
    if (f.size() != 6) throw ParseError(lineno, "expected 6 fields");
    try {
      RunRecord r;
      r.iter = std::stoull(f[0]);
      r.objective = std::stod(f[1]);
      r.train_ap = std::stod(f[2]);
      r.val_ap = std::stod(f[3]);
      r.grad_norm = std::stod(f[4]);
      r.wall_ms = std::stod(f[5]);
      if (!out.empty() && r.iter <= out.back().iter) {
        throw ParseError(lineno, "iter must increase");
      }
      out.push_back(r);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      throw ParseError(lineno, "bad numeric field");
    }
  }
  return out;
}

// Relative L2 distance between grad_P_exact and central differences of
// objective_P at the given model.
inline double gradient_check(const ScoreModel& model,
                             const SurrogateSpec& spec, const Dataset& data,
                             double step = 1e-6) {
  const auto g = grad_P_exact(model, spec, data);
  ScoreModel probe = model;
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double orig = probe.params[k];
    probe.params[k] = orig + step;
    const double up = objective_P(probe, spec, data);
    probe.params[k] = orig - step;
    const double down = objective_P(probe, spec, data);
    probe.params[k] = orig;
    const double fd = (up - down) / (2.0 * step);
    num += (g[k] - fd) * (g[k] - fd);
    den += fd * fd;
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

}  // namespace soap

#endif  // SOAP_HARNESS_HPP_
