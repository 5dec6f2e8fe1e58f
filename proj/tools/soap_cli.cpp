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

// Command-line front end. Every ExperimentConfig key is also a --flag;
// precedence is flag > --config file > built-in default.
//
// Exit status: 0 success, 2 usage error, 1 run failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "soap/soap.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitFailure = 1;

struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "key=value config file");
    for (const auto& [key, help] : soap::config_key_help()) {
      cmd->add_option("--" + key, values[key], help);
    }
  }

  soap::ExperimentConfig resolve(CLI::App* cmd) const {
    soap::ExperimentConfig config;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw soap::UsageError("cannot open config " + config_path);
      try {
        soap::apply_config_text(config, in);
      } catch (const soap::ParseError& e) {
        throw soap::UsageError(config_path + ": " + e.what());
      }
    }
    for (const auto& [key, value] : values) {
      if (cmd->count("--" + key) > 0) soap::apply_setting(config, key, value);
    }
    return config;
  }
};

void print_summary(const soap::ExperimentSummary& s) {
  soap::write_summary_csv(std::cout, s);
  for (const auto& r : s.seeds) {
    if (!r.ok) {
      std::cerr << "seed " << r.seed << " failed: " << r.error << '\n';
    }
  }
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& tok : soap::detail::split_list(text)) {
    if (tok.empty()) continue;
    out.push_back(soap::detail::parse_number<std::size_t>("sizes", tok));
  }
  return out;
}

std::string fmt(double v) { return soap::detail::format_double(v); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic optimisation of average precision"};
  app.require_subcommand(1);

  ConfigFlags run_flags, sweep_flags, grad_flags, gen_flags;

  auto* run = app.add_subcommand("run", "train one method over all seeds");
  run_flags.attach(run);

  auto* sweep = app.add_subcommand("sweep-batch", "repeat run for each batch size");
  sweep_flags.attach(sweep);
  std::string sizes_text = "8,16,32,64";
  sweep->add_option("--sizes", sizes_text, "comma-separated batch sizes")->capture_default_str();

  auto* grad = app.add_subcommand(
      "gradcheck", "compare the analytic gradient with finite differences");
  grad_flags.attach(grad);
  double tol = 1e-5, perturb = 0.1, step = 1e-6;
  grad->add_option("--tol", tol, "maximum relative L2 error")->capture_default_str();
  grad->add_option("--perturb", perturb,
                   "std of Gaussian noise added to the initial parameters")->capture_default_str();
  grad->add_option("--step", step, "central-difference step")->capture_default_str();

  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset CSV");
  gen_flags.attach(gen);
  std::string gen_out;
  gen->add_option("-o,--out", gen_out, "output CSV path")->required();

  auto* report = app.add_subcommand(
      "report", "correlate -objective with train AP over a curve.csv");
  std::string curve_path;
  report->add_option("curve", curve_path, "curve.csv path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (run->parsed()) {
      print_summary(soap::run_experiment(run_flags.resolve(run)));
    } else if (sweep->parsed()) {
      const auto config = sweep_flags.resolve(sweep);
      const auto rows = soap::batch_size_sweep(config, parse_sizes(sizes_text));
      std::cout << "batch_size,mean_test_ap,std_test_ap\n";
      for (const auto& r : rows) {
        std::cout << r.batch << ',' << fmt(r.summary.mean_test_ap) << ','
                  << fmt(r.summary.std_test_ap) << '\n';
      }
    } else if (grad->parsed()) {
      const auto config = grad_flags.resolve(grad);
      soap::validate(config);
      const auto data = soap::load_experiment_data(config);
      const std::uint64_t seed = config.seeds.front();
      auto model = soap::make_model(
          soap::parse_architecture(config.arch, data.dim()), config.squash,
          seed);
      auto rng = soap::make_rng(seed, 0x67726164ULL);
      std::normal_distribution<double> noise(0.0, perturb);
      for (double& p : model.params) p += noise(rng);
      const double err =
          soap::gradient_check(model, config.surrogate, data, step);
      std::cout << "params=" << model.params.size()
                << " relative_error=" << fmt(err) << '\n';
      if (!(err < tol)) {
        std::cerr << "gradient check failed (tolerance " << fmt(tol) << ")\n";
        return kExitFailure;
      }
    } else if (gen->parsed()) {
      const auto config = gen_flags.resolve(gen);
      const auto data = soap::load_experiment_data(config);
      soap::save_csv(gen_out, data);
      std::cout << "wrote " << data.size() << " rows (" << data.n_pos()
                << " positive) to " << gen_out << '\n';
    } else if (report->parsed()) {
      std::ifstream in(curve_path);
      if (!in) throw soap::UsageError("cannot open " + curve_path);
      const auto rep = soap::consistency_report(soap::read_run_log(in));
      std::cout << "records=" << rep.records << '\n';
      std::cout << "spearman="
                << (rep.spearman ? fmt(*rep.spearman) : "undefined") << '\n';
      std::cout << "pearson="
                << (rep.pearson ? fmt(*rep.pearson) : "undefined") << '\n';
    }
  } catch (const soap::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const soap::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return 0;
}
