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

#include "soap/objective.hpp"

#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "soap/metrics.hpp"
#include "soap/stats.hpp"

namespace soap {
namespace {

const SurrogateSpec kHinge{SurrogateKind::kSquaredHinge, 1.0, 1.0};

TEST(OuterFunction, Values) {
  auto r = f_outer({1.0, 2.0});
  EXPECT_EQ(r.value, -0.5);
  EXPECT_EQ(r.grad[0], -0.5);
  EXPECT_EQ(r.grad[1], 0.25);
  r = f_outer({0.0, 1.0});
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.grad[0], -1.0);
  EXPECT_EQ(r.grad[1], 0.0);
  EXPECT_EQ(f_outer({2.0, 2.0}).value, -1.0);
  EXPECT_THROW(f_outer({0.0, 0.0}), DomainError);
  EXPECT_THROW(f_outer({1.0, -1.0}), DomainError);
}

TEST(InnerFunction, TwoSampleHandExample) {
  const auto data = make_dataset(Matrix(2, 1, {0.3, -0.7}), {1, -1});
  const ScoreModel flat{Architecture::linear(1), false, {0.0, 0.0}};
  const auto g = g_inner_exact(flat, kHinge, data, 0);
  EXPECT_EQ(g.g1, 0.5);
  EXPECT_EQ(g.g2, 1.0);
  EXPECT_EQ(objective_P(flat, kHinge, data), -0.5);
  EXPECT_THROW(g_inner_exact(flat, kHinge, data, 1), UsageError);
}

TEST(InnerFunction, SinglePositiveDataset) {
  const auto data = make_dataset(Matrix(1, 2, {1.0, 2.0}), {1});
  const ScoreModel m{Architecture::linear(2), true, {0.4, -0.1, 0.2}};
  const SurrogateSpec logistic{SurrogateKind::kLogistic, 1.0, 2.0};
  const auto g = g_inner_exact(m, logistic, data, 0);
  EXPECT_EQ(g.g1, loss(logistic, 0.0));
  EXPECT_EQ(g.g2, loss(logistic, 0.0));
}

TEST(InnerFunction, MatchesDirectDoubleLoop) {
  std::mt19937_64 rng(10);
  const auto data = testing::random_dataset(rng, 10, 3);
  const ScoreModel m{Architecture::linear(3), true, {0.5, -0.4, 0.9, 0.1}};
  const auto h = forward(m, data.X);
  for (std::size_t i : data.pos_idx) {
    double g1 = 0.0, g2 = 0.0;
    for (std::size_t j = 0; j < 10; ++j) {
      const double slack = std::max(1.0 - (h[i] - h[j]), 0.0);
      g2 += slack * slack / 10.0;
      if (data.y[j] == 1) g1 += slack * slack / 10.0;
    }
    const auto g = g_inner_exact(m, kHinge, data, i);
    EXPECT_NEAR(g.g1, g1, 1e-14);
    EXPECT_NEAR(g.g2, g2, 1e-14);
    EXPECT_LE(g.g1, g.g2);
  }
}

TEST(Objective, IndicatorReproducesAveragePrecisionBitwise) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> size(1, 30);
  for (int trial = 0; trial < 200; ++trial) {
    auto data = testing::random_dataset(rng, size(rng), 2);
    // Round features so that ties occur.
    Matrix X = data.X;
    for (std::size_t i = 0; i < X.rows(); ++i) {
      for (double& v : X.row(i)) v = std::round(v * 2.0) / 2.0;
    }
    data = make_dataset(std::move(X), data.y);
    const ScoreModel m{Architecture::linear(2), false, {1.0, 0.5, 0.0}};
    const double ap = average_precision(forward(m, data.X), data.y);
    EXPECT_EQ(objective_P(m, IndicatorLoss{}, data), -ap);
  }
}

TEST(Objective, RangeAndErrors) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    const auto data = testing::random_dataset(rng, 25, 3);
    ScoreModel m{Architecture::linear(3), trial % 2 == 0, std::vector<double>(4)};
    for (double& p : m.params) p = 3.0 * normal(rng);
    for (const SurrogateSpec& s :
         {kHinge, SurrogateSpec{SurrogateKind::kLogistic, 1.0, 1.0},
          SurrogateSpec{SurrogateKind::kSigmoid, 1.0, 2.0}}) {
      const double p = objective_P(m, s, data);
      EXPECT_GE(p, -1.0);
      EXPECT_LT(p, 0.0);
    }
  }
  const auto negatives = make_dataset(Matrix(2, 1, {0.0, 1.0}), {-1, -1});
  const ScoreModel m{Architecture::linear(1), false, {1.0, 0.0}};
  EXPECT_THROW(objective_P(m, kHinge, negatives), UsageError);
  EXPECT_THROW(grad_P_exact(m, kHinge, negatives), UsageError);
}

TEST(Objective, PerfectSeparationRange) {
  const auto data =
      make_dataset(Matrix(4, 1, {4.0, 3.0, 0.0, -1.0}), {1, 1, -1, -1});
  const ScoreModel m{Architecture::linear(1), false, {1.0, 0.0}};
  const double p = objective_P(m, kHinge, data);
  EXPECT_GE(p, -1.0);
  EXPECT_LT(p, 0.0);
}

TEST(ExactGradient, FiniteDifferenceOracle) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal;
  const std::vector<SurrogateSpec> specs = {
      kHinge, {SurrogateKind::kLogistic, 1.0, 2.0},
      {SurrogateKind::kSigmoid, 1.0, 1.0}};
  for (const auto& spec : specs) {
    for (const auto& arch : {Architecture::linear(3), Architecture::mlp(3, {4})}) {
      const auto data = testing::random_dataset(rng, 20, 3);
      auto m = make_model(arch, true, rng());
      for (double& p : m.params) p = normal(rng);
      const auto g = grad_P_exact(m, spec, data);
      const auto fd = testing::finite_difference(
          [&](const std::vector<double>& w) {
            ScoreModel c = m;
            c.params = w;
            return objective_P(c, spec, data);
          },
          m.params);
      EXPECT_LT(testing::relative_l2(g, fd), 1e-5)
          << to_string(spec.kind) << " " << arch_name(arch);
    }
  }
}

TEST(ExactGradient, ZeroInHingeFlatRegion) {
  // One positive whose gap to every negative exceeds the margin; the self
  // pair's gradient cancels.
  const auto data = make_dataset(Matrix(3, 1, {5.0, 0.0, 1.0}), {1, -1, -1});
  const ScoreModel m{Architecture::linear(1), false, {1.0, 0.0}};
  for (double v : grad_P_exact(m, kHinge, data)) EXPECT_EQ(v, 0.0);
}

TEST(ExactGradient, ReplicationInvariant) {
  std::mt19937_64 rng(8);
  const auto data = testing::random_dataset(rng, 15, 2);
  std::vector<std::size_t> twice;
  for (int rep = 0; rep < 2; ++rep) {
    for (std::size_t i = 0; i < data.size(); ++i) twice.push_back(i);
  }
  const auto doubled = subset(data, twice);
  const ScoreModel m{Architecture::linear(2), true, {0.7, -0.3, 0.2}};
  const auto a = grad_P_exact(m, kHinge, data);
  const auto b = grad_P_exact(m, kHinge, doubled);
  EXPECT_LT(testing::relative_l2(b, a), 1e-13);
  EXPECT_NEAR(objective_P(m, kHinge, doubled), objective_P(m, kHinge, data),
              1e-15);
}

// Holds while AP is still climbing. Once AP saturates it can drift down
// while the surrogate keeps improving, so the horizon is kept short.
TEST(Objective, ConsistentWithApAlongGradientDescent) {
  std::mt19937_64 rng(4);
  const auto data = testing::random_dataset(rng, 60, 4, 0.2);
  ScoreModel m{Architecture::linear(4), true, {-0.8, 0.6, -0.5, 0.7, 0.0}};
  std::vector<double> neg_p, ap;
  for (int step = 0; step < 60; ++step) {
    neg_p.push_back(-objective_P(m, kHinge, data));
    ap.push_back(average_precision(forward(m, data.X), data.y));
    const auto g = grad_P_exact(m, kHinge, data);
    for (std::size_t k = 0; k < g.size(); ++k) m.params[k] -= 0.25 * g[k];
  }
  const auto rho = spearman(neg_p, ap);
  ASSERT_TRUE(rho.has_value());
  EXPECT_GT(*rho, 0.9);
}

}  // namespace
}  // namespace soap
