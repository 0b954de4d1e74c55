// Copyright 2026 The efsgd Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include <gtest/gtest.h>

#include "efsgd/errors.hpp"
#include "efsgd/estimators.hpp"
#include "efsgd/method.hpp"
#include "support.hpp"

using namespace efsgd;
using efsgd::testing::max_abs_diff;
using efsgd::testing::random_point;
using efsgd::testing::small_problem;

namespace {

struct Fixture {
  Problem prob = small_problem(3, 5, 4, 21, 0.05);
  ReferenceSolution ref = solve_reference(prob);
  Vec x0 = random_point(4, 3);
  Vec x = random_point(4, 4);
  Vec h_bar = Vec(4, 0.0);

  MethodSpec spec(const std::string& name) {
    MethodSpec s = make_method(name, prob.m(), prob.d());
    s.gamma = 0.1;
    return s;
  }
  EstimateContext ctx(bool shared = false) { return {prob, &ref, x, h_bar, shared}; }
};

}  // namespace

TEST(Methods, TableCoversEveryName) {
  EXPECT_EQ(method_table().size(), 28u);
  EXPECT_THROW(method_info("ec-adam"), ConfigError);
  const auto s = make_method("ec-lsvrg-diana", 50, 20);
  EXPECT_EQ(s.compressor, ContractiveCompressor::top_k(1));
  EXPECT_EQ(s.quantizer, UnbiasedQuantizer::dither_l2());
  EXPECT_DOUBLE_EQ(s.alpha, 1.0 / std::sqrt(20.0));  // 1/(omega+1), omega = sqrt(d)-1
  EXPECT_DOUBLE_EQ(s.p, 1.0 / 50);
  EXPECT_EQ(s.batch, 1u);
  EXPECT_EQ(make_method("ec-gd", 50, 20).batch, 50u);
  EXPECT_EQ(default_topk(20), 1u);
  EXPECT_EQ(default_topk(123), 2u);
  EXPECT_EQ(default_topk(5000), 50u);
}

TEST(Methods, ValidationRejectsBadHyperparameters) {
  auto s = make_method("ec-sgd-diana", 10, 9);
  s.gamma = 0.1;
  EXPECT_NO_THROW(s.validate(9, 10));
  s.alpha = 0.9;  // omega = 2 for d = 9, bound 1/3
  EXPECT_THROW(s.validate(9, 10), ConfigError);
  s = make_method("d-lsvrg", 10, 9);
  EXPECT_THROW(s.validate(9, 10), ConfigError);  // gamma unset
  s.gamma = 0.1;
  s.p = 1.5;
  EXPECT_THROW(s.validate(9, 10), ConfigError);
  s = make_method("ec-sgd", 10, 9);
  s.gamma = 0.1;
  s.compressor = ContractiveCompressor::top_k(10);
  EXPECT_THROW(s.validate(9, 10), ConfigError);
}

TEST(Estimators, SampledGradientIsThePickedComponent) {
  Fixture f;
  const auto s = f.spec("sgd");
  WorkerState ws;
  EXPECT_EQ(init_worker(ws, 1, s, f.prob, f.x0, 7), 0u);
  EXPECT_EQ(estimate(ws, s, f.ctx()), 1u);
  EXPECT_EQ(ws.g, f.prob.grad_component(1, ws.picks[0], f.x));
}

TEST(Estimators, StarSubtractsOptimalWorkerGradient) {
  Fixture f;
  const auto s = f.spec("ec-gdstar");
  WorkerState ws;
  init_worker(ws, 2, s, f.prob, f.x0, 7);
  EXPECT_EQ(estimate(ws, s, f.ctx()), f.prob.m());
  Vec expect = f.prob.grad_worker(2, f.x);
  for (std::size_t c = 0; c < 4; ++c) expect[c] -= f.ref.grad_i_star[2][c];
  EXPECT_LT(max_abs_diff(ws.g, expect), 1e-15);
}

TEST(Estimators, LsvrgControlVariateAndRefresh) {
  Fixture f;
  auto s = f.spec("lsvrg");
  s.p = 0.0;  // never refresh on its own
  WorkerState ws;
  EXPECT_EQ(init_worker(ws, 0, s, f.prob, f.x0, 7), f.prob.m());
  EXPECT_EQ(ws.grad_w, f.prob.grad_worker(0, f.x0));
  EXPECT_EQ(estimate(ws, s, f.ctx()), 2u);
  const std::size_t j = ws.picks[0];
  Vec expect = f.prob.grad_worker(0, f.x0);
  const Vec a = f.prob.grad_component(0, j, f.x), b = f.prob.grad_component(0, j, f.x0);
  for (std::size_t c = 0; c < 4; ++c) expect[c] += a[c] - b[c];
  EXPECT_LT(max_abs_diff(ws.g, expect), 1e-14);
  EXPECT_EQ(ws.w, f.x0);

  std::size_t evals = 0;
  EXPECT_TRUE(update_lsvrg_reference(ws, s, f.prob, f.x, evals, true));
  EXPECT_EQ(evals, f.prob.m());
  EXPECT_EQ(ws.w, f.x);
  EXPECT_EQ(ws.grad_w, f.prob.grad_worker(0, f.x));

  s.p = 1.0;
  EXPECT_EQ(estimate(ws, s, f.ctx()), 2u + f.prob.m());
}

TEST(Estimators, SagaTableMeanStaysConsistent) {
  Fixture f;
  const auto s = f.spec("vr-diana-saga");
  WorkerState ws;
  EXPECT_EQ(init_worker(ws, 1, s, f.prob, f.x0, 7), f.prob.m());
  for (int t = 0; t < 30; ++t) {
    f.x = random_point(4, 50 + t);
    EXPECT_EQ(estimate(ws, s, f.ctx()), 1u);
    Vec mean(4, 0.0);
    for (const auto& row : ws.table)
      for (std::size_t c = 0; c < 4; ++c) mean[c] += row[c] / double(f.prob.m());
    EXPECT_LT(max_abs_diff(mean, ws.table_mean), 1e-13);
  }
}

TEST(Estimators, QuantFormShiftWithIdentityTracksEstimate) {
  Fixture f;
  auto s = f.spec("d-sgd-diana");
  s.quantizer = UnbiasedQuantizer::identity();
  s.alpha = 1.0;
  WorkerState ws;
  init_worker(ws, 0, s, f.prob, f.x0, 7);
  estimate(ws, s, f.ctx());
  // Delta = ghat - 0, h = Delta, g = 0 + Delta
  EXPECT_EQ(ws.g, ws.g_hat);
  EXPECT_EQ(ws.h, ws.g_hat);
  EXPECT_EQ(ws.delta, ws.g_hat);
}

TEST(Estimators, EcFormUsesMasterShift) {
  Fixture f;
  const auto s = f.spec("ec-sgd-diana");
  WorkerState ws;
  init_worker(ws, 0, s, f.prob, f.x0, 7);
  ws.h = random_point(4, 11);
  f.h_bar = random_point(4, 12);
  const Vec h_before = ws.h;
  estimate(ws, s, f.ctx());
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_NEAR(ws.g[c], ws.g_hat[c] - h_before[c] + f.h_bar[c], 1e-15);
    EXPECT_NEAR(ws.h[c], h_before[c] + s.alpha * ws.delta[c], 1e-15);
  }
}

TEST(Estimators, StarMethodWithoutReferenceFails) {
  Fixture f;
  const auto s = f.spec("d-qsgdstar");
  WorkerState ws;
  init_worker(ws, 0, s, f.prob, f.x0, 7);
  EstimateContext ctx{f.prob, nullptr, f.x, f.h_bar, false};
  EXPECT_THROW(estimate(ws, s, ctx), ReferenceError);
}

TEST(Estimators, ReferenceErrorSumMatchesDefinition) {
  Fixture f;
  const auto s = f.spec("ec-lsvrg");
  WorkerState ws;
  init_worker(ws, 1, s, f.prob, f.x0, 7);
  double expect = 0;
  for (std::size_t j = 0; j < f.prob.m(); ++j) {
    const Vec a = f.prob.grad_component(1, j, f.x0), b = f.prob.grad_component(1, j, f.ref.x_star);
    for (std::size_t c = 0; c < 4; ++c) expect += (a[c] - b[c]) * (a[c] - b[c]);
  }
  EXPECT_NEAR(reference_error_sum(ws, s, f.prob, f.ref.x_star), expect, 1e-13);
}
