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

#include <cmath>

#include "efsgd/errors.hpp"
#include "efsgd/problem.hpp"
#include "support.hpp"

using namespace efsgd;
using efsgd::testing::random_point;
using efsgd::testing::small_problem;

namespace {

// Central differences of a scalar function.
template <class F>
Vec fd_grad(F&& f, const Vec& x, double h = 1e-5) {
  Vec g(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) {
    Vec a = x, b = x;
    a[c] += h;
    b[c] -= h;
    g[c] = (f(a) - f(b)) / (2 * h);
  }
  return g;
}

double rel_err(const Vec& a, const Vec& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-8);
}

// Largest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
double jacobi_max_eig(std::vector<Vec> a) {
  const std::size_t d = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
  }
  double m = a[0][0];
  for (std::size_t i = 1; i < d; ++i) m = std::max(m, a[i][i]);
  return m;
}

}  // namespace

TEST(Gradients, MatchFiniteDifferencesAtAllGranularities) {
  for (Loss loss : {Loss::kLogistic, Loss::kLeastSquares}) {
    const Problem p = small_problem(3, 4, 5, 1, 0.05, loss);
    for (int probe = 0; probe < 20; ++probe) {
      const Vec x = random_point(p.d(), 100 + probe);
      const std::size_t i = probe % 3, j = probe % 4;
      const Vec gc = p.grad_component(i, j, x);
      EXPECT_LT(rel_err(gc, fd_grad([&](const Vec& z) { return p.component_loss(i, j, z); }, x)), 1e-5);
      const Vec gw = p.grad_worker(i, x);
      EXPECT_LT(rel_err(gw, fd_grad([&](const Vec& z) { return p.worker_loss(i, z); }, x)), 1e-5);
      const Vec gf = p.grad_full(x);
      EXPECT_LT(rel_err(gf, fd_grad([&](const Vec& z) { return p.loss(z); }, x)), 1e-5);
    }
  }
}

TEST(Loss, MatchesDirectFormula) {
  const Problem p = small_problem(2, 3, 4, 2, 0.1);
  const Vec x = random_point(4, 7);
  double f = 0;
  for (std::size_t r = 0; r < p.num_rows(); ++r) {
    const double t = p.data().row_dot(r, x);
    f += std::log(1 + std::exp(-p.labels()[r] * t));
  }
  double xx = 0;
  for (double v : x) xx += v * v;
  f = f / double(p.num_rows()) + 0.05 * xx;
  EXPECT_NEAR(p.loss(x), f, 1e-13);
}

TEST(Loss, LargeMarginsStayFinite) {
  const Problem p = small_problem(2, 2, 3, 3, 0.0);
  const Vec x(3, 1e6);
  EXPECT_TRUE(std::isfinite(p.loss(x)));
  const Vec g = p.grad_full(x);
  for (double v : g) EXPECT_TRUE(std::isfinite(v));
}

TEST(Smoothness, ConstantsMatchDenseEigenvalue) {
  const Problem p = small_problem(2, 5, 4, 4, 0.01);
  std::vector<Vec> ata(4, Vec(4, 0.0));
  double max_row = 0;
  for (std::size_t r = 0; r < p.num_rows(); ++r) {
    const Vec a = p.data().row_dense(r);
    double nr = 0;
    for (std::size_t u = 0; u < 4; ++u) {
      nr += a[u] * a[u];
      for (std::size_t v = 0; v < 4; ++v) ata[u][v] += a[u] * a[v];
    }
    max_row = std::max(max_row, nr);
  }
  const double lam = jacobi_max_eig(ata);
  EXPECT_NEAR(p.lambda_max(), lam, 1e-8 * lam);
  EXPECT_NEAR(p.L(), 0.01 + lam / (4.0 * 10), 1e-8);
  EXPECT_NEAR(p.lmax_component(), 0.01 + max_row / 4.0, 1e-12);
  EXPECT_DOUBLE_EQ(default_mu(lam, 10), 1e-4 * lam / 40.0);
}

TEST(Smoothness, GradientIsLipschitz) {
  const Problem p = small_problem(3, 4, 5, 5, 0.02);
  for (int t = 0; t < 50; ++t) {
    const Vec x = random_point(5, 200 + t, 3.0), y = random_point(5, 400 + t, 3.0);
    const Vec gx = p.grad_full(x), gy = p.grad_full(y);
    double dg = 0, dx = 0;
    for (std::size_t c = 0; c < 5; ++c) {
      dg += (gx[c] - gy[c]) * (gx[c] - gy[c]);
      dx += (x[c] - y[c]) * (x[c] - y[c]);
    }
    EXPECT_LE(std::sqrt(dg), p.L() * std::sqrt(dx) * (1 + 1e-9));
  }
}

TEST(Exec, SerialAndParallelAgreeBitwise) {
  const Problem p = small_problem(8, 30, 6, 6, 0.01);
  const Vec x = random_point(6, 9);
  EXPECT_EQ(p.loss(x, Exec::kSerial), p.loss(x, Exec::kParallel));
  EXPECT_EQ(p.grad_full(x, Exec::kSerial), p.grad_full(x, Exec::kParallel));
  Vec y1(6), y2(6);
  ata_matvec(p.data(), x, y1, Exec::kSerial);
  ata_matvec(p.data(), x, y2, Exec::kParallel);
  EXPECT_EQ(y1, y2);
}

TEST(Reference, ReachesToleranceAndCachesWorkerGradients) {
  const Problem p = small_problem(4, 6, 5, 7, 0.05);
  const ReferenceSolution ref = solve_reference(p, 1e-12);
  EXPECT_TRUE(ref.accurate());
  double gn = 0;
  for (double v : p.grad_full(ref.x_star)) gn += v * v;
  EXPECT_LE(std::sqrt(gn), 1e-12);
  EXPECT_NEAR(ref.f_star, p.loss(ref.x_star), 1e-15);
  ASSERT_EQ(ref.grad_i_star.size(), 4u);
  Vec mean(5, 0.0);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(ref.grad_i_star[i], p.grad_worker(i, ref.x_star));
    for (std::size_t c = 0; c < 5; ++c) mean[c] += ref.grad_i_star[i][c] / 4;
  }
  for (double v : mean) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Reference, CapReportsInaccuracy) {
  const Problem p = small_problem(4, 6, 5, 7, 0.05);
  const ReferenceSolution ref = solve_reference(p, 1e-12, 3);
  EXPECT_FALSE(ref.accurate());
  EXPECT_THROW(ref.require_accurate("ec-gdstar"), ReferenceError);
}

TEST(InitialPoint, GapModeLandsInBand) {
  const Problem p = small_problem(4, 6, 5, 8, 0.05);
  const ReferenceSolution ref = solve_reference(p);
  EXPECT_EQ(initial_point(p, ref, InitMode::kZero, 0), Vec(5, 0.0));
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Vec x0 = initial_point(p, ref, InitMode::kGap10, s);
    const double gap = p.loss(x0) - ref.f_star;
    EXPECT_GE(gap, 9.0);
    EXPECT_LE(gap, 11.0);
  }
}
