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
#include <string>

#include "efsgd/errors.hpp"
#include "efsgd/method.hpp"
#include "efsgd/theory.hpp"

using namespace efsgd;

namespace {

const char* kMethodNames[] = {
    "ec-sgdsr",     "ec-sgd",         "ec-gdstar",     "ec-sgd-diana", "ec-sgdsr-diana",
    "ec-lsvrg",     "ec-lsvrgstar",   "ec-lsvrg-diana", "dianasr-dq",  "vr-diana-lsvrg",
    "vr-diana-saga", "d-sgd",         "d-qsgd",        "d-qsgdstar",   "d-qgdstar",
    "d-sgd-diana",  "d-sgdsr",        "d-lsvrg",       "d-qlsvrg",     "d-qlsvrgstar",
    "d-lsvrg-diana", "sgd",           "gd",            "sgdsr",        "lsvrg",
    "ec-gd",        "ec-gd-diana",    "d-gd-diana"};

TheoryConstants base() {
  TheoryConstants c;
  c.L = 1.3;
  c.Lexp = 2.1;
  c.mu = 0.01;
  c.delta = 0.1;
  c.omega = 3.0;
  c.omega2 = 1.5;
  c.alpha = 0.2;
  c.p = 0.05;
  c.tau = 2;
  c.n = 10;
  c.m = 20;
  return c;
}

}  // namespace

TEST(Stepsize, EcGdstarHandValue) {
  TheoryConstants c = base();
  c.L = 2;
  c.delta = 0.05;
  // delta / (8 L sqrt(3))
  EXPECT_NEAR(max_stepsize("ec-gdstar", c).gamma_max, 0.00180421959121758051, 1e-12);
}

TEST(Stepsize, DsgdHandValue) {
  TheoryConstants c = base();
  c.L = 1.5;
  c.tau = 3;
  // 1 / (8 L sqrt(2 tau (tau + 2)))
  EXPECT_NEAR(max_stepsize("d-sgd", c).gamma_max, 0.01521451548625461426, 1e-12);
}

TEST(Stepsize, EcSgdDianaIsMinOfBothTerms) {
  TheoryConstants c = base();
  c.L = 0.7;
  c.delta = 0.1;
  c.alpha = 0.2;
  const auto r = max_stepsize("ec-sgd-diana", c);
  ASSERT_EQ(r.constraints.size(), 2u);
  EXPECT_NEAR(r.constraints[0].value, 0.35714285714285714286, 1e-12);  // 1/(4L)
  EXPECT_NEAR(r.constraints[1].value, 0.00389674803992843538, 1e-12);  // delta sqrt(1-alpha)/(8L sqrt(6(3-alpha)))
  EXPECT_NEAR(r.gamma_max, 0.00389674803992843538, 1e-12);
}

TEST(Stepsize, LongerFormulasHandValues) {
  TheoryConstants c = base();
  c.L = 1;
  c.delta = 0.1;
  c.alpha = 0.2;
  c.p = 0.02;
  const auto e = max_stepsize("ec-lsvrg-diana", c);
  EXPECT_NEAR(e.constraints[0].value, 9.0 / 296, 1e-15);
  EXPECT_NEAR(e.constraints[1].value, 0.00113374455458881406, 1e-12);

  c.omega = 3, c.n = 10, c.alpha = 0.25, c.p = 0.1, c.tau = 2;
  const auto d = max_stepsize("d-lsvrg-diana", c);
  EXPECT_NEAR(d.constraints[0].value, 0.01919795221843003413, 1e-12);
  EXPECT_NEAR(d.constraints[1].value, 0.01795924284789658861, 1e-12);

  c.L = 2, c.omega = 4, c.n = 20;
  EXPECT_NEAR(max_stepsize("vr-diana-lsvrg", c).gamma_max, 0.05810200129115558425, 1e-12);

  c.Lexp = 3, c.L = 1, c.omega = 2, c.omega2 = 1, c.n = 5;
  EXPECT_NEAR(max_stepsize("dianasr-dq", c).gamma_max, 0.00411184210526315789, 1e-12);
}

TEST(Stepsize, PositiveOnNondegenerateInputs) {
  for (const char* name : kMethodNames) {
    for (auto regime : {Regime::kConvex, Regime::kStronglyConvex}) {
      TheoryConstants c = base();
      c.regime = regime;
      const auto r = max_stepsize(name, c);
      EXPECT_TRUE(std::isfinite(r.gamma_max) && r.gamma_max > 0) << name;
      EXPECT_FALSE(r.singular) << name;
      EXPECT_TRUE(std::isfinite(r.generic_gamma_max) && r.generic_gamma_max > 0) << name;
    }
  }
}

TEST(Stepsize, MonotoneInLTauOmega) {
  for (const char* name : kMethodNames) {
    for (auto regime : {Regime::kConvex, Regime::kStronglyConvex}) {
      double prev_l = INFINITY, prev_t = INFINITY, prev_w = INFINITY;
      for (int step = 0; step < 12; ++step) {
        TheoryConstants c = base();
        c.regime = regime;
        c.L = 0.5 + 0.4 * step;
        const double gl = max_stepsize(name, c).gamma_max;
        EXPECT_LE(gl, prev_l * (1 + 1e-14)) << name << " L";
        prev_l = gl;

        c = base();
        c.regime = regime;
        c.tau = step;
        const double gt = max_stepsize(name, c).gamma_max;
        EXPECT_LE(gt, prev_t * (1 + 1e-14)) << name << " tau";
        prev_t = gt;

        c = base();
        c.regime = regime;
        c.omega = 0.5 * step;
        const double gw = max_stepsize(name, c).gamma_max;
        EXPECT_LE(gw, prev_w * (1 + 1e-14)) << name << " omega";
        prev_w = gw;
      }
    }
  }
}

TEST(Stepsize, ZeroDelayMakesDelayTermVacuous) {
  TheoryConstants c = base();
  c.tau = 0;
  const auto r = max_stepsize("d-qsgd", c);
  EXPECT_TRUE(std::isinf(r.constraints[1].value));
  EXPECT_DOUBLE_EQ(r.gamma_max, 1.0 / (4 * c.L * (1 + 2 * c.omega / c.n)));
  // Plain names are the zero-delay rows.
  c.tau = 5;
  TheoryConstants z = c;
  z.tau = 0;
  EXPECT_EQ(max_stepsize("lsvrg", c).gamma_max, max_stepsize("d-lsvrg", z).gamma_max);
}

TEST(Stepsize, UnitProbabilityIsSingular) {
  TheoryConstants c = base();
  c.p = 1.0;
  const auto r = max_stepsize("ec-lsvrg", c);
  EXPECT_TRUE(std::isnan(r.gamma_max));
  ASSERT_TRUE(r.singular.has_value());
  EXPECT_NE(r.singular->find("1-p"), std::string::npos);
  c = base();
  c.alpha = 1.0;
  EXPECT_TRUE(std::isnan(max_stepsize("ec-sgd-diana", c).gamma_max));
  EXPECT_TRUE(std::isnan(max_stepsize("d-sgd-diana", c).gamma_max));
  // Without delay the whole delay term is vacuous, singular factors included.
  c.tau = 0;
  EXPECT_TRUE(std::isfinite(max_stepsize("d-lsvrg-diana", c).gamma_max));
}

TEST(Stepsize, ConvexityRegimeSelectsParameterSet) {
  TheoryConstants c = base();
  c.regime = Regime::kConvex;
  EXPECT_DOUBLE_EQ(params_for("ec-sgd", c).A_prime, 2 * c.L);
  c.regime = Regime::kStronglyConvex;
  EXPECT_DOUBLE_EQ(params_for("ec-sgd", c).A_prime, 2 * c.L * c.L / c.mu);
  EXPECT_DOUBLE_EQ(params_for("d-sgd", c).A_prime, 2 * c.L * c.L / c.mu);
  EXPECT_THROW(params_for("adam", c), ConfigError);
}

TEST(Generic, EcGdstarCoincidesWithClosedForm) {
  TheoryConstants c = base();
  c.mu = 0;
  // A = A' = L, rest zero: sqrt(delta / (96 L * 2L/delta)) = delta / (8 sqrt(3) L)
  const auto r = max_stepsize("ec-gdstar", c);
  EXPECT_NEAR(r.generic_gamma_max, c.delta / (8 * std::sqrt(3.0) * c.L), 1e-15);
  EXPECT_NEAR(r.generic_gamma_max, r.gamma_max, 1e-15);
}

TEST(Generic, DelayedCondition) {
  TheoryConstants c = base();
  c.mu = 0;
  c.tau = 3;
  // A' = 2L: min{1/(8L), 1/(8 sqrt(L tau (2L + L tau)))}
  const double expect = std::min(1 / (8 * c.L), 1 / (8 * std::sqrt(c.L * 3 * (2 * c.L + c.L * 3))));
  EXPECT_NEAR(max_stepsize("d-sgd", c).generic_gamma_max, expect, 1e-15);
  c.mu = 1.0;  // 1/(2 tau mu) = 1/6 is not binding here
  EXPECT_NEAR(max_stepsize("d-sgd", c).generic_gamma_max, expect, 1e-15);
}

TEST(Lyapunov, GenericCoefficientsAgreeWithStatedOnes) {
  const TheoryConstants c = base();
  for (const char* name : {"ec-lsvrgstar", "ec-lsvrg-diana", "dianasr-dq", "vr-diana-lsvrg", "d-sgd-diana",
                           "d-lsvrg", "d-qlsvrg", "d-qlsvrgstar", "d-lsvrg-diana"}) {
    const auto r = max_stepsize(name, c);
    EXPECT_FALSE(r.lyapunov_mismatch) << name;
  }
  // M2 = 4 (B2' + 4G/3) / (3 rho2) with B2' = 2, G = 2 and rho2 = p
  EXPECT_NEAR(max_stepsize("ec-lsvrg-diana", c).lyapunov.M2, 56.0 / (9 * c.p), 1e-10);
}

TEST(Lyapunov, EcLsvrgStatedConstantDiffers) {
  const TheoryConstants c = base();
  const auto r = max_stepsize("ec-lsvrg", c);
  EXPECT_TRUE(r.lyapunov_mismatch);
  EXPECT_NEAR(*r.stated_M2, 4 / c.p, 1e-12);
  EXPECT_NEAR(r.lyapunov.M2, 8 / (3 * c.p), 1e-12);
}

TEST(Lyapunov, EtaIsSmallestRate) {
  AssumptionParams a;
  a.rho1 = 0.2;
  a.rho2 = 0.6;
  EXPECT_DOUBLE_EQ(lyapunov(a, 0.5, 0.1).eta, 0.025);
  EXPECT_DOUBLE_EQ(lyapunov(a, 10, 1).eta, 0.05);
}
