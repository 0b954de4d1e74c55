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

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace efsgd {

/// Which parameter set to use for methods that have both.
enum class Regime {
  kConvex,          // f_xi convex
  kStronglyConvex,  // f mu-strongly convex, f_xi possibly non-convex
};

/// Problem and method constants the formulas are evaluated at.
struct TheoryConstants {
  double L = 1.0;
  double Lexp = 1.0;  // expected smoothness
  double mu = 0.0;
  double delta = 1.0;
  double omega = 0.0;   // Q or Q1
  double omega2 = 0.0;  // Q2
  double alpha = 1.0;
  double p = 1.0;
  double tau = 0.0;
  double n = 1.0;
  double m = 1.0;
  Regime regime = Regime::kConvex;
};

struct AssumptionParams {
  double A = 0, A_tilde = 0, A_prime = 0;
  double B1 = 0, B1_tilde = 0, B1_prime = 0;
  double B2 = 0, B2_tilde = 0, B2_prime = 0;
  double C1 = 0, C2 = 0;
  double rho1 = 1, rho2 = 1;
  double G = 0;
};

struct LyapunovCoefficients {
  double M1 = 0;
  double M2 = 0;
  double eta = 0;
};

/// One term of a min{...} stepsize bound.
struct StepsizeConstraint {
  std::string label;
  double value = 0;  // +inf when vacuous, NaN when undefined
};

struct StepsizeReport {
  std::string method;
  double gamma_max = 0;  // NaN when a constraint is singular
  std::vector<StepsizeConstraint> constraints;
  std::optional<std::string> singular;  // label of the undefined constraint
  double generic_gamma_max = 0;         // lemma-level bound from the parameter row
  AssumptionParams params;
  LyapunovCoefficients lyapunov;             // generic M1, M2 at gamma_max
  std::optional<double> stated_M1;           // closed-form constant, if one is stated
  std::optional<double> stated_M2;
  bool lyapunov_mismatch = false;            // stated and generic constants differ
};

/// Parameter row for a method name. Plain names map to their tau = 0 delayed
/// counterpart and ec-gd to ec-sgd. Throws ConfigError for unknown names.
AssumptionParams params_for(std::string_view method, const TheoryConstants& c);

/// M1 = 4 B1' / (3 rho1), M2 = 4 (B2' + 4G/3) / (3 rho2), eta = min{gamma mu/2, rho1/4, rho2/4}.
LyapunovCoefficients lyapunov(const AssumptionParams& params, double gamma, double mu);

/// Per-method bound plus the generic bound for comparison.
StepsizeReport max_stepsize(std::string_view method, const TheoryConstants& c);

/// gamma <= 1/(4(A' + C1 M1 + C2 M2)) intersected with the family lemma condition.
double generic_stepsize(std::string_view method, const AssumptionParams& params,
                        const TheoryConstants& c);

}  // namespace efsgd
