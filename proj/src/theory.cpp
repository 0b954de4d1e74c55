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

#include "efsgd/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "efsgd/errors.hpp"
#include "efsgd/method.hpp"

namespace efsgd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Canonical row name for a method string.
std::string canonical(std::string_view method) {
  const auto& info = method_info(method);  // throws on unknown names
  const std::string name(info.name);
  if (name == "sgd" || name == "gd") return "d-sgd";
  if (name == "sgdsr") return "d-sgdsr";
  if (name == "lsvrg") return "d-lsvrg";
  if (name == "ec-gd") return "ec-sgd";
  if (name == "d-qgdstar") return "d-qsgdstar";
  if (name == "d-gd-diana") return "d-sgd-diana";
  if (name == "ec-gd-diana") return "ec-sgd-diana";
  if (name == "vr-diana-lsvrg" || name == "vr-diana-saga") return "vr-diana";
  return name;
}

bool is_ec(const std::string& name) { return name.starts_with("ec-"); }

// Plain names stand for their delayed rows at tau = 0.
TheoryConstants effective(std::string_view method, const TheoryConstants& c) {
  TheoryConstants e = c;
  if (method_info(method).family == Family::kPlain) e.tau = 0.0;
  return e;
}

// 1/(1-x), NaN when x == 1.
double inv1m(double x) { return x < 1.0 ? 1.0 / (1.0 - x) : kNaN; }

// Per the lemma footnotes, a term whose rho is 1 has zero coefficients and vanishes.
double ratio_term(double coef, double denom) {
  if (coef == 0.0) return 0.0;
  return denom > 0.0 ? coef / denom : kNaN;
}

}  // namespace

AssumptionParams params_for(std::string_view method, const TheoryConstants& constants) {
  const std::string name = canonical(method);
  const TheoryConstants c = effective(method, constants);
  const double L = c.L, Le = c.Lexp, w = c.omega, n = c.n;
  const double kappa = c.mu > 0.0 ? c.L / c.mu : kInf;
  const bool strong = c.regime == Regime::kStronglyConvex;
  AssumptionParams a;

  if (name == "ec-sgdsr") {
    a.A = 2 * L, a.A_tilde = 3 * (Le + L), a.A_prime = 2 * Le;
  } else if (name == "ec-sgd") {
    if (strong)
      a.A = a.A_prime = 2 * L * kappa, a.A_tilde = 6 * L * kappa;
    else
      a.A = a.A_prime = 2 * L, a.A_tilde = 6 * L;
  } else if (name == "ec-gdstar") {
    a.A = a.A_prime = L;
  } else if (name == "ec-sgd-diana") {
    a.A = 2 * L, a.A_prime = L, a.B1 = 2, a.rho1 = c.alpha, a.C1 = L * c.alpha;
  } else if (name == "ec-sgdsr-diana") {
    a.A = 2 * L, a.A_tilde = 3 * (Le + L), a.A_prime = 2 * Le, a.B1 = 2, a.rho1 = c.alpha;
    a.C1 = 2 * c.alpha * (3 * Le + 4 * L);
  } else if (name == "ec-lsvrg") {
    a.A = 2 * L, a.A_tilde = 12 * L, a.A_prime = 2 * L, a.B2_tilde = 3, a.B2_prime = 2;
    a.rho2 = c.p, a.C2 = L * c.p;
  } else if (name == "ec-lsvrgstar") {
    a.A = L, a.A_tilde = 2 * L, a.A_prime = 2 * L, a.B2_tilde = 2, a.B2_prime = 2;
    a.rho2 = c.p, a.C2 = L * c.p;
  } else if (name == "ec-lsvrg-diana") {
    a.A = a.A_prime = 2 * L, a.B1 = 2, a.B2_prime = 2, a.A_tilde = 3 * L;
    a.B1_tilde = a.B2_tilde = 3, a.rho1 = c.alpha, a.rho2 = c.p;
    a.C1 = 3 * L * c.alpha, a.C2 = L * c.p, a.G = 2;
  } else if (name == "dianasr-dq") {
    a.A_prime = Le * (1 + c.omega2) * (2 + 3 * w / n);
    a.B1_prime = 3 * w * (1 + c.omega2) / n;
    a.rho1 = c.alpha, a.C1 = c.alpha * (3 * Le + 4 * L);
  } else if (name == "vr-diana") {
    a.A_prime = L * (1 + (4 * w + 2) / n), a.B1_prime = 2 * (w + 1) / n, a.B2_prime = 2 * w / n;
    a.rho1 = c.alpha, a.rho2 = 1.0 / c.m, a.C1 = 4 * c.alpha * L, a.C2 = L / c.m, a.G = 2;
  } else if (name == "d-sgd") {
    a.A_prime = strong ? 2 * kappa * L : 2 * L;
  } else if (name == "d-sgdsr") {
    a.A_prime = 2 * Le;
  } else if (name == "d-qsgd") {
    a.A_prime = L * (1 + 2 * w / n);
  } else if (name == "d-qsgdstar") {
    a.A_prime = L * (1 + w / n);
  } else if (name == "d-sgd-diana") {
    a.A_prime = L * (1 + 2 * w / n), a.B1_prime = 2 * w / n, a.rho1 = c.alpha;
    a.C1 = L * c.alpha;
  } else if (name == "d-lsvrg") {
    a.A_prime = 2 * L, a.B2_prime = 2, a.rho2 = c.p, a.C2 = L * c.p;
  } else if (name == "d-qlsvrg" || name == "d-qlsvrgstar") {
    a.A_prime = 2 * L * (1 + 2 * w / n), a.B2_prime = 2 * (1 + 2 * w / n);
    a.rho2 = c.p, a.C2 = L * c.p;
  } else if (name == "d-lsvrg-diana") {
    a.A_prime = 2 * L * (1 + 2 * w / n), a.B1_prime = 2 * w / n;
    a.B2_prime = 2 * (1 + 2 * w / n), a.rho1 = c.alpha, a.rho2 = c.p;
    a.C1 = 3 * L * c.alpha, a.C2 = L * c.p, a.G = 2;
  } else {
    throw ConfigError("no parameter row for method '" + std::string(method) + "'");
  }
  return a;
}

LyapunovCoefficients lyapunov(const AssumptionParams& a, double gamma, double mu) {
  LyapunovCoefficients l;
  l.M1 = a.B1_prime == 0.0 ? 0.0 : 4.0 * a.B1_prime / (3.0 * a.rho1);
  const double b2 = a.B2_prime + 4.0 * a.G / 3.0;
  l.M2 = b2 == 0.0 ? 0.0 : 4.0 * b2 / (3.0 * a.rho2);
  l.eta = std::min({gamma * mu / 2.0, a.rho1 / 4.0, a.rho2 / 4.0});
  return l;
}

double generic_stepsize(std::string_view method, const AssumptionParams& a,
                        const TheoryConstants& constants) {
  const std::string name = canonical(method);
  const TheoryConstants c = effective(method, constants);
  const auto lc = lyapunov(a, 0.0, c.mu);
  const double main = 1.0 / (4.0 * (a.A_prime + a.C1 * lc.M1 + a.C2 * lc.M2));
  const double L = c.L;
  if (is_ec(name)) {
    const double d = c.delta;
    const double r1 = a.rho1, r2 = a.rho2;
    const double c2_term = ratio_term(2.0 * a.G * a.C2, r2 * (1.0 - r2));
    const double shift = (a.C1 == 0.0 && c2_term == 0.0)
                             ? 0.0
                             : 2.0 * inv1m(r1) * (ratio_term(a.C1, r1) + c2_term) *
                                   (2.0 * a.B1 / d + a.B1_tilde);
    const double ref = ratio_term(2.0 * a.C2 * (2.0 * a.B2 / d + a.B2_tilde), r2 * (1.0 - r2));
    const double x = 2.0 * a.A / d + a.A_tilde + shift + ref;
    const double by_mu = c.mu > 0.0 ? d / (4.0 * c.mu) : kInf;
    const double sq = std::sqrt(d / (96.0 * L * x));
    return std::min({main, by_mu, sq});
  }
  const double tau = c.tau;
  const double r1 = a.rho1, r2 = a.rho2;
  const double inner = a.A_prime + L * tau + ratio_term(2 * a.B1_prime * a.C1, r1 * (1 - r1)) +
                       ratio_term(2 * a.B2_prime * a.C2, r2 * (1 - r2)) +
                       ratio_term(4 * a.B1_prime * a.G * a.C2, r2 * (1 - r1) * (1 - r2));
  const double by_mu = (c.mu > 0.0 && tau > 0.0) ? 1.0 / (2.0 * tau * c.mu) : kInf;
  const double sq = tau > 0.0 ? 1.0 / (8.0 * std::sqrt(L * tau * inner)) : kInf;
  return std::min({main, by_mu, sq});
}

StepsizeReport max_stepsize(std::string_view method, const TheoryConstants& constants) {
  const std::string name = canonical(method);
  const TheoryConstants c = effective(method, constants);
  const double L = c.L, Le = c.Lexp, d = c.delta, w = c.omega, n = c.n, tau = c.tau;
  const double a = c.alpha, p = c.p;
  const double kappa = c.mu > 0.0 ? c.L / c.mu : kInf;
  const bool strong = c.regime == Regime::kStronglyConvex;

  StepsizeReport r;
  r.method = std::string(method);
  auto add = [&](std::string label, double v) { r.constraints.push_back({std::move(label), v}); };
  // 1 / (8 L sqrt(tau * x)) with tau = 0 vacuous.
  auto delay_term = [&](double x) { return tau > 0.0 ? 1.0 / (8.0 * L * std::sqrt(tau * x)) : kInf; };

  if (name == "ec-sgdsr") {
    add("1/(8Lexp)", 1.0 / (8 * Le));
    add("delta/(4 sqrt(6L(4L+3delta(Lexp+L))))",
        d / (4 * std::sqrt(6 * L * (4 * L + 3 * d * (Le + L)))));
  } else if (name == "ec-sgd") {
    if (strong) {
      add("1/(8 kappa L)", 1.0 / (8 * kappa * L));
      add("delta/(8L sqrt(3 kappa (2+3delta)))", d / (8 * L * std::sqrt(3 * kappa * (2 + 3 * d))));
    } else {
      add("delta/(8L sqrt(6+9delta))", d / (8 * L * std::sqrt(6 + 9 * d)));
    }
  } else if (name == "ec-gdstar") {
    add("delta/(8L sqrt(3))", d / (8 * L * std::sqrt(3.0)));
  } else if (name == "ec-sgd-diana") {
    add("1/(4L)", 1.0 / (4 * L));
    add("delta sqrt(1-alpha)/(8L sqrt(6(3-alpha)))",
        d * std::sqrt(1 - a) / (8 * L * std::sqrt(6 * (3 - a))));
    if (a >= 1.0) r.singular = "delta sqrt(1-alpha)/(8L sqrt(6(3-alpha)))";
  } else if (name == "ec-sgdsr-diana") {
    add("1/(4Lexp)", 1.0 / (4 * Le));
    add("delta/(4 sqrt(6L(4L+3delta(Lexp+L)+16(3Lexp+4L)/(1-alpha))))",
        d / (4 * std::sqrt(6 * L * (4 * L + 3 * d * (Le + L) + 16 * (3 * Le + 4 * L) * inv1m(a)))));
  } else if (name == "ec-lsvrg") {
    add("1/(24L)", 1.0 / (24 * L));
    add("delta/(8L sqrt(3(2+3delta(2+1/(1-p)))))",
        d / (8 * L * std::sqrt(3 * (2 + 3 * d * (2 + inv1m(p))))));
    r.stated_M2 = 4.0 / p;
  } else if (name == "ec-lsvrgstar") {
    add("3/(56L)", 3.0 / (56 * L));
    add("delta/(8L sqrt(3(1+delta(1+2/(1-p)))))",
        d / (8 * L * std::sqrt(3 * (1 + d * (1 + 2 * inv1m(p))))));
    r.stated_M2 = 8.0 / (3.0 * p);
  } else if (name == "ec-lsvrg-diana") {
    add("9/(296L)", 9.0 / (296 * L));
    add("delta/(4L sqrt(6(4+3delta+(2/(1-alpha))(3+4/(1-p))(4+3delta)+6delta/(1-p))))",
        d / (4 * L *
             std::sqrt(6 * (4 + 3 * d + 2 * inv1m(a) * (3 + 4 * inv1m(p)) * (4 + 3 * d) +
                            6 * d * inv1m(p)))));
    r.stated_M1 = 0.0;
    r.stated_M2 = 8.0 / (3.0 * p) + 32.0 / (9.0 * p);
  } else if (name == "dianasr-dq") {
    add("1/(4(1+omega2)(Lexp(2+15omega1/n)+16L omega1/n))",
        1.0 / (4 * (1 + c.omega2) * (Le * (2 + 15 * w / n) + 16 * L * w / n)));
    r.stated_M1 = 4 * w * (1 + c.omega2) / (n * a);
    r.stated_M2 = 0.0;
  } else if (name == "vr-diana") {
    add("3/(L(41/3+(52omega+35)/n))", 3.0 / (L * (41.0 / 3.0 + (52 * w + 35) / n)));
    r.stated_M1 = 8 * (w + 1) / (3 * n * a);
    r.stated_M2 = 8 * w * c.m / (3 * n) + 32 * c.m / 9;
  } else if (name == "d-sgd") {
    if (strong) {
      add("1/(8 kappa L)", 1.0 / (8 * kappa * L));
      add("1/(8L sqrt(2tau(tau+2kappa)))", delay_term(2 * (tau + 2 * kappa)));
    } else {
      add("1/(8L sqrt(2tau(tau+2)))", delay_term(2 * (tau + 2)));
    }
  } else if (name == "d-sgdsr") {
    add("1/(8Lexp)", 1.0 / (8 * Le));
    add("1/(8 sqrt(L tau(L tau+2Lexp)))",
        tau > 0.0 ? 1.0 / (8 * std::sqrt(L * tau * (L * tau + 2 * Le))) : kInf);
  } else if (name == "d-qsgd") {
    add("1/(4L(1+2omega/n))", 1.0 / (4 * L * (1 + 2 * w / n)));
    add("1/(8L sqrt(2tau(tau+1+2omega/n)))", delay_term(2 * (tau + 1 + 2 * w / n)));
  } else if (name == "d-qsgdstar") {
    add("1/(4L(1+omega/n))", 1.0 / (4 * L * (1 + w / n)));
    add("1/(8L sqrt(tau(tau+1+omega/n)))", delay_term(tau + 1 + w / n));
  } else if (name == "d-sgd-diana") {
    add("1/(4L(1+14omega/(3n)))", 1.0 / (4 * L * (1 + 14 * w / (3 * n))));
    add("1/(8L sqrt(2tau(1+tau+2omega/n+4omega/(n(1-alpha)))))",
        delay_term(2 * (1 + tau + 2 * w / n + 4 * w * inv1m(a) / n)));
    r.stated_M1 = 8 * w / (3 * n * a);
  } else if (name == "d-lsvrg") {
    add("3/(56L)", 3.0 / (56 * L));
    add("1/(8L sqrt(tau(2+tau+4/(1-p))))", delay_term(2 + tau + 4 * inv1m(p)));
    r.stated_M2 = 8.0 / (3.0 * p);
  } else if (name == "d-qlsvrg" || name == "d-qlsvrgstar") {
    add("3/(56L(1+2omega/n))", 3.0 / (56 * L * (1 + 2 * w / n)));
    add("1/(8L sqrt(tau(tau+2(1+2omega/n)(1+2/(1-p)))))",
        delay_term(tau + 2 * (1 + 2 * w / n) * (1 + 2 * inv1m(p))));
    r.stated_M2 = 8 * (1 + 2 * w / n) / (3 * p);
  } else if (name == "d-lsvrg-diana") {
    add("1/(8L(37/9+24omega/(3n)))", 1.0 / (8 * L * (37.0 / 9.0 + 24 * w / (3 * n))));
    add("1/(8L sqrt(tau(2+tau+4/(1-p)+(4omega/n)(1+3/(1-alpha)+2/(1-p)+4/((1-alpha)(1-p))))))",
        delay_term(2 + tau + 4 * inv1m(p) +
                   (4 * w / n) * (1 + 3 * inv1m(a) + 2 * inv1m(p) + 4 * inv1m(a) * inv1m(p))));
    r.stated_M1 = 8 * w / (3 * n * a);
    r.stated_M2 = 8 * (7 + 6 * w / n) / (9 * p);
  } else {
    throw ConfigError("no stepsize bound for method '" + std::string(method) + "'");
  }

  r.params = params_for(method, c);
  r.gamma_max = kInf;
  for (const auto& con : r.constraints) {
    if (std::isnan(con.value)) {
      if (!r.singular) r.singular = con.label;
      continue;
    }
    r.gamma_max = std::min(r.gamma_max, con.value);
  }
  if (std::isinf(r.gamma_max) && !r.singular) {
    // Every listed term is vacuous (e.g. tau = 0 for convex D-SGD); fall back to
    // the general requirement gamma <= 1/(4(A' + C1 M1 + C2 M2)).
    const auto lc = lyapunov(r.params, 0.0, c.mu);
    const double v = 1.0 / (4.0 * (r.params.A_prime + r.params.C1 * lc.M1 + r.params.C2 * lc.M2));
    add("1/(4(A'+C1 M1+C2 M2))", v);
    r.gamma_max = v;
  }
  if (r.singular) r.gamma_max = kNaN;

  r.generic_gamma_max = generic_stepsize(method, r.params, c);
  r.lyapunov = lyapunov(r.params, std::isnan(r.gamma_max) ? 0.0 : r.gamma_max, c.mu);
  auto differs = [](double x, double y) { return std::abs(x - y) > 1e-12 * std::max(1.0, std::abs(y)); };
  if (r.stated_M1 && differs(*r.stated_M1, r.lyapunov.M1)) r.lyapunov_mismatch = true;
  if (r.stated_M2 && differs(*r.stated_M2, r.lyapunov.M2)) r.lyapunov_mismatch = true;
  return r;
}

}  // namespace efsgd
