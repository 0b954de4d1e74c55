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

#include <cmath>
#include <vector>

#include "efsgd/problem.hpp"
#include "efsgd/rng.hpp"

namespace efsgd::testing {

// Small dense problem with n workers of m rows in dimension d.
inline Problem small_problem(std::size_t n, std::size_t m, std::size_t d, std::uint64_t seed,
                             double mu = 0.05, Loss loss = Loss::kLogistic) {
  RngStream r(seed, 0, Purpose::kTest);
  std::vector<Vec> rows(n * m, Vec(d));
  Vec labels(n * m);
  for (std::size_t t = 0; t < n * m; ++t) {
    for (double& v : rows[t]) v = r.normal() + 0.3;
    labels[t] = loss == Loss::kLogistic ? (r.uniform() < 0.5 ? -1.0 : 1.0) : r.normal();
  }
  return Problem(CsrMatrix::from_dense(rows, d), labels, n, m, mu, loss, "small");
}

inline Vec random_point(std::size_t d, std::uint64_t seed, double scale = 1.0) {
  RngStream r(seed, 1, Purpose::kTest);
  Vec x(d);
  for (double& v : x) v = scale * r.normal();
  return x;
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace efsgd::testing
