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

#include "efsgd/problem.hpp"

#include <algorithm>
#include <cmath>

#include "efsgd/errors.hpp"
#include "efsgd/parallel.hpp"
#include "efsgd/rng.hpp"

namespace efsgd {

namespace {

constexpr std::size_t kRowBlock = 512;

// log(1 + exp(z)) without overflow.
double log1p_exp(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

// 1 / (1 + exp(-z)) without overflow.
double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

void ata_matvec(const CsrMatrix& a, std::span<const double> v, std::span<double> y, Exec exec) {
  const std::size_t blocks = (a.rows + kRowBlock - 1) / kRowBlock;
  std::vector<Vec> partial(blocks, Vec(a.cols, 0.0));
  for_each_index(blocks, exec == Exec::kParallel, [&](std::size_t b) {
    const std::size_t end = std::min(a.rows, (b + 1) * kRowBlock);
    for (std::size_t r = b * kRowBlock; r < end; ++r) a.row_axpy(r, a.row_dot(r, v), partial[b]);
  });
  std::fill(y.begin(), y.end(), 0.0);
  for (const auto& p : partial) vec::axpy(1.0, p, y);
}

PowerIterationResult power_iteration(const CsrMatrix& a, double rel_tol, std::size_t max_iter,
                                     Exec exec) {
  PowerIterationResult res;
  const std::size_t d = a.cols;
  if (d == 0 || a.rows == 0) return res;
  Vec v(d), w(d);
  RngStream rng(0x5eed, 0, Purpose::kInit);
  for (double& c : v) c = rng.normal();
  vec::scale(1.0 / vec::norm2(v), v);

  double lambda = 0.0;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    ata_matvec(a, v, w, exec);
    const double rq = vec::dot(v, w);
    const double wn = vec::norm2(w);
    res.iterations = it;
    if (wn == 0.0) {
      lambda = 0.0;
      res.converged = true;
      break;
    }
    // Residual of the current pair.
    double r2 = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double t = w[c] - rq * v[c];
      r2 += t * t;
    }
    res.residual = std::sqrt(r2) / wn;
    const bool small_change = it > 1 && std::abs(rq - lambda) <= rel_tol * std::abs(rq);
    lambda = rq;
    if (small_change || res.residual <= rel_tol) {
      res.converged = true;
      break;
    }
    for (std::size_t c = 0; c < d; ++c) v[c] = w[c] / wn;
  }
  res.lambda_max = lambda;
  return res;
}

double default_mu(double lambda_max, std::size_t rows) {
  return 1e-4 * lambda_max / (4.0 * static_cast<double>(rows));
}

// ---------------------------------------------------------------------------
// Problem

Problem::Problem(CsrMatrix rows, Vec labels, std::size_t n, std::size_t m, double mu, Loss loss,
                 std::string name)
    : data_(std::move(rows)),
      labels_(std::move(labels)),
      n_(n),
      m_(m),
      mu_(mu),
      loss_(loss),
      name_(std::move(name)) {
  if (n_ == 0 || m_ == 0) throw ConfigError("problem needs n >= 1 and m >= 1");
  if (data_.rows != n_ * m_ || labels_.size() != data_.rows)
    throw ConfigError("problem rows do not match n*m");
  if (data_.cols == 0) throw ConfigError("problem has zero features");
  if (mu_ < 0.0) throw ConfigError("mu must be nonnegative");
  power_ = power_iteration(data_);
  L_ = mu_ + curvature() * power_.lambda_max / static_cast<double>(data_.rows);
  double max_row = 0.0;
  for (std::size_t r = 0; r < data_.rows; ++r) max_row = std::max(max_row, data_.row_norm2_sq(r));
  lmax_component_ = mu_ + curvature() * max_row;
}

Problem Problem::from_shards(const Dataset& ds, const std::vector<Shard>& shards, double mu,
                             Loss loss) {
  if (shards.empty()) throw ConfigError("no shards");
  const std::size_t m = shards.front().rows.size();
  std::vector<std::size_t> order;
  order.reserve(shards.size() * m);
  for (const auto& s : shards) {
    if (s.rows.size() != m) throw ConfigError("shards must have equal length");
    order.insert(order.end(), s.rows.begin(), s.rows.end());
  }
  Vec labels(order.size());
  for (std::size_t t = 0; t < order.size(); ++t) labels[t] = ds.labels[order[t]];
  return Problem(ds.features.select_rows(order), std::move(labels), shards.size(), m, mu, loss,
                 ds.name);
}

Problem Problem::synthetic(const SyntheticSpec& spec, double mu) {
  Dataset ds = make_synthetic_dataset(spec);
  if (mu < 0.0) {
    const auto pw = power_iteration(ds.features);
    mu = default_mu(pw.lambda_max, ds.num_rows());
  }
  return Problem(std::move(ds.features), std::move(ds.labels), spec.n, spec.m, mu,
                 Loss::kLogistic, "synthetic");
}

double Problem::link_derivative(std::size_t r, std::span<const double> x) const {
  const double t = data_.row_dot(r, x);
  const double y = labels_[r];
  if (loss_ == Loss::kLogistic) return -y * sigmoid(-y * t);
  return t - y;
}

double Problem::component_loss(std::size_t i, std::size_t j, std::span<const double> x) const {
  const std::size_t r = row(i, j);
  const double t = data_.row_dot(r, x);
  const double y = labels_[r];
  const double reg = 0.5 * mu_ * vec::norm2_sq(x);
  if (loss_ == Loss::kLogistic) return log1p_exp(-y * t) + reg;
  return 0.5 * (t - y) * (t - y) + reg;
}

double Problem::worker_loss(std::size_t i, std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t j = 0; j < m_; ++j) {
    const std::size_t r = row(i, j);
    const double t = data_.row_dot(r, x);
    const double y = labels_[r];
    s += loss_ == Loss::kLogistic ? log1p_exp(-y * t) : 0.5 * (t - y) * (t - y);
  }
  return s / static_cast<double>(m_) + 0.5 * mu_ * vec::norm2_sq(x);
}

double Problem::loss(std::span<const double> x, Exec exec) const {
  Vec per(n_);
  for_each_index(n_, exec == Exec::kParallel, [&](std::size_t i) { per[i] = worker_loss(i, x); });
  double s = 0.0;
  for (double v : per) s += v;
  return s / static_cast<double>(n_);
}

void Problem::add_component_grad(std::size_t i, std::size_t j, std::span<const double> x,
                                 double scale, std::span<double> out) const {
  const std::size_t r = row(i, j);
  data_.row_axpy(r, scale * link_derivative(r, x), out);
  if (mu_ != 0.0) vec::axpy(scale * mu_, x, out);
}

Vec Problem::grad_component(std::size_t i, std::size_t j, std::span<const double> x) const {
  Vec g(d(), 0.0);
  add_component_grad(i, j, x, 1.0, g);
  return g;
}

void Problem::grad_worker_into(std::size_t i, std::span<const double> x,
                               std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < m_; ++j) {
    const std::size_t r = row(i, j);
    data_.row_axpy(r, link_derivative(r, x), out);
  }
  const double inv_m = 1.0 / static_cast<double>(m_);
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = out[c] * inv_m + mu_ * x[c];
}

Vec Problem::grad_worker(std::size_t i, std::span<const double> x) const {
  Vec g(d());
  grad_worker_into(i, x, g);
  return g;
}

std::vector<Vec> Problem::grad_workers(std::span<const double> x, Exec exec) const {
  std::vector<Vec> g(n_, Vec(d()));
  for_each_index(n_, exec == Exec::kParallel, [&](std::size_t i) { grad_worker_into(i, x, g[i]); });
  return g;
}

Vec Problem::grad_full(std::span<const double> x, Exec exec) const {
  const auto per = grad_workers(x, exec);
  Vec g(d(), 0.0);
  for (const auto& gi : per) vec::axpy(1.0, gi, g);
  vec::scale(1.0 / static_cast<double>(n_), g);
  return g;
}

// ---------------------------------------------------------------------------
// Reference solution

void ReferenceSolution::require_accurate(const std::string& who) const {
  if (!accurate())
    throw ReferenceError(who + " needs grad f(x*) but the reference solve reached only " +
                         std::to_string(achieved_grad_norm) + " > tolerance " +
                         std::to_string(tolerance));
}

ReferenceSolution solve_reference(const Problem& prob, double tol, std::size_t max_iter,
                                  Exec exec) {
  ReferenceSolution ref;
  ref.tolerance = tol;
  const std::size_t d = prob.d();
  const double step = 1.0 / prob.L();
  Vec x(d, 0.0);
  Vec g = prob.grad_full(x, exec);
  double gn = vec::norm2(g);
  std::size_t it = 0;
  while (gn > tol && it < max_iter) {
    vec::axpy(-step, g, x);
    g = prob.grad_full(x, exec);
    gn = vec::norm2(g);
    ++it;
  }
  ref.iterations = it;
  ref.grad_i_star = prob.grad_workers(x, exec);
  ref.achieved_grad_norm = gn;
  ref.f_star = prob.loss(x, exec);
  ref.x_star = std::move(x);
  return ref;
}

Vec initial_point(const Problem& prob, const ReferenceSolution& ref, InitMode mode,
                  std::uint64_t seed) {
  const std::size_t d = prob.d();
  if (mode == InitMode::kZero) return Vec(d, 0.0);

  RngStream rng(seed, 0, Purpose::kInit);
  Vec u(d);
  for (double& c : u) c = rng.normal();
  vec::scale(1.0 / vec::norm2(u), u);
  auto gap = [&](double t) {
    Vec x = u;
    vec::scale(t, x);
    return prob.loss(x, Exec::kSerial) - ref.f_star;
  };
  double lo = 0.0;
  double hi = 1.0;
  if (gap(lo) > 11.0) throw ConfigError("f(0) - f* already exceeds 11; gap10 start undefined");
  while (gap(hi) < 9.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw ConfigError("objective stays within 9 of f* along the start direction");
  }
  double t = hi;
  for (int k = 0; k < 200; ++k) {
    const double g = gap(t);
    if (g >= 9.0 && g <= 11.0) break;
    if (g < 9.0)
      lo = t;
    else
      hi = t;
    t = 0.5 * (lo + hi);
  }
  vec::scale(t, u);
  return u;
}

}  // namespace efsgd
