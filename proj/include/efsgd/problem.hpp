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
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "efsgd/dataset.hpp"
#include "efsgd/vec.hpp"

namespace efsgd {

enum class Loss {
  kLogistic,      // log(1 + exp(-y t))
  kLeastSquares,  // (t - y)^2 / 2
};

/// Serial reference path or OpenMP-parallel path for the full-data kernels.
/// Both reduce per-block partials in fixed order, so results are bit-identical.
enum class Exec { kSerial, kParallel };

struct PowerIterationResult {
  double lambda_max = 0.0;
  double residual = 0.0;  // ||A^T A v - lambda v|| / lambda
  std::size_t iterations = 0;
  bool converged = false;
};

/// lambda_max(A^T A) by power iteration from a fixed pseudo-random start.
PowerIterationResult power_iteration(const CsrMatrix& a, double rel_tol = 1e-10,
                                     std::size_t max_iter = 100000, Exec exec = Exec::kParallel);

/// y = A^T (A v).
void ata_matvec(const CsrMatrix& a, std::span<const double> v, std::span<double> y, Exec exec);

/// mu = 1e-4 * lambda_max(A^T A) / (4N).
double default_mu(double lambda_max, std::size_t rows);

/// Finite-sum objective f(x) = (1/n) sum_i f_i(x), f_i = (1/m) sum_j f_ij,
/// f_ij(x) = phi(<a_ij, x>; y_ij) + mu/2 ||x||^2. Rows are stored worker-major.
class Problem {
 public:
  /// rows must already be in worker order; rows.rows == n*m.
  Problem(CsrMatrix rows, Vec labels, std::size_t n, std::size_t m, double mu, Loss loss,
          std::string name = {});

  /// Builds from shards of a dataset.
  static Problem from_shards(const Dataset& ds, const std::vector<Shard>& shards, double mu,
                             Loss loss = Loss::kLogistic);

  /// Built-in synthetic logistic instance; mu < 0 selects the default rule.
  static Problem synthetic(const SyntheticSpec& spec, double mu = -1.0);

  const std::string& name() const noexcept { return name_; }
  std::size_t n() const noexcept { return n_; }
  std::size_t m() const noexcept { return m_; }
  std::size_t d() const noexcept { return data_.cols; }
  std::size_t num_rows() const noexcept { return data_.rows; }
  double mu() const noexcept { return mu_; }
  Loss loss_kind() const noexcept { return loss_; }
  const CsrMatrix& data() const noexcept { return data_; }
  const Vec& labels() const noexcept { return labels_; }

  /// Curvature bound of phi: 1/4 (logistic) or 1 (least squares).
  double curvature() const noexcept { return loss_ == Loss::kLogistic ? 0.25 : 1.0; }

  double lambda_max() const noexcept { return power_.lambda_max; }
  const PowerIterationResult& power_result() const noexcept { return power_; }
  /// L = mu + c * lambda_max / N.
  double L() const noexcept { return L_; }
  /// max_r (mu + c ||a_r||^2).
  double lmax_component() const noexcept { return lmax_component_; }
  /// Expected smoothness bound for uniform single-sample sampling.
  double expected_smoothness_bound() const noexcept { return lmax_component_; }

  std::size_t row(std::size_t i, std::size_t j) const noexcept { return i * m_ + j; }

  /// phi'(<a_r, x>; y_r), the scalar multiplying a_r in the component gradient.
  double link_derivative(std::size_t r, std::span<const double> x) const;

  double component_loss(std::size_t i, std::size_t j, std::span<const double> x) const;
  double worker_loss(std::size_t i, std::span<const double> x) const;
  double loss(std::span<const double> x, Exec exec = Exec::kParallel) const;

  /// out += scale * grad f_ij(x)
  void add_component_grad(std::size_t i, std::size_t j, std::span<const double> x, double scale,
                          std::span<double> out) const;
  Vec grad_component(std::size_t i, std::size_t j, std::span<const double> x) const;
  void grad_worker_into(std::size_t i, std::span<const double> x, std::span<double> out) const;
  Vec grad_worker(std::size_t i, std::span<const double> x) const;
  Vec grad_full(std::span<const double> x, Exec exec = Exec::kParallel) const;
  /// Per-worker gradients and their average in one pass.
  std::vector<Vec> grad_workers(std::span<const double> x, Exec exec = Exec::kParallel) const;

 private:
  CsrMatrix data_;
  Vec labels_;
  std::size_t n_;
  std::size_t m_;
  double mu_;
  Loss loss_;
  std::string name_;
  PowerIterationResult power_;
  double L_ = 0.0;
  double lmax_component_ = 0.0;
};

struct ReferenceSolution {
  Vec x_star;
  double f_star = 0.0;
  std::vector<Vec> grad_i_star;
  double achieved_grad_norm = std::numeric_limits<double>::infinity();
  double tolerance = 0.0;
  std::size_t iterations = 0;

  bool accurate() const noexcept { return achieved_grad_norm <= tolerance; }
  /// Throws ReferenceError unless the tolerance was met.
  void require_accurate(const std::string& who) const;
};

/// Full-gradient descent at stepsize 1/L from x = 0 until ||grad f|| <= tol or the cap.
ReferenceSolution solve_reference(const Problem& prob, double tol = 1e-12,
                                  std::size_t max_iter = 2'000'000, Exec exec = Exec::kParallel);

enum class InitMode {
  kZero,
  kGap10,  // seeded direction scaled so that f(x0) - f* lies in [9, 11]
};

Vec initial_point(const Problem& prob, const ReferenceSolution& ref, InitMode mode,
                  std::uint64_t seed);

}  // namespace efsgd
