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
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "efsgd/estimators.hpp"
#include "efsgd/method.hpp"
#include "efsgd/problem.hpp"
#include "efsgd/vec.hpp"

namespace efsgd {

/// Parameter-server simulation of one run: n logical workers and a coordinator.
class Simulation {
 public:
  Simulation(const Problem& prob, const ReferenceSolution* ref, MethodSpec spec,
             std::span<const double> x0, std::uint64_t seed, Exec exec = Exec::kParallel);

  /// One iteration. Throws DivergenceError on a non-finite iterate.
  void step();

  /// Replaces every random stream (workers and coordinator) with streams for
  /// seed, keeping all other state. Used to redraw a step from a fixed state.
  void reseed(std::uint64_t seed);

  std::size_t iteration() const noexcept { return k_; }
  const Vec& x() const noexcept { return x_; }
  const MethodSpec& spec() const noexcept { return spec_; }
  const Problem& problem() const noexcept { return prob_; }
  const std::vector<WorkerState>& workers() const noexcept { return workers_; }
  std::vector<WorkerState>& mutable_workers() noexcept { return workers_; }

  /// e^k = (1/n) sum_i e_i^k; the buffered sum for delayed methods; 0 otherwise.
  Vec error_mean() const;
  /// x~^k = x^k - e^k.
  Vec perturbed_iterate() const;

  /// The g^k whose gamma-multiple moved the perturbed iterate in the last step.
  const Vec& last_g() const noexcept { return g_mean_; }
  /// Coordinator's running mean shift.
  const Vec& h_bar() const noexcept { return h_bar_; }
  Vec h_bar_recomputed() const;

  std::uint64_t bits_up() const noexcept { return bits_up_; }
  std::uint64_t bits_down() const noexcept { return bits_down_; }
  std::uint64_t grad_evals() const noexcept { return grad_evals_; }

  /// Per-iteration totals over all workers.
  std::uint64_t uplink_bits_per_iteration() const;
  std::uint64_t downlink_bits_per_iteration() const;

  bool has_sigma1() const;
  bool has_sigma2() const;
  /// (1/n) sum_i ||h_i - grad f_i(x*)||^2.
  double sigma1_sq() const;
  /// (1/(nm)) sum_ij ||grad f_ij(w_ij) - grad f_ij(x*)||^2.
  double sigma2_sq() const;

 private:
  const Problem& prob_;
  const ReferenceSolution* ref_;
  MethodSpec spec_;
  Exec exec_;
  std::size_t k_ = 0;
  Vec x_;
  Vec h_bar_;
  Vec g_mean_;
  std::vector<WorkerState> workers_;
  std::vector<Vec> v_;
  std::vector<std::size_t> evals_;
  RngStream master_rng_;
  std::uint64_t bits_up_ = 0;
  std::uint64_t bits_down_ = 0;
  std::uint64_t grad_evals_ = 0;
};

struct RunConfig {
  MethodSpec spec;
  std::uint64_t seed = 0;
  std::size_t iterations = 1;
  std::size_t record_every = 1;
  bool sigma_diagnostics = false;
  Exec exec = Exec::kParallel;
  Vec x0;  // empty means the zero vector
};

struct TraceRow {
  std::size_t k = 0;
  double f_gap = 0.0;
  double dist2 = 0.0;
  std::uint64_t bits_up = 0;
  std::uint64_t bits_down = 0;
  std::uint64_t grad_evals = 0;
  std::optional<double> sigma1_sq;
  std::optional<double> sigma2_sq;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  std::size_t n = 1;
  std::size_t m = 1;

  double epochs(const TraceRow& r) const {
    return static_cast<double>(r.grad_evals) / static_cast<double>(n * m);
  }
  const TraceRow& last() const { return rows.back(); }
};

inline constexpr const char* kTraceCsvHeader =
    "k,f_gap,dist2,bits_up,bits_down,grad_evals,sigma1_sq,sigma2_sq";

void write_trace_csv(const RunTrace& trace, std::ostream& out);
std::string trace_to_csv(const RunTrace& trace);

/// Called after every step with the simulation; may be empty.
using StepObserver = std::function<void(const Simulation&)>;

/// Runs cfg.iterations steps, recording k = 0, every record_every-th step and the last one.
RunTrace run(const Problem& prob, const ReferenceSolution& ref, const RunConfig& cfg,
             const StepObserver& observer = {});

/// Runs until grad_evals / (n m) reaches the epoch budget (at least one step).
std::size_t iterations_for_epochs(const Problem& prob, const MethodSpec& spec, double epochs);

/// xbar^K = sum_k w_k x^k / sum_k w_k with w_k = (1 - eta)^{-(k+1)} and
/// eta = min{gamma mu / 2, rho1 / 4, rho2 / 4}. eta = 0 gives the plain mean.
Vec weighted_average_iterate(std::span<const Vec> iterates, double mu, double gamma, double rho1,
                             double rho2);

/// T^k = ||x~^k - x*||^2 + M1 gamma^2 sigma1^2 + M2 gamma^2 sigma2^2.
double lyapunov_value(const Simulation& sim, const ReferenceSolution& ref, double m1, double m2);

}  // namespace efsgd
