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
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "efsgd/method.hpp"
#include "efsgd/problem.hpp"
#include "efsgd/rng.hpp"
#include "efsgd/vec.hpp"

namespace efsgd {

/// Mutable per-worker state. Fields a method does not use stay empty.
struct WorkerState {
  std::size_t id = 0;
  Vec e;                        // EC error
  Vec h;                        // DIANA shift
  Vec w;                        // LSVRG reference point
  Vec grad_w;                   // cached grad f_i(w)
  std::vector<Vec> table;       // SAGA: grad f_ij(w_ij)
  Vec table_mean;               // SAGA: (1/m) sum_j table[j]
  std::deque<Vec> delay_buffer; // delayed family: pending gamma g_i

  RngStream sample_rng;
  RngStream quant_rng;
  RngStream shift_rng;
  RngStream refresh_rng;

  // Results of the last estimate.
  Vec g_hat;  // base estimator after star subtraction
  Vec g;      // g_i
  Vec delta;  // transmitted shift delta (DIANA), zero otherwise

  // Scratch.
  Vec tmp;
  std::vector<std::size_t> picks;
  std::vector<std::size_t> pick_scratch;
};

/// Builds a worker at x0: e = 0, h = 0, w = x0, cached gradients filled.
/// Returns the number of component gradient evaluations spent.
std::size_t init_worker(WorkerState& ws, std::size_t id, const MethodSpec& spec,
                        const Problem& prob, std::span<const double> x0, std::uint64_t seed);

struct EstimateContext {
  const Problem& prob;
  const ReferenceSolution* ref = nullptr;
  std::span<const double> x;
  std::span<const double> h_bar;  // master's mean shift (EC-form DIANA)
  bool shared_refresh = false;    // VR-DIANA variant 1 coin u^k
};

/// Computes g_i into ws.g (and ws.delta for shifted methods), applies the
/// shift update and the reference update. Returns component gradient evaluations.
std::size_t estimate(WorkerState& ws, const MethodSpec& spec, const EstimateContext& ctx);

/// Base estimator ghat_i (before star subtraction / shifts) into out.
std::size_t base_estimate(WorkerState& ws, const MethodSpec& spec, const Problem& prob,
                          std::span<const double> x, std::span<double> out);

/// Draws Delta = Q(g_hat - h_i) from rng, sets h_i += alpha Delta, returns Delta.
Vec update_shift(WorkerState& ws, const MethodSpec& spec, std::span<const double> g_hat,
                 RngStream& rng);

/// With probability p (or when forced), w_i <- x and grad f_i(w_i) is recomputed.
/// Returns true on refresh; evals receives the component gradients spent.
bool update_lsvrg_reference(WorkerState& ws, const MethodSpec& spec, const Problem& prob,
                            std::span<const double> x, std::size_t& evals,
                            std::optional<bool> forced = std::nullopt);

/// Component gradients of row block i at the points the reference state stores,
/// minus those at x*: sum_j ||grad f_ij(w_ij) - grad f_ij(x*)||^2.
double reference_error_sum(const WorkerState& ws, const MethodSpec& spec, const Problem& prob,
                           std::span<const double> x_star);

}  // namespace efsgd
