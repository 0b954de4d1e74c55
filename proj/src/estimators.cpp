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

#include "efsgd/estimators.hpp"

#include <algorithm>

#include "efsgd/errors.hpp"

namespace efsgd {

std::size_t init_worker(WorkerState& ws, std::size_t id, const MethodSpec& spec,
                        const Problem& prob, std::span<const double> x0, std::uint64_t seed) {
  const std::size_t d = prob.d();
  const std::size_t m = prob.m();
  const auto wid = static_cast<std::uint32_t>(id);
  ws = WorkerState{};
  ws.id = id;
  ws.sample_rng = RngStream(seed, wid, Purpose::kSample);
  ws.quant_rng = RngStream(seed, wid, Purpose::kQuantize);
  ws.shift_rng = RngStream(seed, wid, Purpose::kShift);
  ws.refresh_rng = RngStream(seed, wid, Purpose::kRefresh);
  ws.g_hat.assign(d, 0.0);
  ws.g.assign(d, 0.0);
  ws.tmp.assign(d, 0.0);
  ws.pick_scratch.resize(m);
  ws.picks.resize(std::min(spec.batch, m));
  if (spec.family == Family::kEc) ws.e.assign(d, 0.0);
  if (spec.has_shift()) {
    ws.h.assign(d, 0.0);
    ws.delta.assign(d, 0.0);
  }

  std::size_t evals = 0;
  const BaseKind kind = spec.base_kind(m);
  if (kind == BaseKind::kLsvrg) {
    ws.w.assign(x0.begin(), x0.end());
    ws.grad_w.assign(d, 0.0);
    prob.grad_worker_into(id, ws.w, ws.grad_w);
    evals += m;
  } else if (kind == BaseKind::kSaga) {
    ws.table.assign(m, Vec(d, 0.0));
    ws.table_mean.assign(d, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      prob.add_component_grad(id, j, x0, 1.0, ws.table[j]);
      vec::axpy(1.0, ws.table[j], ws.table_mean);
    }
    vec::scale(1.0 / static_cast<double>(m), ws.table_mean);
    evals += m;
  }
  return evals;
}

namespace {

// Fills ws.picks[0..b) with a uniform b-subset of the shard.
void draw_batch(WorkerState& ws, std::size_t m, std::size_t b) {
  if (b == 1) {
    ws.picks[0] = ws.sample_rng.uniform_index(m);
    return;
  }
  ws.sample_rng.sample_without_replacement(m, b, ws.picks, ws.pick_scratch);
}

}  // namespace

std::size_t base_estimate(WorkerState& ws, const MethodSpec& spec, const Problem& prob,
                          std::span<const double> x, std::span<double> out) {
  const std::size_t m = prob.m();
  const std::size_t i = ws.id;
  switch (spec.base_kind(m)) {
    case BaseKind::kFull:
      prob.grad_worker_into(i, x, out);
      return m;
    case BaseKind::kSample: {
      const std::size_t b = spec.batch;
      draw_batch(ws, m, b);
      std::fill(out.begin(), out.end(), 0.0);
      const double s = 1.0 / static_cast<double>(b);
      for (std::size_t t = 0; t < b; ++t) prob.add_component_grad(i, ws.picks[t], x, s, out);
      return b;
    }
    case BaseKind::kLsvrg: {
      const std::size_t b = std::min(spec.batch, m);
      draw_batch(ws, m, b);
      std::copy(ws.grad_w.begin(), ws.grad_w.end(), out.begin());
      const double s = 1.0 / static_cast<double>(b);
      for (std::size_t t = 0; t < b; ++t) {
        prob.add_component_grad(i, ws.picks[t], x, s, out);
        prob.add_component_grad(i, ws.picks[t], ws.w, -s, out);
      }
      return 2 * b;
    }
    case BaseKind::kSaga: {
      const std::size_t j = ws.sample_rng.uniform_index(m);
      Vec& fresh = ws.tmp;
      std::fill(fresh.begin(), fresh.end(), 0.0);
      prob.add_component_grad(i, j, x, 1.0, fresh);
      Vec& old = ws.table[j];
      const double inv_m = 1.0 / static_cast<double>(m);
      for (std::size_t c = 0; c < out.size(); ++c) {
        out[c] = fresh[c] - old[c] + ws.table_mean[c];
        ws.table_mean[c] += (fresh[c] - old[c]) * inv_m;
      }
      std::swap(old, fresh);
      return 1;
    }
  }
  return 0;
}

Vec update_shift(WorkerState& ws, const MethodSpec& spec, std::span<const double> g_hat,
                 RngStream& rng) {
  const std::size_t d = g_hat.size();
  Vec diff(d);
  for (std::size_t c = 0; c < d; ++c) diff[c] = g_hat[c] - ws.h[c];
  Vec delta = quantize(spec.quantizer, diff, rng);
  vec::axpy(spec.alpha, delta, ws.h);
  return delta;
}

bool update_lsvrg_reference(WorkerState& ws, const MethodSpec& spec, const Problem& prob,
                            std::span<const double> x, std::size_t& evals,
                            std::optional<bool> forced) {
  const bool refresh = forced.has_value() ? *forced : ws.refresh_rng.bernoulli(spec.p);
  if (!refresh) return false;
  std::copy(x.begin(), x.end(), ws.w.begin());
  prob.grad_worker_into(ws.id, ws.w, ws.grad_w);
  evals += prob.m();
  return true;
}

std::size_t estimate(WorkerState& ws, const MethodSpec& spec, const EstimateContext& ctx) {
  const Problem& prob = ctx.prob;
  std::size_t evals = base_estimate(ws, spec, prob, ctx.x, ws.g_hat);

  if (spec.needs_reference()) {
    if (ctx.ref == nullptr) throw ReferenceError(spec.name + " needs a reference solution");
    vec::axpy(-1.0, ctx.ref->grad_i_star[ws.id], ws.g_hat);
  }

  switch (spec.shift_form()) {
    case ShiftForm::kNone:
      if (spec.quantizes_estimate())
        quantize_into(spec.quantizer, ws.g_hat, ws.quant_rng, ws.g);
      else
        std::copy(ws.g_hat.begin(), ws.g_hat.end(), ws.g.begin());
      break;
    case ShiftForm::kEc:
      for (std::size_t c = 0; c < ws.g.size(); ++c)
        ws.g[c] = ws.g_hat[c] - ws.h[c] + ctx.h_bar[c];
      ws.delta = update_shift(ws, spec, ws.g_hat, ws.shift_rng);
      break;
    case ShiftForm::kQuant:
      std::copy(ws.h.begin(), ws.h.end(), ws.g.begin());
      ws.delta = update_shift(ws, spec, ws.g_hat, ws.quant_rng);
      vec::axpy(1.0, ws.delta, ws.g);
      break;
  }

  if (spec.uses_lsvrg_reference()) {
    std::optional<bool> forced;
    if (spec.shared_refresh_coin()) forced = ctx.shared_refresh;
    update_lsvrg_reference(ws, spec, prob, ctx.x, evals, forced);
  }
  return evals;
}

double reference_error_sum(const WorkerState& ws, const MethodSpec& spec, const Problem& prob,
                           std::span<const double> x_star) {
  const std::size_t m = prob.m();
  const std::size_t d = prob.d();
  const BaseKind kind = spec.base_kind(m);
  Vec diff(d);
  double s = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    std::fill(diff.begin(), diff.end(), 0.0);
    if (kind == BaseKind::kSaga)
      vec::axpy(1.0, ws.table[j], diff);
    else if (kind == BaseKind::kLsvrg)
      prob.add_component_grad(ws.id, j, ws.w, 1.0, diff);
    else
      return 0.0;
    prob.add_component_grad(ws.id, j, x_star, -1.0, diff);
    s += vec::norm2_sq(diff);
  }
  return s;
}

}  // namespace efsgd
