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

#include "efsgd/engine.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>

#include "efsgd/errors.hpp"
#include "efsgd/parallel.hpp"

namespace efsgd {

Simulation::Simulation(const Problem& prob, const ReferenceSolution* ref, MethodSpec spec,
                       std::span<const double> x0, std::uint64_t seed, Exec exec)
    : prob_(prob), ref_(ref), spec_(std::move(spec)), exec_(exec) {
  const std::size_t n = prob_.n();
  const std::size_t d = prob_.d();
  spec_.validate(d, prob_.m());
  if (spec_.needs_reference()) {
    if (ref_ == nullptr) throw ReferenceError(spec_.name + " needs a reference solution");
    ref_->require_accurate(spec_.name);
  }
  if (x0.empty())
    x_.assign(d, 0.0);
  else if (x0.size() != d)
    throw ConfigError("x0 has dimension " + std::to_string(x0.size()) + ", expected " +
                      std::to_string(d));
  else
    x_.assign(x0.begin(), x0.end());

  h_bar_.assign(d, 0.0);
  g_mean_.assign(d, 0.0);
  v_.assign(n, Vec(d, 0.0));
  evals_.assign(n, 0);
  workers_.resize(n);
  master_rng_ = RngStream(seed, 0, Purpose::kMaster);
  for (std::size_t i = 0; i < n; ++i)
    grad_evals_ += init_worker(workers_[i], i, spec_, prob_, x_, seed);
}

void Simulation::reseed(std::uint64_t seed) {
  master_rng_ = RngStream(seed, 0, Purpose::kMaster);
  for (auto& ws : workers_) {
    const auto wid = ws.sample_rng.worker();
    ws.sample_rng = RngStream(seed, wid, Purpose::kSample);
    ws.quant_rng = RngStream(seed, wid, Purpose::kQuantize);
    ws.shift_rng = RngStream(seed, wid, Purpose::kShift);
    ws.refresh_rng = RngStream(seed, wid, Purpose::kRefresh);
  }
}

std::uint64_t Simulation::uplink_bits_per_iteration() const {
  const std::size_t d = prob_.d();
  const std::uint32_t f = spec_.float_bits;
  std::uint64_t per_worker = 0;
  if (spec_.family == Family::kEc) {
    per_worker = bit_cost(spec_.compressor, d, f);
    if (spec_.shift_form() == ShiftForm::kEc) per_worker += bit_cost(spec_.quantizer, d, f);
  } else {
    per_worker = spec_.uses_quantizer() ? bit_cost(spec_.quantizer, d, f) : dense_bit_cost(d, f);
  }
  return per_worker * prob_.n();
}

std::uint64_t Simulation::downlink_bits_per_iteration() const {
  const std::size_t d = prob_.d();
  const std::uint64_t payload = spec_.estimator == Estimator::kDianasrDq
                                    ? bit_cost(spec_.quantizer2, d, spec_.float_bits)
                                    : dense_bit_cost(d, spec_.float_bits);
  return payload * prob_.n();
}

void Simulation::step() {
  const std::size_t n = prob_.n();
  const std::size_t d = prob_.d();

  bool shared_refresh = false;
  if (spec_.shared_refresh_coin()) shared_refresh = master_rng_.bernoulli(spec_.p);

  const EstimateContext ctx{prob_, ref_, x_, h_bar_, shared_refresh};
  std::vector<std::exception_ptr> errors(n);

  for_each_index(n, exec_ == Exec::kParallel, [&](std::size_t i) {
    try {
      WorkerState& ws = workers_[i];
      evals_[i] = estimate(ws, spec_, ctx);
      Vec& v = v_[i];
      switch (spec_.family) {
        case Family::kPlain:
          for (std::size_t c = 0; c < d; ++c) v[c] = spec_.gamma * ws.g[c];
          break;
        case Family::kEc: {
          Vec& p = ws.tmp;
          for (std::size_t c = 0; c < d; ++c) p[c] = ws.e[c] + spec_.gamma * ws.g[c];
          compress_into(spec_.compressor, p, v);
          for (std::size_t c = 0; c < d; ++c) ws.e[c] = p[c] - v[c];
          break;
        }
        case Family::kDelayed: {
          Vec pending(d);
          for (std::size_t c = 0; c < d; ++c) pending[c] = spec_.gamma * ws.g[c];
          ws.delay_buffer.push_back(std::move(pending));
          if (ws.delay_buffer.size() > spec_.tau) {
            v = std::move(ws.delay_buffer.front());
            ws.delay_buffer.pop_front();
          } else {
            std::fill(v.begin(), v.end(), 0.0);
          }
          break;
        }
      }
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  // Coordinator: fixed worker order.
  const double inv_n = 1.0 / static_cast<double>(n);
  std::fill(g_mean_.begin(), g_mean_.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) vec::axpy(1.0, workers_[i].g, g_mean_);
  vec::scale(inv_n, g_mean_);

  if (spec_.estimator == Estimator::kDianasrDq) {
    Vec g = quantize(spec_.quantizer2, g_mean_, master_rng_);
    g_mean_ = std::move(g);
    vec::axpy(-spec_.gamma, g_mean_, x_);
  } else {
    Vec sum(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) vec::axpy(1.0, v_[i], sum);
    for (std::size_t c = 0; c < d; ++c) x_[c] -= sum[c] * inv_n;
  }

  if (spec_.has_shift()) {
    Vec dsum(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) vec::axpy(1.0, workers_[i].delta, dsum);
    vec::axpy(spec_.alpha * inv_n, dsum, h_bar_);
  }

  for (std::size_t i = 0; i < n; ++i) grad_evals_ += evals_[i];
  bits_up_ += uplink_bits_per_iteration();
  bits_down_ += downlink_bits_per_iteration();
  ++k_;
  if (!vec::all_finite(x_)) throw DivergenceError(spec_.name + ": non-finite iterate", k_);
}

Vec Simulation::error_mean() const {
  const std::size_t d = prob_.d();
  Vec e(d, 0.0);
  if (spec_.family == Family::kPlain) return e;
  for (const auto& ws : workers_) {
    if (spec_.family == Family::kEc) {
      vec::axpy(1.0, ws.e, e);
    } else {
      for (const auto& pending : ws.delay_buffer) vec::axpy(1.0, pending, e);
    }
  }
  vec::scale(1.0 / static_cast<double>(workers_.size()), e);
  return e;
}

Vec Simulation::perturbed_iterate() const {
  Vec e = error_mean();
  for (std::size_t c = 0; c < e.size(); ++c) e[c] = x_[c] - e[c];
  return e;
}

Vec Simulation::h_bar_recomputed() const {
  Vec h(prob_.d(), 0.0);
  if (!spec_.has_shift()) return h;
  for (const auto& ws : workers_) vec::axpy(1.0, ws.h, h);
  vec::scale(1.0 / static_cast<double>(workers_.size()), h);
  return h;
}

bool Simulation::has_sigma1() const { return ref_ != nullptr && spec_.has_shift(); }

bool Simulation::has_sigma2() const {
  const BaseKind kind = spec_.base_kind(prob_.m());
  return ref_ != nullptr && (kind == BaseKind::kLsvrg || kind == BaseKind::kSaga);
}

double Simulation::sigma1_sq() const {
  if (!has_sigma1()) return 0.0;
  double s = 0.0;
  for (const auto& ws : workers_) s += vec::dist2_sq(ws.h, ref_->grad_i_star[ws.id]);
  return s / static_cast<double>(workers_.size());
}

double Simulation::sigma2_sq() const {
  if (!has_sigma2()) return 0.0;
  std::vector<double> per(workers_.size());
  for_each_index(workers_.size(), exec_ == Exec::kParallel, [&](std::size_t i) {
    per[i] = reference_error_sum(workers_[i], spec_, prob_, ref_->x_star);
  });
  double s = 0.0;
  for (double v : per) s += v;
  return s / static_cast<double>(prob_.num_rows());
}

// ---------------------------------------------------------------------------

namespace {

TraceRow make_row(const Simulation& sim, const ReferenceSolution& ref, bool sigma) {
  TraceRow row;
  row.k = sim.iteration();
  row.f_gap = sim.problem().loss(sim.x()) - ref.f_star;
  row.dist2 = vec::dist2_sq(sim.x(), ref.x_star);
  row.bits_up = sim.bits_up();
  row.bits_down = sim.bits_down();
  row.grad_evals = sim.grad_evals();
  if (sigma && sim.has_sigma1()) row.sigma1_sq = sim.sigma1_sq();
  if (sigma && sim.has_sigma2()) row.sigma2_sq = sim.sigma2_sq();
  return row;
}

void append_double(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

RunTrace run(const Problem& prob, const ReferenceSolution& ref, const RunConfig& cfg,
             const StepObserver& observer) {
  if (cfg.iterations == 0) throw ConfigError("iterations must be >= 1");
  if (cfg.record_every == 0) throw ConfigError("record_every must be >= 1");
  Simulation sim(prob, &ref, cfg.spec, cfg.x0, cfg.seed, cfg.exec);
  RunTrace trace;
  trace.n = prob.n();
  trace.m = prob.m();
  trace.rows.push_back(make_row(sim, ref, cfg.sigma_diagnostics));
  for (std::size_t k = 1; k <= cfg.iterations; ++k) {
    sim.step();
    if (observer) observer(sim);
    if (k % cfg.record_every == 0 || k == cfg.iterations)
      trace.rows.push_back(make_row(sim, ref, cfg.sigma_diagnostics));
  }
  return trace;
}

void write_trace_csv(const RunTrace& trace, std::ostream& out) { out << trace_to_csv(trace); }

std::string trace_to_csv(const RunTrace& trace) {
  std::string s = kTraceCsvHeader;
  s += '\n';
  for (const auto& r : trace.rows) {
    s += std::to_string(r.k);
    s += ',';
    append_double(s, r.f_gap);
    s += ',';
    append_double(s, r.dist2);
    s += ',';
    s += std::to_string(r.bits_up);
    s += ',';
    s += std::to_string(r.bits_down);
    s += ',';
    s += std::to_string(r.grad_evals);
    s += ',';
    if (r.sigma1_sq) append_double(s, *r.sigma1_sq);
    s += ',';
    if (r.sigma2_sq) append_double(s, *r.sigma2_sq);
    s += '\n';
  }
  return s;
}

std::size_t iterations_for_epochs(const Problem& prob, const MethodSpec& spec, double epochs) {
  const double m = static_cast<double>(prob.m());
  double per_iter = 0.0;  // expected component evaluations per worker per iteration
  switch (spec.base_kind(prob.m())) {
    case BaseKind::kFull:
      per_iter = m;
      break;
    case BaseKind::kSample:
      per_iter = static_cast<double>(spec.batch);
      break;
    case BaseKind::kLsvrg:
      per_iter = 2.0 * static_cast<double>(std::min(spec.batch, prob.m())) + spec.p * m;
      break;
    case BaseKind::kSaga:
      per_iter = 1.0;
      break;
  }
  const double iters = std::ceil(epochs * m / per_iter);
  return std::max<std::size_t>(1, static_cast<std::size_t>(iters));
}

Vec weighted_average_iterate(std::span<const Vec> iterates, double mu, double gamma, double rho1,
                             double rho2) {
  if (iterates.empty()) return {};
  const double eta = std::max(0.0, std::min({gamma * mu / 2.0, rho1 / 4.0, rho2 / 4.0}));
  const std::size_t big_k = iterates.size() - 1;
  const std::size_t d = iterates.front().size();
  // w_k proportional to (1 - eta)^(K - k); avoids overflow of (1 - eta)^-(k+1).
  Vec out(d, 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k <= big_k; ++k) {
    const double w = std::pow(1.0 - eta, static_cast<double>(big_k - k));
    vec::axpy(w, iterates[k], out);
    total += w;
  }
  vec::scale(1.0 / total, out);
  return out;
}

double lyapunov_value(const Simulation& sim, const ReferenceSolution& ref, double m1, double m2) {
  const double g2 = sim.spec().gamma * sim.spec().gamma;
  double t = vec::dist2_sq(sim.perturbed_iterate(), ref.x_star);
  if (sim.has_sigma1()) t += m1 * g2 * sim.sigma1_sq();
  if (sim.has_sigma2()) t += m2 * g2 * sim.sigma2_sq();
  return t;
}

}  // namespace efsgd
