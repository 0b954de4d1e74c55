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

// Serial reference kernels against their OpenMP versions.
// Arg 0 selects Exec::kSerial, arg 1 Exec::kParallel.

#include <benchmark/benchmark.h>

#include "efsgd/engine.hpp"
#include "efsgd/problem.hpp"

using namespace efsgd;

namespace {

// 40 workers x 500 rows in d = 200: big enough for the parallel paths to matter.
const Problem& problem() {
  static const Problem p = [] {
    SyntheticSpec s;
    s.n = 40;
    s.m = 500;
    s.d = 200;
    return Problem::synthetic(s);
  }();
  return p;
}

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::kParallel : Exec::kSerial; }

Vec probe() {
  Vec x(problem().d());
  for (std::size_t c = 0; c < x.size(); ++c) x[c] = 0.01 * double(c % 7) - 0.03;
  return x;
}

void BM_GradFull(benchmark::State& st) {
  const Vec x = probe();
  for (auto _ : st) benchmark::DoNotOptimize(problem().grad_full(x, exec_of(st)));
}

void BM_Loss(benchmark::State& st) {
  const Vec x = probe();
  for (auto _ : st) benchmark::DoNotOptimize(problem().loss(x, exec_of(st)));
}

void BM_AtaMatvec(benchmark::State& st) {
  const Vec v = probe();
  Vec y(v.size());
  for (auto _ : st) {
    ata_matvec(problem().data(), v, y, exec_of(st));
    benchmark::DoNotOptimize(y.data());
  }
}

void BM_StepEcGdDiana(benchmark::State& st) {
  const Problem& p = problem();
  MethodSpec s = make_method("ec-gd-diana", p.m(), p.d());
  s.gamma = 1.0 / p.L();
  Simulation sim(p, nullptr, s, Vec(p.d(), 0.0), 0, exec_of(st));
  for (auto _ : st) sim.step();
}

void BM_StepEcLsvrgDiana(benchmark::State& st) {
  const Problem& p = problem();
  MethodSpec s = make_method("ec-lsvrg-diana", p.m(), p.d());
  s.gamma = 1.0 / p.L();
  Simulation sim(p, nullptr, s, Vec(p.d(), 0.0), 0, exec_of(st));
  for (auto _ : st) sim.step();
}

}  // namespace

BENCHMARK(BM_GradFull)->Arg(0)->Arg(1);
BENCHMARK(BM_Loss)->Arg(0)->Arg(1);
BENCHMARK(BM_AtaMatvec)->Arg(0)->Arg(1);
BENCHMARK(BM_StepEcGdDiana)->Arg(0)->Arg(1);
BENCHMARK(BM_StepEcLsvrgDiana)->Arg(0)->Arg(1);

BENCHMARK_MAIN();
