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

#include <omp.h>

namespace efsgd {

/// Runs body(i) for i in [0, count). With parallel == true the iterations are
/// spread over OpenMP threads unless we are already inside a parallel region.
/// Callers must make iterations independent.
template <typename Body>
void for_each_index(std::size_t count, bool parallel, Body&& body) {
  const bool go_parallel = parallel && count > 1 && !omp_in_parallel();
  if (!go_parallel) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const long long total = static_cast<long long>(count);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < total; ++i) body(static_cast<std::size_t>(i));
}

}  // namespace efsgd
