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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace efsgd {

/// What a stream is used for. Distinct purposes of the same worker never share draws.
enum class Purpose : std::uint32_t {
  kSample = 1,     // component / mini-batch sampling
  kQuantize = 2,   // Q applied to the transmitted estimator (or Q1)
  kShift = 3,      // independent Q draw for the DIANA shift update
  kRefresh = 4,    // LSVRG reference coin
  kMaster = 5,     // coordinator-side randomness (Q2, shared coin)
  kShuffle = 6,    // dataset shuffling
  kInit = 7,       // starting-point direction, synthetic data
  kCompress = 8,   // randomized contractive compressors
  kTest = 15,
};

/// Counter-based random stream (Philox4x32-10) keyed by a 64-bit seed and a
/// (worker, purpose) stream id. Draw n of a stream depends only on
/// (seed, worker, purpose, n), so replay is exact and streams are independent.
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::uint32_t worker, Purpose purpose);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint32_t worker() const noexcept { return worker_; }
  Purpose purpose() const noexcept { return purpose_; }
  std::uint64_t position() const noexcept { return counter_ * 2 + (have_second_ ? 1 : 0); }

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform on {0, ..., n-1}; n >= 1.
  std::size_t uniform_index(std::size_t n);

  bool bernoulli(double p);

  /// Standard normal via Box-Muller.
  double normal();

  /// Writes a uniformly random k-subset of {0..n-1} (in draw order) into out[0..k).
  /// scratch must have size n.
  void sample_without_replacement(std::size_t n, std::size_t k, std::span<std::size_t> out,
                                  std::span<std::size_t> scratch);

 private:
  std::uint64_t seed_ = 0;
  std::uint32_t worker_ = 0;
  Purpose purpose_ = Purpose::kTest;
  std::uint64_t counter_ = 0;
  std::uint64_t buffered_ = 0;
  bool have_second_ = false;
};

/// One Philox4x32-10 block; exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

}  // namespace efsgd
