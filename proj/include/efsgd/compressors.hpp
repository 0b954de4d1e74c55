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
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "efsgd/rng.hpp"
#include "efsgd/vec.hpp"

namespace efsgd {

/// Default width in bits of one transmitted float.
inline constexpr std::uint32_t kDefaultFloatBits = 64;

/// Possibly biased operator C with ||C(x) - x||^2 <= (1 - delta) ||x||^2.
class ContractiveCompressor {
 public:
  enum class Kind { kIdentity, kTopK };

  static ContractiveCompressor identity() { return ContractiveCompressor(Kind::kIdentity, 0); }
  static ContractiveCompressor top_k(std::size_t k);

  /// Parses "identity" or "topk:K".
  static ContractiveCompressor parse(std::string_view text);

  Kind kind() const noexcept { return kind_; }
  std::size_t k() const noexcept { return k_; }

  /// delta on dimension d: k/d for TopK, 1 for identity.
  double delta(std::size_t d) const;

  /// Throws ConfigError when the operator cannot act on dimension d.
  void validate(std::size_t d) const;

  std::string name() const;

  friend bool operator==(const ContractiveCompressor&, const ContractiveCompressor&) = default;

 private:
  ContractiveCompressor(Kind kind, std::size_t k) : kind_(kind), k_(k) {}

  Kind kind_;
  std::size_t k_;
};

/// Unbiased randomized operator Q with E Q(x) = x and E||Q(x) - x||^2 <= omega ||x||^2.
class UnbiasedQuantizer {
 public:
  enum class Kind { kIdentity, kRandK, kDitherL2, kDitherLinf };

  static UnbiasedQuantizer identity() { return UnbiasedQuantizer(Kind::kIdentity, 0); }
  static UnbiasedQuantizer rand_k(std::size_t k);
  static UnbiasedQuantizer dither_l2() { return UnbiasedQuantizer(Kind::kDitherL2, 0); }
  static UnbiasedQuantizer dither_linf() { return UnbiasedQuantizer(Kind::kDitherLinf, 0); }

  /// Parses "identity", "randk:K", "dither:l2" or "dither:linf".
  static UnbiasedQuantizer parse(std::string_view text);

  Kind kind() const noexcept { return kind_; }
  std::size_t k() const noexcept { return k_; }
  bool is_identity() const noexcept { return kind_ == Kind::kIdentity; }

  /// Declared omega on dimension d: d/k (RandK), sqrt(d)-1 (l2), (1+sqrt(d))/2-1 (linf), 0.
  double omega(std::size_t d) const;

  void validate(std::size_t d) const;

  std::string name() const;

  friend bool operator==(const UnbiasedQuantizer&, const UnbiasedQuantizer&) = default;

 private:
  UnbiasedQuantizer(Kind kind, std::size_t k) : kind_(kind), k_(k) {}

  Kind kind_;
  std::size_t k_;
};

/// TopK keeps the k largest magnitudes; ties go to the lowest index.
Vec compress(const ContractiveCompressor& c, std::span<const double> x);
void compress_into(const ContractiveCompressor& c, std::span<const double> x, std::span<double> out);

/// Draws Q(x). The zero vector maps to zero without consuming randomness.
Vec quantize(const UnbiasedQuantizer& q, std::span<const double> x, RngStream& rng);
void quantize_into(const UnbiasedQuantizer& q, std::span<const double> x, RngStream& rng,
                   std::span<double> out);

/// Deterministic part of Q given a realized outcome: for RandK the selected
/// coordinates, for dithering the Bernoulli vector xi (one flag per coordinate).
/// quantize() is exactly draw-outcome followed by this map.
Vec quantize_outcome(const UnbiasedQuantizer& q, std::span<const double> x,
                     std::span<const std::size_t> selected, const std::vector<bool>& xi);

/// Keep probabilities |x_i| / ||x||_p used by the dithering quantizers.
Vec dither_probabilities(const UnbiasedQuantizer& q, std::span<const double> x);

/// Bits to transmit one operator output on dimension d under the declared cost model:
/// sparse k*(F + ceil(log2 d)); dithering F + ceil(d*log2 3); dense d*F.
std::uint64_t bit_cost(const ContractiveCompressor& c, std::size_t d,
                       std::uint32_t float_bits = kDefaultFloatBits);
std::uint64_t bit_cost(const UnbiasedQuantizer& q, std::size_t d,
                       std::uint32_t float_bits = kDefaultFloatBits);
std::uint64_t dense_bit_cost(std::size_t d, std::uint32_t float_bits = kDefaultFloatBits);

}  // namespace efsgd
