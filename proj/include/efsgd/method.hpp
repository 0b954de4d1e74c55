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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "efsgd/compressors.hpp"

namespace efsgd {

/// How v_i is formed from g_i.
enum class Family {
  kPlain,    // v_i = gamma g_i
  kEc,       // v_i = C(e_i + gamma g_i), e_i <- e_i + gamma g_i - v_i
  kDelayed,  // v_i = gamma g_i^{k - tau}, 0 while k < tau
};

enum class Estimator {
  kSgd,
  kSgdsr,
  kGdstar,
  kSgdDiana,
  kSgdsrDiana,
  kLsvrg,
  kLsvrgStar,
  kLsvrgDiana,
  kQsgd,
  kQsgdStar,
  kQlsvrg,
  kQlsvrgStar,
  kDianasrDq,
  kVrDianaLsvrg,
  kVrDianaSaga,
};

/// Base stochastic gradient a worker draws before shifts/quantization.
enum class BaseKind { kSample, kFull, kLsvrg, kSaga };

/// How a DIANA shift enters g_i.
enum class ShiftForm {
  kNone,
  kEc,     // g = ghat - h_i + hbar; independent Q draw for the shift
  kQuant,  // Delta = Q(ghat - h_i), g = h_i + Delta; same draw for the shift
};

struct MethodSpec {
  std::string name;
  Family family = Family::kPlain;
  Estimator estimator = Estimator::kSgd;
  double gamma = 0.0;
  double alpha = 1.0;
  double p = 1.0;
  std::size_t tau = 0;
  ContractiveCompressor compressor = ContractiveCompressor::identity();
  UnbiasedQuantizer quantizer = UnbiasedQuantizer::identity();   // Q or Q1
  UnbiasedQuantizer quantizer2 = UnbiasedQuantizer::identity();  // master Q2 (dianasr-dq)
  std::size_t batch = 1;  // batch >= m means full local gradients
  std::uint32_t float_bits = kDefaultFloatBits;

  BaseKind base_kind(std::size_t m) const;
  ShiftForm shift_form() const;
  bool needs_reference() const;  // consumes grad f_i(x*)
  bool has_shift() const { return shift_form() != ShiftForm::kNone; }
  bool quantizes_estimate() const;  // g_i = Q(...), no shift
  bool uses_quantizer() const;
  bool uses_lsvrg_reference() const;
  bool shared_refresh_coin() const { return estimator == Estimator::kVrDianaLsvrg; }

  /// Throws ConfigError on out-of-range hyperparameters for dimension d and shard size m.
  void validate(std::size_t d, std::size_t m) const;
};

struct MethodInfo {
  std::string_view name;
  Family family;
  Estimator estimator;
  bool full_batch;  // runs on full local gradients (batch = m)
};

/// All accepted method strings.
const std::vector<MethodInfo>& method_table();

/// Looks up a method string; throws ConfigError when unknown.
const MethodInfo& method_info(std::string_view name);

/// Spec with the name's family/estimator filled in and the remaining fields at
/// their experiment defaults for shard size m and dimension d: TopK of
/// max{1, ceil(d/100)} components, dither:l2 quantizers, alpha = 1/(omega+1),
/// p = 1/m, tau = 0. gamma is left at 0 for the caller.
MethodSpec make_method(std::string_view name, std::size_t m, std::size_t d);

/// max{1, ceil(d/100)}.
std::size_t default_topk(std::size_t d);

std::string_view family_name(Family f);

}  // namespace efsgd
