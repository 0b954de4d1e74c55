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

#include "efsgd/method.hpp"

#include <cmath>

#include "efsgd/errors.hpp"

namespace efsgd {

namespace {

const std::vector<MethodInfo> kMethods = {
    {"sgd", Family::kPlain, Estimator::kSgd, false},
    {"gd", Family::kPlain, Estimator::kSgd, true},
    {"sgdsr", Family::kPlain, Estimator::kSgdsr, false},
    {"lsvrg", Family::kPlain, Estimator::kLsvrg, false},
    {"dianasr-dq", Family::kPlain, Estimator::kDianasrDq, false},
    {"vr-diana-lsvrg", Family::kPlain, Estimator::kVrDianaLsvrg, false},
    {"vr-diana-saga", Family::kPlain, Estimator::kVrDianaSaga, false},
    {"ec-sgd", Family::kEc, Estimator::kSgd, false},
    {"ec-gd", Family::kEc, Estimator::kSgd, true},
    {"ec-sgdsr", Family::kEc, Estimator::kSgdsr, false},
    {"ec-gdstar", Family::kEc, Estimator::kGdstar, true},
    {"ec-sgd-diana", Family::kEc, Estimator::kSgdDiana, false},
    {"ec-gd-diana", Family::kEc, Estimator::kSgdDiana, true},
    {"ec-sgdsr-diana", Family::kEc, Estimator::kSgdsrDiana, false},
    {"ec-lsvrg", Family::kEc, Estimator::kLsvrg, false},
    {"ec-lsvrgstar", Family::kEc, Estimator::kLsvrgStar, false},
    {"ec-lsvrg-diana", Family::kEc, Estimator::kLsvrgDiana, false},
    {"d-sgd", Family::kDelayed, Estimator::kSgd, false},
    {"d-sgdsr", Family::kDelayed, Estimator::kSgdsr, false},
    {"d-qsgd", Family::kDelayed, Estimator::kQsgd, false},
    {"d-qsgdstar", Family::kDelayed, Estimator::kQsgdStar, false},
    {"d-qgdstar", Family::kDelayed, Estimator::kQsgdStar, true},
    {"d-sgd-diana", Family::kDelayed, Estimator::kSgdDiana, false},
    {"d-gd-diana", Family::kDelayed, Estimator::kSgdDiana, true},
    {"d-lsvrg", Family::kDelayed, Estimator::kLsvrg, false},
    {"d-qlsvrg", Family::kDelayed, Estimator::kQlsvrg, false},
    {"d-qlsvrgstar", Family::kDelayed, Estimator::kQlsvrgStar, false},
    {"d-lsvrg-diana", Family::kDelayed, Estimator::kLsvrgDiana, false},
};

}  // namespace

const std::vector<MethodInfo>& method_table() { return kMethods; }

const MethodInfo& method_info(std::string_view name) {
  for (const auto& info : kMethods)
    if (info.name == name) return info;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

std::size_t default_topk(std::size_t d) { return d <= 100 ? 1 : (d + 99) / 100; }

MethodSpec make_method(std::string_view name, std::size_t m, std::size_t d) {
  const auto& info = method_info(name);
  MethodSpec spec;
  spec.name = std::string(info.name);
  spec.family = info.family;
  spec.estimator = info.estimator;
  spec.batch = info.full_batch || spec.estimator == Estimator::kGdstar ? m : 1;
  spec.p = m > 0 ? 1.0 / static_cast<double>(m) : 1.0;
  if (spec.family == Family::kEc) spec.compressor = ContractiveCompressor::top_k(default_topk(d));
  if (spec.uses_quantizer()) {
    spec.quantizer = UnbiasedQuantizer::dither_l2();
    if (spec.has_shift()) spec.alpha = 1.0 / (spec.quantizer.omega(d) + 1.0);
  }
  if (spec.estimator == Estimator::kDianasrDq) spec.quantizer2 = UnbiasedQuantizer::dither_l2();
  return spec;
}

std::string_view family_name(Family f) {
  switch (f) {
    case Family::kPlain:
      return "plain";
    case Family::kEc:
      return "ec";
    case Family::kDelayed:
      return "delayed";
  }
  return "?";
}

BaseKind MethodSpec::base_kind(std::size_t m) const {
  switch (estimator) {
    case Estimator::kGdstar:
      return BaseKind::kFull;
    case Estimator::kLsvrg:
    case Estimator::kLsvrgStar:
    case Estimator::kLsvrgDiana:
    case Estimator::kQlsvrg:
    case Estimator::kQlsvrgStar:
    case Estimator::kVrDianaLsvrg:
      return BaseKind::kLsvrg;
    case Estimator::kVrDianaSaga:
      return BaseKind::kSaga;
    default:
      return batch >= m ? BaseKind::kFull : BaseKind::kSample;
  }
}

ShiftForm MethodSpec::shift_form() const {
  switch (estimator) {
    case Estimator::kSgdDiana:
    case Estimator::kSgdsrDiana:
    case Estimator::kLsvrgDiana:
      return family == Family::kEc ? ShiftForm::kEc : ShiftForm::kQuant;
    case Estimator::kDianasrDq:
    case Estimator::kVrDianaLsvrg:
    case Estimator::kVrDianaSaga:
      return ShiftForm::kQuant;
    default:
      return ShiftForm::kNone;
  }
}

bool MethodSpec::needs_reference() const {
  return estimator == Estimator::kGdstar || estimator == Estimator::kLsvrgStar ||
         estimator == Estimator::kQsgdStar || estimator == Estimator::kQlsvrgStar;
}

bool MethodSpec::quantizes_estimate() const {
  return estimator == Estimator::kQsgd || estimator == Estimator::kQsgdStar ||
         estimator == Estimator::kQlsvrg || estimator == Estimator::kQlsvrgStar;
}

bool MethodSpec::uses_quantizer() const { return has_shift() || quantizes_estimate(); }

bool MethodSpec::uses_lsvrg_reference() const {
  return estimator == Estimator::kLsvrg || estimator == Estimator::kLsvrgStar ||
         estimator == Estimator::kLsvrgDiana || estimator == Estimator::kQlsvrg ||
         estimator == Estimator::kQlsvrgStar || estimator == Estimator::kVrDianaLsvrg;
}

void MethodSpec::validate(std::size_t d, std::size_t m) const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError(name + ": gamma must be positive");
  if (batch == 0) throw ConfigError(name + ": batch must be >= 1");
  if (m > 0 && batch > m)
    throw ConfigError(name + ": batch exceeds shard size");
  if (family == Family::kEc) compressor.validate(d);
  if (uses_quantizer()) quantizer.validate(d);
  if (estimator == Estimator::kDianasrDq) quantizer2.validate(d);
  if (uses_lsvrg_reference() && !(p >= 0.0 && p <= 1.0))
    throw ConfigError(name + ": p must lie in [0, 1]");
  if (has_shift()) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError(name + ": alpha must lie in (0, 1]");
    const double bound = 1.0 / (quantizer.omega(d) + 1.0);
    if (alpha > bound * (1.0 + 1e-12))
      throw ConfigError(name + ": alpha " + std::to_string(alpha) + " exceeds 1/(omega+1) = " +
                        std::to_string(bound));
  }
}

}  // namespace efsgd
