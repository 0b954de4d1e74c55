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

#include "efsgd/compressors.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <numeric>

#include "efsgd/errors.hpp"

namespace efsgd {

namespace {

std::size_t parse_positive(std::string_view text, std::string_view what) {
  std::size_t value = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || value == 0)
    throw ConfigError("invalid " + std::string(what) + " size '" + std::string(text) + "'");
  return value;
}

std::uint64_t ceil_log2(std::size_t d) {
  if (d <= 1) return 0;
  return static_cast<std::uint64_t>(std::bit_width(d - 1));
}

}  // namespace

// ---------------------------------------------------------------------------
// ContractiveCompressor

ContractiveCompressor ContractiveCompressor::top_k(std::size_t k) {
  if (k == 0) throw ConfigError("topk requires k >= 1");
  return ContractiveCompressor(Kind::kTopK, k);
}

ContractiveCompressor ContractiveCompressor::parse(std::string_view text) {
  if (text == "identity") return identity();
  if (text.starts_with("topk:")) return top_k(parse_positive(text.substr(5), "topk"));
  throw ConfigError("unknown compressor '" + std::string(text) + "'");
}

double ContractiveCompressor::delta(std::size_t d) const {
  validate(d);
  if (kind_ == Kind::kIdentity) return 1.0;
  return static_cast<double>(k_) / static_cast<double>(d);
}

void ContractiveCompressor::validate(std::size_t d) const {
  if (d == 0) throw ConfigError("compressor applied to an empty vector");
  if (kind_ == Kind::kTopK && k_ > d)
    throw ConfigError("topk:" + std::to_string(k_) + " exceeds dimension " + std::to_string(d));
}

std::string ContractiveCompressor::name() const {
  if (kind_ == Kind::kIdentity) return "identity";
  return "topk:" + std::to_string(k_);
}

void compress_into(const ContractiveCompressor& c, std::span<const double> x, std::span<double> out) {
  const std::size_t d = x.size();
  c.validate(d);
  if (c.kind() == ContractiveCompressor::Kind::kIdentity || c.k() == d) {
    std::copy(x.begin(), x.end(), out.begin());
    return;
  }
  std::vector<std::size_t> idx(d);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Strict total order: larger magnitude first, then lower index.
  auto before = [&](std::size_t a, std::size_t b) {
    const double fa = std::abs(x[a]);
    const double fb = std::abs(x[b]);
    if (fa != fb) return fa > fb;
    return a < b;
  };
  const std::size_t k = c.k();
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k - 1), idx.end(), before);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t t = 0; t < k; ++t) out[idx[t]] = x[idx[t]];
}

Vec compress(const ContractiveCompressor& c, std::span<const double> x) {
  Vec out(x.size());
  compress_into(c, x, out);
  return out;
}

// ---------------------------------------------------------------------------
// UnbiasedQuantizer

UnbiasedQuantizer UnbiasedQuantizer::rand_k(std::size_t k) {
  if (k == 0) throw ConfigError("randk requires k >= 1");
  return UnbiasedQuantizer(Kind::kRandK, k);
}

UnbiasedQuantizer UnbiasedQuantizer::parse(std::string_view text) {
  if (text == "identity") return identity();
  if (text == "dither:l2") return dither_l2();
  if (text == "dither:linf") return dither_linf();
  if (text.starts_with("randk:")) return rand_k(parse_positive(text.substr(6), "randk"));
  throw ConfigError("unknown quantizer '" + std::string(text) + "'");
}

double UnbiasedQuantizer::omega(std::size_t d) const {
  validate(d);
  const double dd = static_cast<double>(d);
  switch (kind_) {
    case Kind::kIdentity:
      return 0.0;
    case Kind::kRandK:
      return dd / static_cast<double>(k_);
    case Kind::kDitherL2:
      return std::sqrt(dd) - 1.0;
    case Kind::kDitherLinf:
      return (1.0 + std::sqrt(dd)) / 2.0 - 1.0;
  }
  return 0.0;
}

void UnbiasedQuantizer::validate(std::size_t d) const {
  if (d == 0) throw ConfigError("quantizer applied to an empty vector");
  if (kind_ == Kind::kRandK && k_ > d)
    throw ConfigError("randk:" + std::to_string(k_) + " exceeds dimension " + std::to_string(d));
}

std::string UnbiasedQuantizer::name() const {
  switch (kind_) {
    case Kind::kIdentity:
      return "identity";
    case Kind::kRandK:
      return "randk:" + std::to_string(k_);
    case Kind::kDitherL2:
      return "dither:l2";
    case Kind::kDitherLinf:
      return "dither:linf";
  }
  return "?";
}

Vec dither_probabilities(const UnbiasedQuantizer& q, std::span<const double> x) {
  const double norm =
      q.kind() == UnbiasedQuantizer::Kind::kDitherLinf ? vec::norm_inf(x) : vec::norm2(x);
  Vec prob(x.size(), 0.0);
  if (norm == 0.0) return prob;
  for (std::size_t i = 0; i < x.size(); ++i) prob[i] = std::min(1.0, std::abs(x[i]) / norm);
  return prob;
}

Vec quantize_outcome(const UnbiasedQuantizer& q, std::span<const double> x,
                     std::span<const std::size_t> selected, const std::vector<bool>& xi) {
  const std::size_t d = x.size();
  q.validate(d);
  Vec out(d, 0.0);
  switch (q.kind()) {
    case UnbiasedQuantizer::Kind::kIdentity:
      std::copy(x.begin(), x.end(), out.begin());
      break;
    case UnbiasedQuantizer::Kind::kRandK: {
      const double s = static_cast<double>(d) / static_cast<double>(q.k());
      for (std::size_t i : selected) out[i] = s * x[i];
      break;
    }
    case UnbiasedQuantizer::Kind::kDitherL2:
    case UnbiasedQuantizer::Kind::kDitherLinf: {
      const double norm =
          q.kind() == UnbiasedQuantizer::Kind::kDitherLinf ? vec::norm_inf(x) : vec::norm2(x);
      for (std::size_t i = 0; i < d; ++i) {
        if (xi[i] && x[i] != 0.0) out[i] = x[i] > 0.0 ? norm : -norm;
      }
      break;
    }
  }
  return out;
}

void quantize_into(const UnbiasedQuantizer& q, std::span<const double> x, RngStream& rng,
                   std::span<double> out) {
  const std::size_t d = x.size();
  q.validate(d);
  if (q.is_identity()) {
    std::copy(x.begin(), x.end(), out.begin());
    return;
  }
  bool zero = true;
  for (double v : x) {
    if (v != 0.0) {
      zero = false;
      break;
    }
  }
  std::fill(out.begin(), out.end(), 0.0);
  if (zero) return;

  switch (q.kind()) {
    case UnbiasedQuantizer::Kind::kRandK: {
      const std::size_t k = q.k();
      const double s = static_cast<double>(d) / static_cast<double>(k);
      std::vector<std::size_t> chosen(k), scratch(d);
      rng.sample_without_replacement(d, k, chosen, scratch);
      for (std::size_t i : chosen) out[i] = s * x[i];
      break;
    }
    case UnbiasedQuantizer::Kind::kDitherL2:
    case UnbiasedQuantizer::Kind::kDitherLinf: {
      const double norm =
          q.kind() == UnbiasedQuantizer::Kind::kDitherLinf ? vec::norm_inf(x) : vec::norm2(x);
      for (std::size_t i = 0; i < d; ++i) {
        if (x[i] == 0.0) continue;
        const double a = std::abs(x[i]);
        // One uniform per nonzero coordinate; |x_i| == norm keeps it surely.
        const bool keep = a >= norm || rng.uniform() * norm < a;
        if (keep) out[i] = x[i] > 0.0 ? norm : -norm;
      }
      break;
    }
    case UnbiasedQuantizer::Kind::kIdentity:
      break;
  }
}

Vec quantize(const UnbiasedQuantizer& q, std::span<const double> x, RngStream& rng) {
  Vec out(x.size());
  quantize_into(q, x, rng, out);
  return out;
}

// ---------------------------------------------------------------------------
// Cost model

std::uint64_t dense_bit_cost(std::size_t d, std::uint32_t float_bits) {
  return static_cast<std::uint64_t>(d) * float_bits;
}

std::uint64_t bit_cost(const ContractiveCompressor& c, std::size_t d, std::uint32_t float_bits) {
  if (c.kind() == ContractiveCompressor::Kind::kIdentity) return dense_bit_cost(d, float_bits);
  return static_cast<std::uint64_t>(c.k()) * (float_bits + ceil_log2(d));
}

std::uint64_t bit_cost(const UnbiasedQuantizer& q, std::size_t d, std::uint32_t float_bits) {
  switch (q.kind()) {
    case UnbiasedQuantizer::Kind::kIdentity:
      return dense_bit_cost(d, float_bits);
    case UnbiasedQuantizer::Kind::kRandK:
      return static_cast<std::uint64_t>(q.k()) * (float_bits + ceil_log2(d));
    case UnbiasedQuantizer::Kind::kDitherL2:
    case UnbiasedQuantizer::Kind::kDitherLinf:
      return float_bits +
             static_cast<std::uint64_t>(std::ceil(static_cast<double>(d) * std::log2(3.0)));
  }
  return 0;
}

}  // namespace efsgd
