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

#include "efsgd/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "efsgd/errors.hpp"
#include "efsgd/rng.hpp"

namespace efsgd {

double CsrMatrix::row_dot(std::size_t r, std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t t = row_ptr[r]; t < row_ptr[r + 1]; ++t) s += values[t] * x[col_idx[t]];
  return s;
}

double CsrMatrix::row_norm2_sq(std::size_t r) const {
  double s = 0.0;
  for (std::size_t t = row_ptr[r]; t < row_ptr[r + 1]; ++t) s += values[t] * values[t];
  return s;
}

void CsrMatrix::row_axpy(std::size_t r, double alpha, std::span<double> y) const {
  for (std::size_t t = row_ptr[r]; t < row_ptr[r + 1]; ++t) y[col_idx[t]] += alpha * values[t];
}

void CsrMatrix::push_row(std::span<const std::uint32_t> idx, std::span<const double> val) {
  col_idx.insert(col_idx.end(), idx.begin(), idx.end());
  values.insert(values.end(), val.begin(), val.end());
  row_ptr.push_back(values.size());
  ++rows;
}

CsrMatrix CsrMatrix::select_rows(std::span<const std::size_t> order) const {
  CsrMatrix out;
  out.cols = cols;
  for (std::size_t r : order) out.push_row(row_indices(r), row_values(r));
  return out;
}

CsrMatrix CsrMatrix::from_dense(const std::vector<Vec>& rows, std::size_t cols) {
  CsrMatrix out;
  out.cols = cols;
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  for (const auto& row : rows) {
    idx.clear();
    val.clear();
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c] != 0.0) {
        idx.push_back(static_cast<std::uint32_t>(c));
        val.push_back(row[c]);
      }
    }
    out.push_row(idx, val);
  }
  return out;
}

Vec CsrMatrix::row_dense(std::size_t r) const {
  Vec out(cols, 0.0);
  row_axpy(r, 1.0, out);
  return out;
}

// ---------------------------------------------------------------------------
// LIBSVM

namespace {

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

Dataset parse_libsvm(std::istream& in, std::string name) {
  Dataset ds;
  ds.name = std::move(name);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::pair<std::uint32_t, double>> entries;
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  std::size_t max_col = 0;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;  // blank line
    if (tok.front() == '#') continue;
    double label = 0.0;
    if (!parse_double(tok, label)) throw ParseError("non-numeric label '" + tok + "'", lineno);

    entries.clear();
    while (ls >> tok) {
      if (tok.front() == '#') break;
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw ParseError("expected idx:val, got '" + tok + "'", lineno);
      std::size_t index = 0;
      const char* first = tok.data();
      auto [ptr, ec] = std::from_chars(first, first + colon, index);
      if (ec != std::errc() || ptr != first + colon || index == 0)
        throw ParseError("bad feature index in '" + tok + "'", lineno);
      double value = 0.0;
      if (!parse_double(std::string_view(tok).substr(colon + 1), value))
        throw ParseError("non-numeric feature value in '" + tok + "'", lineno);
      entries.emplace_back(static_cast<std::uint32_t>(index - 1), value);
    }
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    idx.clear();
    val.clear();
    for (std::size_t t = 0; t < entries.size(); ++t) {
      if (t > 0 && entries[t].first == entries[t - 1].first)
        throw ParseError("duplicate feature index " + std::to_string(entries[t].first + 1), lineno);
      if (entries[t].second == 0.0) continue;
      idx.push_back(entries[t].first);
      val.push_back(entries[t].second);
      max_col = std::max<std::size_t>(max_col, entries[t].first + 1);
    }
    ds.features.push_row(idx, val);
    ds.labels.push_back(label);
  }
  if (ds.labels.empty()) throw ParseError("empty file", lineno == 0 ? 1 : lineno);
  ds.features.cols = max_col;

  std::set<double> distinct(ds.labels.begin(), ds.labels.end());
  const bool already_pm1 =
      std::all_of(distinct.begin(), distinct.end(), [](double v) { return v == 1.0 || v == -1.0; });
  if (!already_pm1) {
    if (distinct.size() != 2)
      throw ParseError("labels must take exactly two values, found " + std::to_string(distinct.size()),
                       1);
    const double lo = *distinct.begin();
    for (double& y : ds.labels) y = (y == lo) ? -1.0 : 1.0;
  }
  return ds;
}

Dataset load_libsvm(const std::filesystem::path& path, std::string name) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset file " + path.string());
  return parse_libsvm(in, name.empty() ? path.filename().string() : std::move(name));
}

// ---------------------------------------------------------------------------
// Sharding

std::vector<Shard> shard_dataset(const Dataset& ds, std::size_t n, std::uint64_t seed, double mu,
                                 std::size_t max_rows) {
  const std::size_t total = ds.num_rows();
  if (n == 0) throw ConfigError("number of workers must be positive");
  if (n > total)
    throw ConfigError("cannot split " + std::to_string(total) + " rows over " + std::to_string(n) +
                      " workers");
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  RngStream rng(seed, 0, Purpose::kShuffle);
  for (std::size_t i = total; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);

  std::size_t usable = total;
  if (max_rows > 0) usable = std::min(usable, max_rows);
  if (n > usable) throw ConfigError("row limit leaves fewer rows than workers");
  const std::size_t m = usable / n;

  std::vector<Shard> shards(n);
  for (std::size_t i = 0; i < n; ++i) {
    shards[i].worker_id = i;
    shards[i].mu = mu;
    shards[i].rows.assign(order.begin() + static_cast<std::ptrdiff_t>(i * m),
                          order.begin() + static_cast<std::ptrdiff_t>((i + 1) * m));
  }
  return shards;
}

// ---------------------------------------------------------------------------
// Synthetic instance

Dataset make_synthetic_dataset(const SyntheticSpec& spec) {
  if (spec.n == 0 || spec.m == 0 || spec.d == 0) throw ConfigError("synthetic sizes must be positive");
  RngStream rng(spec.seed, 0, Purpose::kInit);
  const std::size_t d = spec.d;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  Vec common(d);
  for (double& v : common) v = rng.normal() * inv_sqrt_d;
  Vec mean(d);
  for (double& v : mean) v = rng.normal();
  vec::scale(spec.feature_mean / vec::norm2(mean), mean);

  Dataset ds;
  ds.name = "synthetic";
  ds.features.cols = d;
  std::vector<std::uint32_t> idx(d);
  std::iota(idx.begin(), idx.end(), 0u);
  Vec row(d), local(d), offset(d);
  for (std::size_t i = 0; i < spec.n; ++i) {
    // Per-worker feature offset and label model.
    RngStream wr(spec.seed, static_cast<std::uint32_t>(i + 1), Purpose::kInit);
    for (std::size_t c = 0; c < d; ++c) {
      local[c] = common[c] + spec.heterogeneity * wr.normal() * inv_sqrt_d;
      offset[c] = mean[c] + spec.worker_offset * wr.normal() * inv_sqrt_d;
    }
    for (std::size_t j = 0; j < spec.m; ++j) {
      for (std::size_t c = 0; c < d; ++c) row[c] = offset[c] + wr.normal() * inv_sqrt_d;
      const double margin = spec.margin_scale * vec::dot(row, local);
      double prob = 1.0 / (1.0 + std::exp(-margin));
      prob = (1.0 - spec.label_noise) * prob + 0.5 * spec.label_noise;
      ds.labels.push_back(wr.uniform() < prob ? 1.0 : -1.0);
      ds.features.push_row(idx, row);
    }
  }
  return ds;
}

}  // namespace efsgd
