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
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "efsgd/vec.hpp"

namespace efsgd {

/// Compressed sparse row matrix. Column indices are 0-based and sorted within a row.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return values.size(); }

  std::span<const std::uint32_t> row_indices(std::size_t r) const {
    return {col_idx.data() + row_ptr[r], row_ptr[r + 1] - row_ptr[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {values.data() + row_ptr[r], row_ptr[r + 1] - row_ptr[r]};
  }

  double row_dot(std::size_t r, std::span<const double> x) const;
  double row_norm2_sq(std::size_t r) const;
  // y += alpha * a_r
  void row_axpy(std::size_t r, double alpha, std::span<double> y) const;

  /// Appends a row given sorted unique 0-based indices.
  void push_row(std::span<const std::uint32_t> idx, std::span<const double> val);

  /// New matrix whose row t is row order[t] of this one.
  CsrMatrix select_rows(std::span<const std::size_t> order) const;

  static CsrMatrix from_dense(const std::vector<Vec>& rows, std::size_t cols);
  Vec row_dense(std::size_t r) const;
};

struct Dataset {
  std::string name;
  CsrMatrix features;
  Vec labels;

  std::size_t num_rows() const noexcept { return features.rows; }
  std::size_t dim() const noexcept { return features.cols; }
};

/// Parses LIBSVM text ("label idx:val ..." with 1-based indices).
/// Labels are mapped to +-1: sets already inside {-1,+1} are kept, any other
/// set of exactly two values maps smaller -> -1 and larger -> +1.
Dataset parse_libsvm(std::istream& in, std::string name = {});
Dataset load_libsvm(const std::filesystem::path& path, std::string name = {});

/// One worker's slice of a dataset.
struct Shard {
  std::size_t worker_id = 0;
  std::vector<std::size_t> rows;  // indices into the source dataset
  double mu = 0.0;
};

/// Seeded shuffle, optional truncation to max_rows, truncation to n*floor(N/n),
/// contiguous equal split.
std::vector<Shard> shard_dataset(const Dataset& ds, std::size_t n, std::uint64_t seed,
                                 double mu = 0.0, std::size_t max_rows = 0);

/// Parameters of the built-in seeded logistic instance. Rows are generated
/// worker by worker; each worker draws labels from its own perturbed model so
/// that the local optima differ.
struct SyntheticSpec {
  std::size_t n = 20;
  std::size_t m = 50;
  std::size_t d = 20;
  std::uint64_t seed = 0;
  double heterogeneity = 0.5;
  double label_noise = 0.1;
  double feature_mean = 1.0;   // norm of the mean shared by all rows
  double worker_offset = 0.5;  // per-worker feature shift scale
  double margin_scale = 4.0;
};

/// Dataset whose rows are already in worker order (worker i owns rows [i*m, (i+1)*m)).
Dataset make_synthetic_dataset(const SyntheticSpec& spec);

}  // namespace efsgd
