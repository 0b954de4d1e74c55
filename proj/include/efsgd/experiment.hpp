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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "efsgd/dataset.hpp"
#include "efsgd/engine.hpp"
#include "efsgd/problem.hpp"

namespace efsgd {

/// Where the shared problem instance comes from.
struct ProblemConfig {
  std::string source = "synthetic";  // "synthetic", a known dataset name, or "file:<path>"
  std::size_t workers = 20;
  std::size_t rows_per_worker = 50;  // synthetic only
  std::size_t dim = 20;              // synthetic only
  std::uint64_t seed = 0;            // synthetic generator and dataset shuffle
  std::size_t max_rows = 0;          // 0 keeps every row (datasets)
  std::optional<double> mu;          // unset selects the default rule
  Loss loss = Loss::kLogistic;
  double ref_tol = 1e-12;
  std::size_t ref_max_iter = 2'000'000;
};

/// One named method configuration; every unset field takes the method default.
struct RunSpec {
  std::string label;
  std::string method;
  std::optional<std::string> gamma;  // number, "1/L" or "c/L"
  std::optional<double> alpha;
  std::optional<double> p;
  std::optional<std::size_t> tau;
  std::optional<std::string> compressor;
  std::optional<std::string> quantizer;
  std::optional<std::string> quantizer2;
  std::optional<std::size_t> batch;
  std::optional<double> epochs;
};

struct ExperimentPlan {
  std::string name = "plan";
  ProblemConfig problem;
  std::vector<RunSpec> runs;
  std::vector<std::uint64_t> seeds{0};
  double epochs = 500;
  std::size_t record_every = 0;  // 0 picks about 200 rows per trace
  InitMode init = InitMode::kZero;
  std::uint64_t init_seed = 0;
  bool sigma_diagnostics = false;
  Exec exec = Exec::kParallel;
  std::filesystem::path output = "out";
};

/// Parses the key = value plan format. Throws ParseError with a line number.
ExperimentPlan parse_plan(std::istream& in);
ExperimentPlan load_plan(const std::filesystem::path& path);
/// Inverse of parse_plan; every field is written explicitly.
std::string plan_to_text(const ExperimentPlan& plan);

/// Metadata of a dataset the fetch helper knows about.
struct DatasetInfo {
  std::string_view name;
  std::string_view remote_file;  // file name under the base URL
  std::size_t rows;              // post-truncation N
  std::size_t dim;
  bool bzip2;
};

const std::vector<DatasetInfo>& known_datasets();
const DatasetInfo* find_dataset(std::string_view name);

/// EFSGD_CACHE_DIR or ./datasets.
std::filesystem::path default_cache_dir();

/// Returns cache_dir/name, downloading it first when allowed. Throws DatasetError.
std::filesystem::path fetch_dataset(std::string_view name, const std::filesystem::path& cache_dir,
                                    bool allow_network);

/// Names accepted by make_preset.
std::vector<std::string> preset_names();
/// Throws ConfigError for unknown names. workers = 0 keeps the preset default.
ExperimentPlan make_preset(std::string_view name, std::size_t workers = 0);

/// Builds the shared problem. Throws DatasetError when a dataset is not cached.
Problem build_problem(const ProblemConfig& cfg, const std::filesystem::path& cache_dir,
                      bool allow_network);

/// RunConfig with method defaults resolved against the problem.
RunConfig resolve_run(const RunSpec& run, const ExperimentPlan& plan, const Problem& prob,
                      std::uint64_t seed, std::span<const double> x0);

/// Evaluates a gamma expression at the given L.
double parse_gamma(std::string_view text, double L);

struct RunArtifact {
  std::string label;
  std::uint64_t seed = 0;
  std::filesystem::path csv;
  std::filesystem::path json;
  double final_f_gap = 0.0;
  double seconds = 0.0;
};

struct PlanResult {
  std::vector<RunArtifact> runs;
  std::filesystem::path manifest;
};

/// Executes every run for every seed. Writes <label>_seed<s>.csv, a JSON record
/// next to each CSV and manifest.json.
PlanResult run_plan(const ExperimentPlan& plan, const std::filesystem::path& cache_dir,
                    bool allow_network);

/// Writes text to path through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace efsgd
