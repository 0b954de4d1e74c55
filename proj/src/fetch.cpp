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

#include <cstdlib>
#include <fstream>
#include <sstream>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "efsgd/errors.hpp"
#include "efsgd/experiment.hpp"

namespace efsgd {

namespace {

constexpr const char* kDefaultBaseUrl =
    "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary";

const std::vector<DatasetInfo> kDatasets = {
    {"a9a", "a9a", 32'000, 123, false},
    {"w8a", "w8a", 49'700, 300, false},
    {"gisette", "gisette_scale.bz2", 6'000, 5'000, true},
    {"mushrooms", "mushrooms", 8'000, 112, false},
    {"madelon", "madelon", 2'000, 500, false},
    {"phishing", "phishing", 11'000, 68, false},
};

std::string base_url() {
  const char* env = std::getenv("EFSGD_DATASET_URL");
  std::string url = env && *env ? env : kDefaultBaseUrl;
  while (!url.empty() && url.back() == '/') url.pop_back();
  return url;
}

// Downloads url into dest. Supports http(s):// and file:// URLs.
void download(const std::string& url, const std::filesystem::path& dest) {
  if (url.starts_with("file://")) {
    const std::filesystem::path src = url.substr(7);
    std::error_code ec;
    std::filesystem::copy_file(src, dest, std::filesystem::copy_options::overwrite_existing, ec);
    if (ec) throw DatasetError("cannot copy " + src.string() + ": " + ec.message());
    return;
  }
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw DatasetError("malformed dataset URL " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string host = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client cli(host);
  cli.set_follow_location(true);
  cli.set_connection_timeout(30);
  cli.set_read_timeout(300);
  std::ofstream out(dest, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot write " + dest.string());
  auto res = cli.Get(path, [&](const char* data, std::size_t len) {
    out.write(data, static_cast<std::streamsize>(len));
    return static_cast<bool>(out);
  });
  out.close();
  if (!res) throw DatasetError("download of " + url + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw DatasetError("download of " + url + " returned HTTP " + std::to_string(res->status));
}

void bunzip(const std::filesystem::path& src, const std::filesystem::path& dest) {
  const std::string cmd = "bzip2 -dc '" + src.string() + "' > '" + dest.string() + "'";
  if (std::system(cmd.c_str()) != 0)
    throw DatasetError("bzip2 could not decompress " + src.string() + " (truncated download?)");
}

}  // namespace

const std::vector<DatasetInfo>& known_datasets() { return kDatasets; }

const DatasetInfo* find_dataset(std::string_view name) {
  for (const auto& d : kDatasets)
    if (d.name == name) return &d;
  return nullptr;
}

std::filesystem::path default_cache_dir() {
  const char* env = std::getenv("EFSGD_CACHE_DIR");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("datasets");
}

std::filesystem::path fetch_dataset(std::string_view name, const std::filesystem::path& cache_dir,
                                    bool allow_network) {
  const DatasetInfo* info = find_dataset(name);
  if (!info) throw DatasetError("unknown dataset '" + std::string(name) + "'");
  const auto target = cache_dir / std::string(name);
  std::error_code ec;
  if (std::filesystem::exists(target, ec) && std::filesystem::file_size(target, ec) > 0) return target;
  if (!allow_network)
    throw DatasetError("dataset '" + std::string(name) + "' not found at " + target.string() +
                       "; place the LIBSVM file there or pass --fetch");

  std::filesystem::create_directories(cache_dir);
  const std::string url = base_url() + "/" + std::string(info->remote_file);
  auto part = target;
  part += ".part";
  try {
    download(url, part);
  } catch (...) {
    std::filesystem::remove(part, ec);
    throw;
  }
  if (std::filesystem::file_size(part, ec) == 0 || ec) {
    std::filesystem::remove(part, ec);
    throw DatasetError("download of " + url + " produced an empty file");
  }
  if (info->bzip2) {
    auto raw = target;
    raw += ".raw";
    bunzip(part, raw);
    std::filesystem::remove(part, ec);
    if (std::filesystem::file_size(raw, ec) == 0 || ec)
      throw DatasetError("decompressed " + url + " is empty");
    std::filesystem::rename(raw, target);
  } else {
    std::filesystem::rename(part, target);
  }
  return target;
}

}  // namespace efsgd
