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

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <unistd.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include "efsgd/errors.hpp"
#include "efsgd/experiment.hpp"
#include "efsgd/method.hpp"

using namespace efsgd;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("efsgd_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentPlan parse(const std::string& text) {
  std::istringstream in(text);
  return parse_plan(in);
}

std::size_t parse_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

// Mushrooms-shaped LIBSVM text: labels 1/2, 112 features, 8124 rows.
std::string mushrooms_like(std::size_t rows) {
  std::mt19937_64 gen(5);
  std::ostringstream o;
  for (std::size_t r = 0; r < rows; ++r) {
    o << (1 + gen() % 2);
    for (std::size_t c = 1; c <= 112; ++c)
      if (gen() % 5 == 0 || (r == 0 && c == 112)) o << ' ' << c << ":1";
    o << '\n';
  }
  return o.str();
}

const char* kSmallPlan = R"(# two methods, two seeds
name = small
problem = synthetic
workers = 4
rows_per_worker = 10
dim = 5
seeds = 0 1
epochs = 20
exec = serial

[run ec-sgd]
gamma = 0.5/L

[run topk]
method = ec-gd
compressor = topk:2
)";

}  // namespace

TEST(Plan, ParsesKeysAndSections) {
  const auto p = parse(kSmallPlan);
  EXPECT_EQ(p.name, "small");
  EXPECT_EQ(p.problem.workers, 4u);
  EXPECT_EQ(p.seeds, (std::vector<std::uint64_t>{0, 1}));
  EXPECT_EQ(p.exec, Exec::kSerial);
  ASSERT_EQ(p.runs.size(), 2u);
  EXPECT_EQ(p.runs[0].method, "ec-sgd");
  EXPECT_EQ(*p.runs[0].gamma, "0.5/L");
  EXPECT_EQ(p.runs[1].method, "ec-gd");
  EXPECT_EQ(*p.runs[1].compressor, "topk:2");
}

TEST(Plan, ErrorsCarryLineNumbers) {
  EXPECT_EQ(parse_error_line("workers = 4\nbogus = 1\n[run sgd]\n"), 2u);
  EXPECT_EQ(parse_error_line("[run sgd]\nalpha = x\n"), 2u);
  EXPECT_EQ(parse_error_line("[run sgd]\n[run sgd]\n"), 2u);
  EXPECT_EQ(parse_error_line("[run sgd\n"), 1u);
  EXPECT_EQ(parse_error_line("\n\n[job sgd]\n"), 3u);
  EXPECT_EQ(parse_error_line("[run ../x]\n"), 1u);
  EXPECT_EQ(parse_error_line("init = warm\n[run sgd]\n"), 1u);
  EXPECT_NE(parse_error_line("workers = 4\n"), 0u);
  EXPECT_NE(parse_error_line("[run ec-adam]\n"), 0u);
}

TEST(Plan, TextRoundTrip) {
  auto p = parse(kSmallPlan);
  p.problem.mu = 0.1 / 3;
  p.epochs = 12.5;
  p.runs[0].alpha = 0.3;
  p.runs[1].tau = 2;
  const std::string text = plan_to_text(p);
  const auto q = parse(text);
  EXPECT_EQ(plan_to_text(q), text);
  EXPECT_EQ(*q.problem.mu, 0.1 / 3);
  EXPECT_EQ(q.epochs, 12.5);
  EXPECT_EQ(*q.runs[0].alpha, 0.3);
}

TEST(Plan, GammaExpressions) {
  EXPECT_DOUBLE_EQ(parse_gamma("1/L", 4), 0.25);
  EXPECT_DOUBLE_EQ(parse_gamma("/L", 4), 0.25);
  EXPECT_DOUBLE_EQ(parse_gamma("0.5/L", 4), 0.125);
  EXPECT_DOUBLE_EQ(parse_gamma(" 0.01 ", 4), 0.01);
  EXPECT_THROW(parse_gamma("fast", 4), ParseError);
}

TEST(Runner, WritesOneArtifactPerRunAndSeed) {
  auto p = parse(kSmallPlan);
  p.output = fresh_dir("runner") / "out";
  const auto res = run_plan(p, fs::temp_directory_path(), false);
  ASSERT_EQ(res.runs.size(), 4u);
  std::size_t csv = 0, js = 0, other = 0;
  for (const auto& e : fs::directory_iterator(p.output)) {
    const auto ext = e.path().extension();
    if (e.path().filename() == "manifest.json") continue;
    if (ext == ".csv") ++csv;
    else if (ext == ".json") ++js;
    else ++other;
  }
  EXPECT_EQ(csv, 4u);
  EXPECT_EQ(js, 4u);
  EXPECT_EQ(other, 0u);
  EXPECT_TRUE(fs::exists(p.output / "topk_seed1.csv"));

  const auto man = nlohmann::json::parse(slurp(res.manifest));
  EXPECT_EQ(man["problem"]["n"], 4);
  EXPECT_EQ(man["problem"]["d"], 5);
  EXPECT_EQ(man["runs"].size(), 4u);
  EXPECT_TRUE(man["reference"]["accurate"].get<bool>());
  EXPECT_EQ(parse(man["plan"].get<std::string>()).runs.size(), 2u);

  const auto rec = nlohmann::json::parse(slurp(p.output / "ec-sgd_seed0.json"));
  EXPECT_EQ(rec["config"]["spec"]["method"], "ec-sgd");
  EXPECT_FALSE(rec["rows"].empty());
}

TEST(Runner, RerunIsByteIdentical) {
  auto p = parse(kSmallPlan);
  p.exec = Exec::kParallel;
  const fs::path root = fresh_dir("rerun");
  p.output = root / "a";
  const auto a = run_plan(p, root, false);
  p.output = root / "b";
  const auto b = run_plan(p, root, false);
  ASSERT_EQ(a.runs.size(), b.runs.size());
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    EXPECT_EQ(slurp(a.runs[i].csv), slurp(b.runs[i].csv));
    EXPECT_EQ(slurp(a.runs[i].json), slurp(b.runs[i].json));
  }
}

TEST(Runner, ConfigErrorsSurfaceBeforeAnyRun) {
  auto p = parse(kSmallPlan);
  p.output = fresh_dir("badcfg") / "out";
  p.runs[1].batch = 11;  // m = 10
  EXPECT_THROW(run_plan(p, fs::temp_directory_path(), false), ConfigError);
  EXPECT_FALSE(fs::exists(p.output));
}

TEST(Presets, Fig2SyntheticStallsWithoutShift) {
  auto p = make_preset("fig2-synthetic");
  p.output = fresh_dir("fig2") / "out";
  const auto res = run_plan(p, fs::temp_directory_path(), false);
  ASSERT_EQ(res.runs.size(), 3u);
  for (const auto& r : res.runs) {
    if (r.label == "ec-gd") EXPECT_GT(r.final_f_gap, 1e-6);
    else EXPECT_LT(r.final_f_gap, 1e-10) << r.label;
  }
}

TEST(Presets, ContentsAndNames) {
  const auto f1 = make_preset("fig1-a9a");
  EXPECT_EQ(f1.problem.source, "a9a");
  EXPECT_EQ(f1.problem.max_rows, 32000u);
  EXPECT_EQ(f1.init, InitMode::kGap10);
  ASSERT_EQ(f1.runs.size(), 4u);
  EXPECT_EQ(f1.runs[3].method, "ec-lsvrg-diana");
  EXPECT_EQ(make_method(f1.runs[0].method, 1600, 123).compressor, ContractiveCompressor::top_k(2));

  const auto s = make_preset("fig1-synthetic", 10);
  EXPECT_EQ(s.problem.workers, 10u);
  EXPECT_EQ(s.problem.rows_per_worker, 100u);
  EXPECT_EQ(preset_names().size(), 2u + 2 * known_datasets().size());
  EXPECT_THROW(make_preset("fig3-a9a"), ConfigError);
  EXPECT_THROW(make_preset("fig1-iris"), ConfigError);
}

TEST(Presets, MushroomsShapeFromCachedFile) {
  const fs::path cache = fresh_dir("mush");
  std::ofstream(cache / "mushrooms") << mushrooms_like(8124);
  const auto plan = make_preset("fig2-mushrooms");
  const Problem prob = build_problem(plan.problem, cache, false);
  EXPECT_EQ(prob.n(), 20u);
  EXPECT_EQ(prob.num_rows(), 8000u);
  EXPECT_EQ(prob.m(), 400u);
  EXPECT_EQ(prob.d(), 112u);
  EXPECT_GT(prob.mu(), 0.0);
}

TEST(Fetch, CachedFileNeedsNoNetwork) {
  const fs::path cache = fresh_dir("cached");
  std::ofstream(cache / "phishing") << "1 1:1\n";
  ::setenv("EFSGD_DATASET_URL", "http://127.0.0.1:1", 1);
  EXPECT_EQ(fetch_dataset("phishing", cache, true), cache / "phishing");
  ::unsetenv("EFSGD_DATASET_URL");
}

TEST(Fetch, MissingFileWithoutFetchNamesThePath) {
  const fs::path cache = fresh_dir("missing");
  try {
    fetch_dataset("madelon", cache, false);
    FAIL() << "expected DatasetError";
  } catch (const DatasetError& e) {
    EXPECT_NE(std::string(e.what()).find((cache / "madelon").string()), std::string::npos);
  }
  EXPECT_THROW(fetch_dataset("iris", cache, true), DatasetError);
}

TEST(Fetch, DownloadsFromHttpServer) {
  httplib::Server srv;
  const std::string body = "+1 1:0.5 3:1\n-1 2:1\n";
  srv.Get("/binary/w8a", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(body, "text/plain");
  });
  const int port = srv.bind_to_any_port("127.0.0.1");
  std::thread th([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();

  const fs::path cache = fresh_dir("http");
  ::setenv("EFSGD_DATASET_URL", ("http://127.0.0.1:" + std::to_string(port) + "/binary/").c_str(), 1);
  const auto path = fetch_dataset("w8a", cache, true);
  EXPECT_EQ(slurp(path), body);
  // A missing remote file is an error and leaves nothing behind.
  EXPECT_THROW(fetch_dataset("a9a", cache, true), DatasetError);
  EXPECT_FALSE(fs::exists(cache / "a9a"));
  EXPECT_FALSE(fs::exists(cache / "a9a.part"));
  ::unsetenv("EFSGD_DATASET_URL");
  srv.stop();
  th.join();
}

TEST(Fetch, FileUrlAndBzip2) {
  const fs::path src = fresh_dir("filesrc");
  const std::string body = "1 1:1\n2 2:1\n";
  std::ofstream(src / "madelon") << body;
  std::ofstream(src / "gisette_scale") << body;
  ASSERT_EQ(std::system(("bzip2 -k '" + (src / "gisette_scale").string() + "'").c_str()), 0);

  const fs::path cache = fresh_dir("filecache");
  ::setenv("EFSGD_DATASET_URL", ("file://" + src.string()).c_str(), 1);
  EXPECT_EQ(slurp(fetch_dataset("madelon", cache, true)), body);
  EXPECT_EQ(slurp(fetch_dataset("gisette", cache, true)), body);
  EXPECT_THROW(fetch_dataset("w8a", cache, true), DatasetError);
  ::unsetenv("EFSGD_DATASET_URL");
}
