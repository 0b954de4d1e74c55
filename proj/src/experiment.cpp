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

#include "efsgd/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "efsgd/errors.hpp"
#include "efsgd/method.hpp"

namespace efsgd {

using json = nlohmann::ordered_json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& v, std::size_t line) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ParseError("expected a number, got '" + v + "'", line);
  return out;
}

std::uint64_t to_uint(const std::string& v, std::size_t line) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ParseError("expected a nonnegative integer, got '" + v + "'", line);
  return out;
}

bool to_bool(const std::string& v, std::size_t line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError("expected true or false, got '" + v + "'", line);
}

bool valid_label(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
  });
}

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

const char* loss_name(Loss l) { return l == Loss::kLogistic ? "logistic" : "least_squares"; }

}  // namespace

// ---------------------------------------------------------------------------
// Plan text

ExperimentPlan parse_plan(std::istream& in) {
  ExperimentPlan plan;
  std::set<std::string> labels;
  RunSpec* run = nullptr;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(std::string_view(raw).substr(0, hash));
    if (text.empty()) continue;

    if (text.front() == '[') {
      if (text.back() != ']') throw ParseError("unterminated section header", line);
      std::istringstream hs(text.substr(1, text.size() - 2));
      std::string kind, label, extra;
      hs >> kind >> label;
      if (kind != "run" || label.empty() || (hs >> extra))
        throw ParseError("section header must be [run LABEL]", line);
      if (!valid_label(label)) throw ParseError("run label '" + label + "' has unsafe characters", line);
      if (!labels.insert(label).second) throw ParseError("duplicate run label '" + label + "'", line);
      plan.runs.push_back({});
      run = &plan.runs.back();
      run->label = label;
      run->method = label;
      continue;
    }

    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line);
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string val = trim(std::string_view(text).substr(eq + 1));
    if (val.empty()) throw ParseError("empty value for '" + key + "'", line);

    if (run) {
      if (key == "method") run->method = val;
      else if (key == "gamma") run->gamma = val;
      else if (key == "alpha") run->alpha = to_double(val, line);
      else if (key == "p") run->p = to_double(val, line);
      else if (key == "tau") run->tau = to_uint(val, line);
      else if (key == "compressor") run->compressor = val;
      else if (key == "quantizer") run->quantizer = val;
      else if (key == "quantizer2") run->quantizer2 = val;
      else if (key == "batch") run->batch = to_uint(val, line);
      else if (key == "epochs") run->epochs = to_double(val, line);
      else throw ParseError("unknown run key '" + key + "'", line);
      continue;
    }

    auto& pc = plan.problem;
    if (key == "name") plan.name = val;
    else if (key == "problem") pc.source = val;
    else if (key == "workers") pc.workers = to_uint(val, line);
    else if (key == "rows_per_worker") pc.rows_per_worker = to_uint(val, line);
    else if (key == "dim") pc.dim = to_uint(val, line);
    else if (key == "problem_seed") pc.seed = to_uint(val, line);
    else if (key == "max_rows") pc.max_rows = to_uint(val, line);
    else if (key == "mu") pc.mu = val == "default" ? std::nullopt : std::optional(to_double(val, line));
    else if (key == "loss") {
      if (val == "logistic") pc.loss = Loss::kLogistic;
      else if (val == "least_squares") pc.loss = Loss::kLeastSquares;
      else throw ParseError("unknown loss '" + val + "'", line);
    } else if (key == "ref_tol") pc.ref_tol = to_double(val, line);
    else if (key == "ref_max_iter") pc.ref_max_iter = to_uint(val, line);
    else if (key == "seeds") {
      plan.seeds.clear();
      std::istringstream ss(val);
      std::string tok;
      while (ss >> tok) plan.seeds.push_back(to_uint(tok, line));
    } else if (key == "epochs") plan.epochs = to_double(val, line);
    else if (key == "record_every") plan.record_every = to_uint(val, line);
    else if (key == "init") {
      if (val == "zero") plan.init = InitMode::kZero;
      else if (val == "gap10") plan.init = InitMode::kGap10;
      else throw ParseError("init must be zero or gap10", line);
    } else if (key == "init_seed") plan.init_seed = to_uint(val, line);
    else if (key == "sigma") plan.sigma_diagnostics = to_bool(val, line);
    else if (key == "exec") {
      if (val == "parallel") plan.exec = Exec::kParallel;
      else if (val == "serial") plan.exec = Exec::kSerial;
      else throw ParseError("exec must be parallel or serial", line);
    } else if (key == "output") plan.output = val;
    else throw ParseError("unknown key '" + key + "'", line);
  }
  if (plan.runs.empty()) throw ParseError("plan has no [run ...] sections", line == 0 ? 1 : line);
  if (plan.seeds.empty()) throw ParseError("seeds must list at least one seed", line == 0 ? 1 : line);
  if (!(plan.epochs > 0.0)) throw ParseError("epochs must be positive", line == 0 ? 1 : line);
  for (const auto& r : plan.runs) {
    try {
      method_info(r.method);
    } catch (const ConfigError& e) {
      throw ParseError(std::string(e.what()) + " in run '" + r.label + "'", line);
    }
  }
  return plan;
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open plan file " + path.string());
  return parse_plan(in);
}

std::string plan_to_text(const ExperimentPlan& plan) {
  std::ostringstream o;
  const auto& pc = plan.problem;
  o << "name = " << plan.name << "\n";
  o << "problem = " << pc.source << "\n";
  o << "workers = " << pc.workers << "\n";
  o << "rows_per_worker = " << pc.rows_per_worker << "\n";
  o << "dim = " << pc.dim << "\n";
  o << "problem_seed = " << pc.seed << "\n";
  o << "max_rows = " << pc.max_rows << "\n";
  o << "mu = " << (pc.mu ? fmt(*pc.mu) : std::string("default")) << "\n";
  o << "loss = " << loss_name(pc.loss) << "\n";
  o << "ref_tol = " << fmt(pc.ref_tol) << "\n";
  o << "ref_max_iter = " << pc.ref_max_iter << "\n";
  o << "seeds =";
  for (auto s : plan.seeds) o << ' ' << s;
  o << "\n";
  o << "epochs = " << fmt(plan.epochs) << "\n";
  o << "record_every = " << plan.record_every << "\n";
  o << "init = " << (plan.init == InitMode::kZero ? "zero" : "gap10") << "\n";
  o << "init_seed = " << plan.init_seed << "\n";
  o << "sigma = " << (plan.sigma_diagnostics ? "true" : "false") << "\n";
  o << "exec = " << (plan.exec == Exec::kParallel ? "parallel" : "serial") << "\n";
  o << "output = " << plan.output.string() << "\n";
  for (const auto& r : plan.runs) {
    o << "\n[run " << r.label << "]\n";
    o << "method = " << r.method << "\n";
    if (r.gamma) o << "gamma = " << *r.gamma << "\n";
    if (r.alpha) o << "alpha = " << fmt(*r.alpha) << "\n";
    if (r.p) o << "p = " << fmt(*r.p) << "\n";
    if (r.tau) o << "tau = " << *r.tau << "\n";
    if (r.compressor) o << "compressor = " << *r.compressor << "\n";
    if (r.quantizer) o << "quantizer = " << *r.quantizer << "\n";
    if (r.quantizer2) o << "quantizer2 = " << *r.quantizer2 << "\n";
    if (r.batch) o << "batch = " << *r.batch << "\n";
    if (r.epochs) o << "epochs = " << fmt(*r.epochs) << "\n";
  }
  return o.str();
}

// ---------------------------------------------------------------------------
// Presets

namespace {

// Desk-scale epoch budgets.
constexpr double kSyntheticEpochs = 500;
constexpr double kDatasetEpochs = 100;

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out{"fig1-synthetic", "fig2-synthetic"};
  for (const char* fig : {"fig1-", "fig2-"})
    for (const auto& ds : known_datasets()) out.push_back(fig + std::string(ds.name));
  return out;
}

ExperimentPlan make_preset(std::string_view name, std::size_t workers) {
  const bool fig1 = name.starts_with("fig1-");
  const bool fig2 = name.starts_with("fig2-");
  if (!fig1 && !fig2) throw ConfigError("unknown preset '" + std::string(name) + "'");
  const std::string target(name.substr(5));

  ExperimentPlan plan;
  plan.name = std::string(name);
  plan.output = std::filesystem::path("out") / plan.name;
  if (target == "synthetic") {
    plan.problem.source = "synthetic";
    plan.epochs = kSyntheticEpochs;
  } else if (const auto* ds = find_dataset(target)) {
    plan.problem.source = target;
    plan.problem.max_rows = ds->rows;
    plan.epochs = kDatasetEpochs;
    plan.init = InitMode::kGap10;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  if (workers > 0) {
    plan.problem.workers = workers;
    if (target == "synthetic") plan.problem.rows_per_worker = std::max<std::size_t>(1, 1000 / workers);
  }

  std::vector<std::string> methods = fig1
      ? std::vector<std::string>{"ec-sgd", "ec-sgd-diana", "ec-lsvrg", "ec-lsvrg-diana"}
      : std::vector<std::string>{"ec-gd", "ec-gdstar", "ec-gd-diana"};
  for (const auto& m : methods) {
    RunSpec r;
    r.label = m;
    r.method = m;
    r.gamma = "1/L";
    plan.runs.push_back(std::move(r));
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Problem and run resolution

Problem build_problem(const ProblemConfig& cfg, const std::filesystem::path& cache_dir,
                      bool allow_network) {
  if (cfg.workers == 0) throw ConfigError("workers must be >= 1");
  if (cfg.source == "synthetic") {
    SyntheticSpec s;
    s.n = cfg.workers;
    s.m = cfg.rows_per_worker;
    s.d = cfg.dim;
    s.seed = cfg.seed;
    if (cfg.loss != Loss::kLogistic) throw ConfigError("the synthetic instance is logistic");
    return Problem::synthetic(s, cfg.mu.value_or(-1.0));
  }

  std::filesystem::path path;
  std::string name;
  if (cfg.source.starts_with("file:")) {
    path = cfg.source.substr(5);
    name = path.filename().string();
  } else {
    path = fetch_dataset(cfg.source, cache_dir, allow_network);
    name = cfg.source;
  }
  const Dataset ds = load_libsvm(path, name);
  const auto shards = shard_dataset(ds, cfg.workers, cfg.seed, 0.0, cfg.max_rows);
  double mu = 0.0;
  if (cfg.mu) {
    mu = *cfg.mu;
  } else {
    // The default rule is evaluated on the rows actually kept.
    std::vector<std::size_t> order;
    for (const auto& s : shards) order.insert(order.end(), s.rows.begin(), s.rows.end());
    const auto pw = power_iteration(ds.features.select_rows(order));
    mu = default_mu(pw.lambda_max, order.size());
  }
  return Problem::from_shards(ds, shards, mu, cfg.loss);
}

double parse_gamma(std::string_view text, double L) {
  const std::string t = trim(text);
  if (t.ends_with("/L")) {
    const std::string c = t.substr(0, t.size() - 2);
    return to_double(c.empty() ? std::string("1") : c, 0) / L;
  }
  return to_double(t, 0);
}

RunConfig resolve_run(const RunSpec& run, const ExperimentPlan& plan, const Problem& prob,
                      std::uint64_t seed, std::span<const double> x0) {
  RunConfig cfg;
  MethodSpec& s = cfg.spec;
  s = make_method(run.method, prob.m(), prob.d());
  try {
    s.gamma = parse_gamma(run.gamma.value_or("1/L"), prob.L());
  } catch (const ParseError&) {
    throw ConfigError(run.label + ": bad gamma '" + run.gamma.value_or("") + "'");
  }
  if (run.compressor) s.compressor = ContractiveCompressor::parse(*run.compressor);
  if (run.quantizer) {
    s.quantizer = UnbiasedQuantizer::parse(*run.quantizer);
    if (s.has_shift()) s.alpha = 1.0 / (s.quantizer.omega(prob.d()) + 1.0);
  }
  if (run.quantizer2) s.quantizer2 = UnbiasedQuantizer::parse(*run.quantizer2);
  if (run.alpha) s.alpha = *run.alpha;
  if (run.p) s.p = *run.p;
  if (run.tau) s.tau = *run.tau;
  if (run.batch) s.batch = *run.batch;
  s.validate(prob.d(), prob.m());

  cfg.seed = seed;
  cfg.iterations = iterations_for_epochs(prob, s, run.epochs.value_or(plan.epochs));
  cfg.record_every = plan.record_every > 0 ? plan.record_every
                                           : std::max<std::size_t>(1, cfg.iterations / 200);
  cfg.sigma_diagnostics = plan.sigma_diagnostics;
  cfg.exec = plan.exec;
  cfg.x0.assign(x0.begin(), x0.end());
  return cfg;
}

// ---------------------------------------------------------------------------
// Execution

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

json spec_json(const MethodSpec& s) {
  return {{"method", s.name},
          {"family", std::string(family_name(s.family))},
          {"gamma", s.gamma},
          {"alpha", s.alpha},
          {"p", s.p},
          {"tau", s.tau},
          {"compressor", s.compressor.name()},
          {"quantizer", s.quantizer.name()},
          {"quantizer2", s.quantizer2.name()},
          {"batch", s.batch},
          {"float_bits", s.float_bits}};
}

json config_json(const RunConfig& c) {
  return {{"spec", spec_json(c.spec)},
          {"seed", c.seed},
          {"iterations", c.iterations},
          {"record_every", c.record_every},
          {"sigma_diagnostics", c.sigma_diagnostics}};
}

json trace_json(const RunTrace& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"k", r.k},
                    {"f_gap", r.f_gap},
                    {"dist2", r.dist2},
                    {"bits_up", r.bits_up},
                    {"bits_down", r.bits_down},
                    {"grad_evals", r.grad_evals},
                    {"sigma1_sq", r.sigma1_sq ? json(*r.sigma1_sq) : json(nullptr)},
                    {"sigma2_sq", r.sigma2_sq ? json(*r.sigma2_sq) : json(nullptr)}});
  }
  return rows;
}

}  // namespace

PlanResult run_plan(const ExperimentPlan& plan, const std::filesystem::path& cache_dir,
                    bool allow_network) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  auto seconds_since = [](clock::time_point t) {
    return std::chrono::duration<double>(clock::now() - t).count();
  };

  const Problem prob = build_problem(plan.problem, cache_dir, allow_network);
  const auto t_ref = clock::now();
  const ReferenceSolution ref =
      solve_reference(prob, plan.problem.ref_tol, plan.problem.ref_max_iter, plan.exec);
  const double ref_seconds = seconds_since(t_ref);
  const Vec x0 = initial_point(prob, ref, plan.init, plan.init_seed);

  // Resolve everything up front so configuration errors surface before any run.
  struct Job {
    const RunSpec* run;
    std::uint64_t seed;
    RunConfig cfg;
  };
  std::vector<Job> jobs;
  for (const auto& r : plan.runs) {
    for (auto seed : plan.seeds) {
      Job j{&r, seed, resolve_run(r, plan, prob, seed, x0)};
      if (j.cfg.spec.needs_reference()) ref.require_accurate(r.label);
      jobs.push_back(std::move(j));
    }
  }

  std::filesystem::create_directories(plan.output);
  PlanResult result;
  json runs = json::array();
  for (const auto& j : jobs) {
    const auto t0 = clock::now();
    const RunTrace trace = run(prob, ref, j.cfg);
    RunArtifact a;
    a.label = j.run->label;
    a.seed = j.seed;
    const std::string stem = a.label + "_seed" + std::to_string(j.seed);
    a.csv = plan.output / (stem + ".csv");
    a.json = plan.output / (stem + ".json");
    a.final_f_gap = trace.last().f_gap;
    a.seconds = seconds_since(t0);

    write_file_atomic(a.csv, trace_to_csv(trace));
    json rec = {{"label", a.label},
                {"problem", prob.name()},
                {"config", config_json(j.cfg)},
                {"columns", kTraceCsvHeader},
                {"rows", trace_json(trace)}};
    write_file_atomic(a.json, rec.dump(1) + "\n");

    runs.push_back({{"label", a.label},
                    {"seed", a.seed},
                    {"csv", a.csv.filename().string()},
                    {"json", a.json.filename().string()},
                    {"config", config_json(j.cfg)},
                    {"final_f_gap", a.final_f_gap},
                    {"final_epochs", trace.epochs(trace.last())},
                    {"wall_clock_seconds", a.seconds}});
    result.runs.push_back(std::move(a));
  }

  json manifest = {
      {"plan", plan_to_text(plan)},
      {"problem",
       {{"name", prob.name()},
        {"n", prob.n()},
        {"m", prob.m()},
        {"d", prob.d()},
        {"N", prob.num_rows()},
        {"loss", loss_name(prob.loss_kind())},
        {"mu", prob.mu()},
        {"L", prob.L()},
        {"lambda_max", prob.lambda_max()},
        {"lmax_component", prob.lmax_component()}}},
      {"reference",
       {{"f_star", ref.f_star},
        {"achieved_grad_norm", ref.achieved_grad_norm},
        {"tolerance", ref.tolerance},
        {"iterations", ref.iterations},
        {"accurate", ref.accurate()},
        {"wall_clock_seconds", ref_seconds}}},
      {"x0_norm", vec::norm2(x0)},
      {"runs", runs},
      {"wall_clock_seconds", seconds_since(t_start)}};
  result.manifest = plan.output / "manifest.json";
  write_file_atomic(result.manifest, manifest.dump(1) + "\n");
  return result;
}

}  // namespace efsgd
