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

// efsgd: run experiment plans, expand presets, evaluate stepsize bounds and
// solve reference problems.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>

#include "efsgd/errors.hpp"
#include "efsgd/experiment.hpp"
#include "efsgd/theory.hpp"

using json = nlohmann::ordered_json;
using namespace efsgd;

namespace {

// JSON has no infinity or NaN; such values are written as strings.
json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json params_json(const AssumptionParams& a) {
  return {{"A", num(a.A)},         {"A_tilde", num(a.A_tilde)},   {"A_prime", num(a.A_prime)},
          {"B1", num(a.B1)},       {"B1_tilde", num(a.B1_tilde)}, {"B1_prime", num(a.B1_prime)},
          {"B2", num(a.B2)},       {"B2_tilde", num(a.B2_tilde)}, {"B2_prime", num(a.B2_prime)},
          {"C1", num(a.C1)},       {"C2", num(a.C2)},             {"rho1", num(a.rho1)},
          {"rho2", num(a.rho2)},   {"G", num(a.G)}};
}

TheoryConstants parse_constants(const std::vector<std::string>& kv) {
  TheoryConstants c;
  const std::map<std::string, double*> fields = {
      {"L", &c.L},         {"Lexp", &c.Lexp},     {"mu", &c.mu},       {"delta", &c.delta},
      {"omega", &c.omega}, {"omega2", &c.omega2}, {"alpha", &c.alpha}, {"p", &c.p},
      {"tau", &c.tau},     {"n", &c.n},           {"m", &c.m}};
  for (const auto& item : kv) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("constant '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    if (key == "regime") {
      if (val == "convex") c.regime = Regime::kConvex;
      else if (val == "strong") c.regime = Regime::kStronglyConvex;
      else throw ConfigError("regime must be convex or strong");
      continue;
    }
    auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError("unknown constant '" + key + "'");
    std::size_t used = 0;
    *it->second = std::stod(val, &used);
    if (used != val.size()) throw ConfigError("bad value for '" + key + "'");
  }
  return c;
}

int cmd_run(const std::string& plan_path, bool fetch) {
  const ExperimentPlan plan = load_plan(plan_path);
  const PlanResult res = run_plan(plan, default_cache_dir(), fetch);
  for (const auto& r : res.runs)
    std::printf("%-20s seed %-4llu f_gap %.6e  %6.2fs  %s\n", r.label.c_str(),
                static_cast<unsigned long long>(r.seed), r.final_f_gap, r.seconds,
                r.csv.string().c_str());
  std::printf("manifest: %s\n", res.manifest.string().c_str());
  return 0;
}

int cmd_preset(const std::string& name, bool fetch, std::size_t workers, bool print_only,
               const std::string& output) {
  ExperimentPlan plan = make_preset(name, workers);
  if (!output.empty()) plan.output = output;
  if (print_only) {
    std::cout << plan_to_text(plan);
    return 0;
  }
  const PlanResult res = run_plan(plan, default_cache_dir(), fetch);
  for (const auto& r : res.runs)
    std::printf("%-20s seed %-4llu f_gap %.6e  %s\n", r.label.c_str(),
                static_cast<unsigned long long>(r.seed), r.final_f_gap, r.csv.string().c_str());
  std::printf("manifest: %s\n", res.manifest.string().c_str());
  return 0;
}

int cmd_stepsize(const std::string& method, const std::vector<std::string>& kv) {
  const TheoryConstants c = parse_constants(kv);
  const StepsizeReport r = max_stepsize(method, c);
  json cons = json::array();
  for (const auto& con : r.constraints) cons.push_back({{"term", con.label}, {"value", num(con.value)}});
  json out = {{"method", r.method},
              {"gamma_max", num(r.gamma_max)},
              {"constraints", cons},
              {"singular", r.singular ? json(*r.singular) : json(nullptr)},
              {"generic_gamma_max", num(r.generic_gamma_max)},
              {"params", params_json(r.params)},
              {"M1", num(r.lyapunov.M1)},
              {"M2", num(r.lyapunov.M2)},
              {"eta", num(r.lyapunov.eta)},
              {"stated_M1", r.stated_M1 ? num(*r.stated_M1) : json(nullptr)},
              {"stated_M2", r.stated_M2 ? num(*r.stated_M2) : json(nullptr)},
              {"lyapunov_mismatch", r.lyapunov_mismatch}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_solve_ref(const ProblemConfig& pc, bool fetch, const std::string& xstar_out) {
  const Problem prob = build_problem(pc, default_cache_dir(), fetch);
  const ReferenceSolution ref = solve_reference(prob, pc.ref_tol, pc.ref_max_iter);
  json out = {{"problem", prob.name()},
              {"n", prob.n()},
              {"m", prob.m()},
              {"d", prob.d()},
              {"mu", prob.mu()},
              {"L", prob.L()},
              {"lambda_max", prob.lambda_max()},
              {"lmax_component", prob.lmax_component()},
              {"f_star", ref.f_star},
              {"achieved_grad_norm", ref.achieved_grad_norm},
              {"tolerance", ref.tolerance},
              {"iterations", ref.iterations},
              {"accurate", ref.accurate()}};
  if (!xstar_out.empty()) {
    std::ofstream f(xstar_out);
    char buf[32];
    for (double v : ref.x_star) {
      std::snprintf(buf, sizeof buf, "%.17g\n", v);
      f << buf;
    }
  }
  std::cout << out.dump(2) << "\n";
  return ref.accurate() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"error-feedback and delayed compressed SGD laboratory"};
  app.require_subcommand(1);

  bool fetch = false;
  std::string plan_path;
  auto* run = app.add_subcommand("run", "execute a plan file");
  run->add_option("plan", plan_path, "plan file")->required()->check(CLI::ExistingFile);
  run->add_flag("--fetch", fetch, "download missing datasets");

  std::string preset;
  std::size_t workers = 0;
  bool print_only = false;
  std::string output;
  auto* pre = app.add_subcommand("preset", "run or print a built-in plan");
  pre->add_option("name", preset, "preset name");
  pre->add_flag("--fetch", fetch, "download missing datasets");
  pre->add_option("--workers", workers, "number of workers (20 or 100 in the reference setup)");
  pre->add_flag("--print", print_only, "print the plan instead of running it");
  pre->add_option("--output", output, "output directory");
  bool list = false;
  pre->add_flag("--list", list, "list preset names");

  std::string method;
  std::vector<std::string> constants;
  auto* ss = app.add_subcommand("stepsize", "print the parameter row and maximal stepsize as JSON");
  ss->add_option("method", method, "method name")->required();
  ss->add_option("constants", constants,
                 "key=value among L Lexp mu delta omega omega2 alpha p tau n m regime");

  ProblemConfig pc;
  std::string mu_text = "default";
  std::string xstar_out;
  auto* sr = app.add_subcommand("solve-ref", "solve a problem to high accuracy and print f*");
  sr->add_option("problem", pc.source, "synthetic, a dataset name or file:<path>")->required();
  sr->add_option("--workers", pc.workers, "number of workers");
  sr->add_option("--rows-per-worker", pc.rows_per_worker, "synthetic shard size");
  sr->add_option("--dim", pc.dim, "synthetic dimension");
  sr->add_option("--seed", pc.seed, "problem seed");
  sr->add_option("--max-rows", pc.max_rows, "row limit before splitting");
  sr->add_option("--mu", mu_text, "regularization or 'default'");
  sr->add_option("--tol", pc.ref_tol, "gradient-norm tolerance");
  sr->add_option("--max-iter", pc.ref_max_iter, "iteration cap");
  sr->add_option("--xstar", xstar_out, "write x* to this file");
  sr->add_flag("--fetch", fetch, "download missing datasets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(plan_path, fetch);
    if (*pre) {
      if (list) {
        for (const auto& n : preset_names()) std::cout << n << "\n";
        return 0;
      }
      if (preset.empty()) throw ConfigError("preset name required (see --list)");
      return cmd_preset(preset, fetch, workers, print_only, output);
    }
    if (*ss) return cmd_stepsize(method, constants);
    if (*sr) {
      if (mu_text != "default") pc.mu = std::stod(mu_text);
      if (const auto* ds = find_dataset(pc.source); ds && pc.max_rows == 0) pc.max_rows = ds->rows;
      return cmd_solve_ref(pc, fetch, xstar_out);
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
