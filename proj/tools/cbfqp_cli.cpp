// Copyright 2026 The cbfqp Authors
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

// Command-line front end: run, compare and verify scenario fixtures.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cbfqp/errors.hpp"
#include "cbfqp/scenario_io.hpp"

namespace fs = std::filesystem;
using namespace cbfqp;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitError = 1;
constexpr int kExitViolation = 2;

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Accepts a path or the name of a shipped fixture.
std::string resolve(const std::string& arg) {
  if (fs::exists(arg)) return arg;
  const fs::path candidate = fs::path(io::fixture_dir()) / (arg + ".scenario");
  if (fs::exists(candidate)) return candidate.string();
  throw ConfigError(arg + ": no such file or fixture");
}

io::ScenarioFile load(const std::string& arg,
                      const std::vector<std::string>& overrides,
                      const std::optional<double>& dt,
                      const std::optional<double>& horizon) {
  io::ScenarioFile file = io::ScenarioFile::load(resolve(arg));
  for (const auto& o : overrides) file.apply_override(o);
  if (dt) file.set("sim", "dt", exact(*dt));
  if (horizon) file.set("sim", "horizon", exact(*horizon));
  return file;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

struct Options {
  std::vector<std::string> paths;
  std::string out;
  std::optional<double> dt;
  std::optional<double> horizon;
  std::vector<std::string> overrides;
  int refine = 0;
};

int cmd_run(const Options& opt) {
  int code = kExitPass;
  for (const auto& path : opt.paths) {
    const io::ScenarioFile file = load(path, opt.overrides, opt.dt, opt.horizon);
    const io::BuiltScenario built = io::build_scenario(file);
    for (const auto& n : built.notices) std::cerr << "notice: " << n << "\n";

    const auto start = std::chrono::steady_clock::now();
    const Trajectory traj = run(built.scenario);
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    const io::RunReport rep = io::make_report(traj, secs);
    std::cout << io::report_text(rep);

    if (!opt.out.empty()) {
      fs::create_directories(opt.out);
      const fs::path base = fs::path(opt.out) / built.scenario.id;
      std::ofstream csv(base.string() + ".csv");
      if (!csv) throw ConfigError("cannot write " + base.string() + ".csv");
      io::write_csv(traj, csv);
      write_file(base.string() + ".report.txt", io::report_text(rep));
      write_file(base.string() + ".report.json", io::report_json(rep) + "\n");
    }

    if (opt.refine > 1) {
      const RefineReport ref = refine_check(built.scenario, opt.refine);
      std::cout << "  refine x" << ref.factor << ": max state deviation "
                << ref.max_state_deviation << ", verdicts "
                << (ref.verdicts_unchanged ? "unchanged" : "CHANGED") << "\n";
      for (const auto& m : ref.changed_monitors) {
        std::cout << "    changed: " << m << "\n";
      }
    }
    if (!rep.pass()) code = kExitViolation;
  }
  return code;
}

int cmd_compare(const Options& opt) {
  if (opt.paths.size() < 2) throw ConfigError("compare needs at least two inputs");
  std::vector<std::pair<std::string, io::CsvTable>> tables;
  for (const auto& path : opt.paths) {
    if (fs::path(path).extension() == ".csv") {
      std::ifstream in(path);
      if (!in) throw ConfigError(path + ": cannot open");
      tables.emplace_back(path, io::read_csv(in));
    } else {
      const io::BuiltScenario built =
          io::build_scenario(load(path, opt.overrides, opt.dt, opt.horizon));
      tables.emplace_back(built.scenario.id,
                          io::to_table(run(built.scenario)));
    }
  }
  std::vector<io::Comparison> cmps;
  for (std::size_t i = 1; i < tables.size(); ++i) {
    cmps.push_back(io::compare_tables(tables[0].first, tables[0].second,
                                      tables[i].first, tables[i].second));
  }
  const std::string text = io::comparison_text(cmps);
  std::cout << text;
  if (!opt.out.empty()) {
    fs::create_directories(opt.out);
    write_file(fs::path(opt.out) / "comparison.txt", text);
  }
  return kExitPass;
}

int cmd_verify(const Options& opt) {
  for (const auto& path : opt.paths) {
    const io::VerifyReport rep =
        io::run_verification(load(path, opt.overrides, opt.dt, opt.horizon));
    std::cout << rep.text;
    for (const auto& w : rep.warnings) std::cout << "warning: " << w << "\n";
    if (!opt.out.empty()) {
      fs::create_directories(opt.out);
      write_file(fs::path(opt.out) / (rep.id + ".verify.json"), rep.json + "\n");
    }
  }
  return kExitPass;
}

int cmd_list() {
  const std::string dir = io::fixture_dir();
  std::cout << "fixtures in " << dir << ":\n";
  for (const auto& name : io::list_fixtures(dir)) {
    const io::ScenarioFile file =
        io::ScenarioFile::load((fs::path(dir) / (name + ".scenario")).string());
    std::cout << "  " << name << " ("
              << (io::fixture_kind(file) == io::FixtureKind::kSimulation
                      ? "run"
                      : "verify")
              << ")\n";
  }
  return kExitPass;
}

void add_common(CLI::App* cmd, Options& opt, bool sim_flags) {
  cmd->add_option("--out", opt.out, "Output directory");
  cmd->add_option("--set", opt.overrides, "Override key=value (repeatable)");
  if (sim_flags) {
    cmd->add_option("--dt", opt.dt, "Integration step [s]")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--horizon", opt.horizon, "Simulated time [s]")
        ->check(CLI::NonNegativeNumber);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safety-filtered control simulator"};
  app.require_subcommand(1);
  Options opt;

  auto* run_cmd = app.add_subcommand("run", "Simulate scenarios, write CSV and reports");
  run_cmd->add_option("scenario", opt.paths, "Scenario files or fixture names")
      ->required();
  add_common(run_cmd, opt, true);
  run_cmd->add_option("--refine", opt.refine,
                      "Rerun at dt/N and check verdict stability");

  auto* cmp_cmd = app.add_subcommand("compare", "Compare trajectories (CSV or scenario)");
  cmp_cmd->add_option("inputs", opt.paths, "Two or more inputs")->required();
  add_common(cmp_cmd, opt, true);

  auto* ver_cmd = app.add_subcommand("verify", "Run sampling certificates");
  ver_cmd->add_option("scenario", opt.paths, "Verification fixtures")->required();
  add_common(ver_cmd, opt, false);

  auto* list_cmd = app.add_subcommand("list-fixtures", "List shipped fixtures");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitPass : kExitError;
  }

  try {
    if (*run_cmd) return cmd_run(opt);
    if (*cmp_cmd) return cmd_compare(opt);
    if (*ver_cmd) return cmd_verify(opt);
    if (*list_cmd) return cmd_list();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
