// Copyright (C) 2026 epichart contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Exit codes: 0 on success, 1 for runtime
// failures (including partial ensemble failures), 2 for configuration
// problems (bad scenario file, bad arguments).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "epichart/pertussis/pack.hpp"
#include "epichart/scenario/config.hpp"
#include "epichart/scenario/ensemble.hpp"
#include "epichart/varicella/pack.hpp"
#include "epichart/version.hpp"

namespace {

using epichart::scenario::PackKind;
using epichart::scenario::RunOptions;
using epichart::scenario::ScenarioConfig;
using epichart::scenario::ScenarioError;

uint32_t jobs_from_env() {
  const char* env = std::getenv("ABM_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  unsigned long v = std::strtoul(env, &end, 10);
  if (end == env || *end != '\0' || v == 0 || v > 4096) {
    std::cerr << "warning: ignoring ABM_THREADS=\"" << env << "\"\n";
    return 1;
  }
  return static_cast<uint32_t>(v);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int cmd_run(const std::string& scenario_path, const std::string& out_dir,
            bool has_seed, uint64_t seed, bool has_realizations,
            uint32_t realizations, bool has_jobs, uint32_t jobs,
            bool quiet) {
  std::string text = slurp(scenario_path);
  ScenarioConfig cfg =
      epichart::scenario::parse_scenario_text(text, scenario_path);
  if (has_seed) cfg.master_seed = seed;
  if (has_realizations) cfg.realizations = realizations;
  cfg.validate();

  RunOptions opt;
  opt.jobs = has_jobs ? jobs : jobs_from_env();
  opt.quiet = quiet;

  if (!quiet) {
    std::cout << "epichart " << epichart::kEngineVersion << ": "
              << cfg.name << " (" << pack_name(cfg.pack) << ", N="
              << cfg.population << ", " << cfg.arms().size() << " arms x "
              << cfg.realizations << " realizations, seed "
              << cfg.master_seed << ", jobs " << opt.jobs << ")\n";
  }

  auto result = epichart::scenario::run_ensemble(cfg, text, out_dir, opt);

  if (!quiet) {
    for (const auto& name : result.manifest["artifacts"]) {
      std::cout << "  wrote " << out_dir << "/"
                << name.get<std::string>() << "\n";
    }
    std::cout << "  wrote " << out_dir << "/manifest.json\n";
  }
  if (!result.ok) {
    for (const auto& f : result.manifest["failures"]) {
      std::cerr << "error: arm " << f["arm"].get<std::string>()
                << " realization " << f["realization"].get<uint32_t>()
                << ": " << f["error"].get<std::string>() << "\n";
    }
    std::cerr << "error: " << result.manifest["failures"].size()
              << " realization run(s) failed; affected realizations were "
                 "dropped from every arm\n";
    return 1;
  }
  return 0;
}

int cmd_validate(const std::string& scenario_path) {
  ScenarioConfig cfg = epichart::scenario::parse_scenario(scenario_path);
  std::cout << "ok: " << cfg.name << " (" << pack_name(cfg.pack) << ", N="
            << cfg.population << ", burn-in " << cfg.burn_in_years
            << "y, horizon " << cfg.horizon_years << "y, "
            << cfg.arms().size() << " arms x " << cfg.realizations
            << " realizations)\n";
  return 0;
}

int cmd_export_charts(const std::string& pack, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  auto write_chart = [&](const epichart::ChartDefinition& def,
                         const std::string& name) {
    std::ofstream os(fs::path(out_dir) / (name + ".dot"), std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + name + ".dot");
    def.write_dot(os);
    std::cout << "  wrote " << out_dir << "/" << name << ".dot\n";
  };

  epichart::Simulation sim(1, 0);
  if (pack == "varicella") {
    epichart::varicella::VaricellaParams params;
    epichart::DemographicsConfig demo;
    epichart::varicella::VzvPack p(sim, params, demo);
    write_chart(p.natural_history(), "natural_history");
    write_chart(p.adherence(), "adherence");
    write_chart(p.aging_female(), "aging_female");
    write_chart(p.aging_male(), "aging_male");
  } else if (pack == "pertussis") {
    epichart::pertussis::PertussisParams params;
    epichart::DemographicsConfig demo;
    epichart::pertussis::PertussisPack p(sim, params, demo);
    write_chart(p.infection(), "infection");
    write_chart(p.compliance(), "compliance");
    write_chart(p.fertility(), "fertility");
    write_chart(p.aging_female(), "aging_female");
    write_chart(p.aging_male(), "aging_male");
  } else {
    throw ScenarioError("unknown pack \"" + pack +
                        "\" (expected varicella or pertussis)");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"epichart: agent-based epidemic simulation"};
  app.set_version_flag("--version", epichart::kEngineVersion);
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir;
  uint64_t seed = 0;
  uint32_t realizations = 0;
  uint32_t jobs = 0;
  bool quiet = false;

  CLI::App* run = app.add_subcommand("run", "run a scenario ensemble");
  run->add_option("--scenario", scenario_path, "scenario JSON file")
      ->required();
  run->add_option("--out", out_dir, "output directory")->required();
  auto* seed_opt =
      run->add_option("--seed", seed, "override the scenario master seed");
  auto* real_opt = run->add_option("--realizations", realizations,
                                   "override the realization count")
                       ->check(CLI::PositiveNumber);
  auto* jobs_opt =
      run->add_option("--jobs", jobs, "worker threads (ABM_THREADS fallback)")
          ->check(CLI::PositiveNumber);
  run->add_flag("--quiet", quiet, "suppress progress output");

  CLI::App* validate =
      app.add_subcommand("validate", "check a scenario file");
  std::string validate_path;
  validate->add_option("--scenario", validate_path, "scenario JSON file")
      ->required();

  CLI::App* charts = app.add_subcommand(
      "export-charts", "write statechart structure as Graphviz dot files");
  std::string pack_arg;
  std::string charts_out;
  charts->add_option("--pack", pack_arg, "varicella or pertussis")
      ->required();
  charts->add_option("--out", charts_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // --help exits cleanly, bad usage is config
  }

  try {
    if (run->parsed()) {
      return cmd_run(scenario_path, out_dir, static_cast<bool>(*seed_opt),
                     seed, static_cast<bool>(*real_opt), realizations,
                     static_cast<bool>(*jobs_opt), jobs, quiet);
    }
    if (validate->parsed()) {
      return cmd_validate(validate_path);
    }
    if (charts->parsed()) {
      return cmd_export_charts(pack_arg, charts_out);
    }
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
