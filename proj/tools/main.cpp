/**
 * @file main.cpp
 * @brief Command line driver: run, study, validate, and info subcommands.
 *
 * Exit codes: 0 success, 2 configuration error, 3 solver failure,
 * 4 input/output failure.
 */
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <elastodyn/scenario.hpp>

namespace {

namespace ecli = elastodyn::cli;

/// Accept either a JSON config path or a bare built-in scenario name.
ecli::RunConfig load_any(const std::string &arg) {
  if (std::filesystem::exists(arg)) return ecli::load_config(arg);
  const auto names = ecli::scenario_names();
  if (std::find(names.begin(), names.end(), arg) != names.end())
    return ecli::parse_config(nlohmann::json{{"scenario", arg}});
  throw elastodyn::io_error("config file not found: " + arg);
}

void print_grid(const elastodyn::Grid &g) {
  std::cout << "grid: " << g.n[0] << " x " << g.n[1] << " x " << g.n[2]
            << " voxels, " << g.length[0] << " x " << g.length[1] << " x "
            << g.length[2] << " m\n";
}

void print_report(const ecli::RunConfig &cfg,
                  const elastodyn::io::RunReport &r) {
  std::cout << "scenario: " << r.scenario << "\n";
  print_grid(r.grid);
  std::cout << "dt: " << r.dt << " s, steps: " << r.steps << "\n";
  int mb = 0, mf = 0;
  for (std::size_t i = 0; i < r.iters_b.size(); ++i) {
    mb = std::max(mb, r.iters_b[i]);
    mf = std::max(mf, r.iters_f[i]);
  }
  if (cfg.integrator == "implicit") {
    std::cout << "cg iterations, max per solve: force-free " << mb
              << ", force " << mf << "\n";
    std::cout << "influence matrix: "
              << (r.greens_cached ? "reloaded from cache" : "assembled")
              << " (content hash " << r.greens_hash << ")\n";
  }
  std::cout << "manifold max deviation: " << r.gamma_max_dev << "\n";
  if (r.final_error)
    std::cout << "final error vs analytic solution: " << *r.final_error
              << "\n";
  std::cout << "wall clock: total " << r.times.total << " s (preprocess "
            << r.times.preprocess << ", greens " << r.times.greens << ", step "
            << r.times.step << ", io " << r.times.io << ")\n";
  std::cout << "outputs in: " << cfg.output.directory << "\n";
}

void print_summary(const ecli::RunConfig &cfg) {
  const auto micro = ecli::build_microstructure(cfg);
  micro.validate();
  const auto gamma = ecli::build_manifold(cfg);
  gamma.validate(micro.grid);
  ecli::manifold_amplitudes(cfg, gamma);
  const double dt = ecli::resolve_dt(cfg, micro);
  const auto bound = elastodyn::integrate::stable_dt(micro);
  const int nsteps = static_cast<int>(std::floor(cfg.final_time / dt + 1e-9));
  std::cout << "scenario: " << (cfg.scenario.empty() ? "custom" : cfg.scenario)
            << "\n";
  print_grid(micro.grid);
  std::cout << "phases: " << micro.phases.size() << ", manifold dofs: "
            << gamma.size() << "\n";
  std::cout << "integrator: " << cfg.integrator << ", dt: " << dt
            << " s, steps: " << nsteps << "\n";
  std::cout << "stability bounds: fe " << bound.fe << " s, spectral "
            << bound.spectral << " s\n";
  const std::size_t flat =
      (micro.grid.is_1d() ? 1 : 3) * micro.grid.nvox() * sizeof(double);
  const std::size_t n = gamma.size();
  // State plus solver scratch, and two dense square factors for the
  // influence matrix path; spectral scratch is of the same order.
  const std::size_t bytes =
      12 * flat + (cfg.integrator == "implicit" ? 2 * n * n * 8 : 0);
  std::cout << "approximate memory: " << bytes / (1024.0 * 1024.0) << " MiB\n";
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"elastic wave propagation in heterogeneous periodic voxel "
               "domains"};
  app.require_subcommand(1);

  std::string run_config, run_output, run_cache;
  auto *run = app.add_subcommand("run", "execute one configured run");
  run->add_option("config", run_config, "JSON config file or scenario name")
      ->required();
  run->add_option("--output", run_output, "override the output directory");
  run->add_option("--cache", run_cache,
                  "influence matrix cache file (reused when valid)");

  std::string study_config, study_output;
  std::vector<double> study_mults;
  auto *study =
      app.add_subcommand("study", "temporal convergence study over dt");
  study->add_option("config", study_config,
                    "JSON config file or scenario name")
      ->required();
  study
      ->add_option("--dts", study_mults,
                   "multiples of the base step, one run each")
      ->required()
      ->expected(-1);
  study->add_option("--output", study_output, "override the output directory");

  std::string val_config;
  auto *validate =
      app.add_subcommand("validate", "check a configuration without running");
  validate
      ->add_option("config", val_config, "JSON config file or scenario name")
      ->required();

  std::string info_config;
  auto *info = app.add_subcommand(
      "info", "summarize a configuration, or list built-in scenarios");
  info->add_option("config", info_config, "JSON config file or scenario name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      ecli::RunConfig cfg = load_any(run_config);
      if (!run_output.empty()) cfg.output.directory = run_output;
      if (!run_cache.empty()) cfg.greens_cache = run_cache;
      const auto rep = ecli::run_scenario(cfg);
      print_report(cfg, rep);
    } else if (study->parsed()) {
      ecli::RunConfig cfg = load_any(study_config);
      if (!study_output.empty()) cfg.output.directory = study_output;
      const auto res = ecli::convergence_study(cfg, study_mults);
      std::cout << "multiple,dt,error,wall\n";
      for (const auto &row : res.rows)
        std::cout << row.multiple << ',' << row.dt << ',' << row.error << ','
                  << row.wall << "\n";
      if (res.slope)
        std::cout << "fitted temporal order: " << *res.slope << "\n";
      else
        std::cout << "fitted temporal order: n/a (single run)\n";
      std::filesystem::create_directories(cfg.output.directory);
      std::ofstream f(cfg.output.directory + "/study.json");
      if (!f)
        throw elastodyn::io_error("cannot write study summary");
      f << res.to_json().dump(2) << '\n';
    } else if (validate->parsed()) {
      ecli::RunConfig cfg = load_any(val_config);
      cfg.validate();
      print_summary(cfg);
      std::cout << "configuration valid\n";
    } else {
      if (info_config.empty()) {
        std::cout << "built-in scenarios:\n";
        for (const auto &name : ecli::scenario_names())
          std::cout << "  " << name << "\n";
      } else {
        ecli::RunConfig cfg = load_any(info_config);
        cfg.validate();
        print_summary(cfg);
      }
    }
    return 0;
  } catch (const elastodyn::config_error &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const elastodyn::solver_error &e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const elastodyn::io_error &e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
