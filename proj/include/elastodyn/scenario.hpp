/**
 * @file scenario.hpp
 * @brief Built-in scenario presets and the end-to-end run driver.
 *
 * A preset is a complete JSON configuration; a user config that names a
 * scenario starts from the preset and overrides individual keys (RFC 7386
 * merge).  run_scenario executes a configuration and returns a report with
 * per-phase wall-clock times, solver statistics, and the oracle error when
 * one applies.
 */
#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "greens.hpp"
#include "integrate.hpp"
#include "io.hpp"
#include "oracle.hpp"
#include "spectral.hpp"

namespace elastodyn::cli {

/// Isotropic reference metals addressable from configs.
inline material::Isotropic lookup_metal(const std::string &name) {
  if (name == "Al") return material::metals::aluminum();
  if (name == "Fe") return material::metals::iron();
  if (name == "U") return material::metals::uranium();
  throw config_error("unknown material name: " + name +
                     " (known: Al, Fe, U)");
}

/// Cubic single crystals addressable from configs.
inline material::CubicCrystal lookup_crystal(const std::string &name) {
  if (name == "Ni") return material::metals::nickel();
  throw config_error("unknown crystal name: " + name + " (known: Ni)");
}

inline std::vector<std::string> scenario_names() {
  return {"1d_homogeneous_al",  "1d_layered_al_fe",   "1d_layered_al_u",
          "3d_plane_wave_p",    "3d_plane_wave_s",    "2d_circular",
          "2d_circular_framed", "3d_spherical",       "3d_spherical_framed",
          "polycrystal_long",   "polycrystal_short"};
}

/**
 * @brief Complete JSON configuration of a built-in scenario.
 *
 * Domain sizes are desk scale: large enough to resolve every feature the
 * scenario exercises, small enough that each preset runs in seconds to a
 * few minutes on a laptop.
 */
inline nlohmann::json scenario_preset(const std::string &name) {
  using nlohmann::json;
  const material::Isotropic al = material::metals::aluminum();
  json j;
  j["scenario"] = name;
  j["integrator"] = "implicit";
  j["tol"] = 1e-8;
  j["seed"] = 1;
  j["oracle"] = "none";
  j["output"] = {{"directory", "out/" + name},
                 {"stride", 25},
                 {"snapshots", true},
                 {"energy", true},
                 {"forces", true},
                 {"probes", json::array()}};

  auto rod = [&](int n, double len) {
    j["grid"] = {{"n", {n, 1, 1}}, {"lengths", {len, len / n, len / n}}};
    j["pulse"] = {{"amplitude", 1e-3},
                  {"alpha", 4},
                  {"omega", 5.0 * M_PI * al.c_bar() / len},
                  {"direction", {1.0, 0.0, 0.0}}};
    j["gamma"] = {{"type", "point"}, {"index", {0, 0, 0}}, {"components", {0}}};
    j["dt"] = {{"cfl_multiple", 10.0}, {"convention", "fe"}};
    j["output"]["probes"] = json::array({json::array({3 * n / 4, 0, 0})});
  };

  if (name == "1d_homogeneous_al") {
    rod(2187, 2.0);
    j["microstructure"] = {{"builder", "homogeneous"}, {"materials", {"Al"}}};
    j["final_time"] = 3.919e-4;
    j["oracle"] = "dalembert";
    return j;
  }
  if (name == "1d_layered_al_fe" || name == "1d_layered_al_u") {
    rod(2187, 2.0);
    const std::string other = name == "1d_layered_al_fe" ? "Fe" : "U";
    j["microstructure"] = {{"builder", "layered"},
                           {"materials", {"Al", other}},
                           {"axis", 0},
                           {"fractions", {0.0, 0.3, 0.6, 1.0}},
                           {"layer_materials", {0, 1, 0}}};
    j["final_time"] = 2.2e-4;
    j["oracle"] = "layered";
    return j;
  }
  if (name == "3d_plane_wave_p" || name == "3d_plane_wave_s") {
    const int n3 = 729, n2 = 27;
    const double len = 2.0, dx = len / n3;
    j["grid"] = {{"n", {1, n2, n3}}, {"lengths", {dx, n2 * dx, len}}};
    j["microstructure"] = {{"builder", "homogeneous"}, {"materials", {"Al"}}};
    const double omega = 5.0 * M_PI * al.c_bar() / len;
    const bool p_wave = name == "3d_plane_wave_p";
    j["pulse"] = {{"amplitude", 1e-3},
                  {"alpha", 4},
                  {"omega", omega},
                  {"direction", p_wave ? json::array({0.0, 0.0, 1.0})
                                       : json::array({1.0, 0.0, 0.0})}};
    j["gamma"] = {{"type", "plane"},
                  {"axis", 2},
                  {"plane_index", 0},
                  {"components", {0, 1, 2}}};
    j["dt"] = {{"cfl_multiple", 4.0}, {"convention", "fe"}};
    const double c = p_wave ? al.c_long() : al.c_shear();
    j["final_time"] = 0.5 * M_PI / omega + 0.70 * len / c;
    return j;
  }
  if (name == "2d_circular" || name == "2d_circular_framed") {
    const int n = 257;
    const double len = 1.0, h = len / n;
    j["grid"] = {{"n", {1, n, n}}, {"lengths", {h, len, len}}};
    if (name == "2d_circular")
      j["microstructure"] = {{"builder", "homogeneous"}, {"materials", {"Al"}}};
    else
      j["microstructure"] = {{"builder", "framed"},
                             {"materials", {"Al", "Fe"}},
                             {"inner_extent", {h, 0.39, 0.39}}};
    const double omega = 5.0 * M_PI * al.c_bar() / len;
    j["pulse"] = {{"amplitude", 1e-3},
                  {"alpha", 4},
                  {"omega", omega},
                  {"direction", {1.0, 0.0, 0.0}}};
    j["gamma"] = {{"type", "point"},
                  {"index", {0, n / 2, n / 2}},
                  {"components", {0}}};
    j["dt"] = {{"value", 2.0 * h / al.c_long()}};
    j["final_time"] = 0.41 * len / al.c_shear() + 0.5 * M_PI / omega;
    return j;
  }
  if (name == "3d_spherical" || name == "3d_spherical_framed") {
    const int n = 65;
    const double len = 1.0;
    j["grid"] = {{"n", {n, n, n}}, {"lengths", {len, len, len}}};
    if (name == "3d_spherical")
      j["microstructure"] = {{"builder", "homogeneous"}, {"materials", {"Al"}}};
    else
      j["microstructure"] = {{"builder", "framed"},
                             {"materials", {"Al", "Fe"}},
                             {"inner_extent", {0.62, 0.62, 0.62}}};
    const double omega = 5.0 * M_PI * al.c_bar() / len;
    j["pulse"] = {{"amplitude", 1e-3},
                  {"alpha", 4},
                  {"omega", omega},
                  {"direction", {0.0, 0.0, 1.0}}};
    j["gamma"] = {{"type", "point"},
                  {"index", {n / 2, n / 2, n / 2}},
                  {"components", {2}}};
    j["dt"] = {{"cfl_multiple", 1.0}, {"convention", "fe"}};
    j["final_time"] = 0.44 * len / al.c_shear() + 1.3 * M_PI / omega;
    j["output"]["stride"] = 20;
    return j;
  }
  if (name == "polycrystal_long" || name == "polycrystal_short") {
    const material::CubicCrystal ni = material::metals::nickel();
    // 10 um voxels, 100 um target grain diameter: the grain count makes
    // (pi/6) d^3 n_grains fill the domain volume.
    j["grid"] = {{"n", {17, 17, 279}},
                 {"lengths", {1.7e-4, 1.7e-4, 2.79e-3}}};
    j["microstructure"] = {{"builder", "voronoi"},
                           {"n_grains", 154},
                           {"crystal", "Ni"}};
    j["seed"] = 7;
    const double c = std::sqrt(ni.c11 / ni.rho);
    const double dbar = 1e-4;
    const double wavelengths = name == "polycrystal_long" ? 20.0 : 3.0;
    j["pulse"] = {{"amplitude", 1e-6},
                  {"alpha", 4},
                  {"omega", M_PI * c / (wavelengths * dbar)},
                  {"direction", {0.0, 0.0, 1.0}}};
    j["gamma"] = {{"type", "plane"},
                  {"axis", 2},
                  {"plane_index", 0},
                  {"components", {0, 1, 2}}};
    j["dt"] = {{"cfl_multiple", 10.0}, {"convention", "fe"}};
    j["final_time"] = name == "polycrystal_long" ? 8.0e-7 : 1.5e-7;
    j["output"]["stride"] = 10;
    return j;
  }
  std::string known;
  for (const auto &s : scenario_names()) known += " " + s;
  throw config_error("unknown scenario '" + name + "'; known:" + known);
}

/// Parse a config document, expanding a `scenario` preset if one is named.
inline RunConfig parse_config(const nlohmann::json &doc) {
  nlohmann::json j = doc;
  if (doc.contains("scenario") && doc.at("scenario").is_string() &&
      !doc.at("scenario").get<std::string>().empty()) {
    nlohmann::json merged = scenario_preset(doc.at("scenario"));
    merged.merge_patch(doc);
    j = std::move(merged);
  }
  return RunConfig::from_json(j);
}

inline RunConfig load_config(const std::string &path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open config: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception &e) {
    throw config_error("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

inline material::Microstructure build_microstructure(const RunConfig &cfg) {
  const MicroSpec &m = cfg.micro;
  auto phase = [&](std::size_t slot) {
    if (slot >= m.materials.size())
      throw config_error("microstructure references more materials than "
                         "were listed");
    return material::phase_of(lookup_metal(m.materials[slot]));
  };
  if (m.builder == "homogeneous")
    return material::build_homogeneous(cfg.grid, phase(0));
  if (m.builder == "layered") {
    std::vector<material::Phase> phases;
    for (const auto &name : m.materials)
      phases.push_back(material::phase_of(lookup_metal(name)));
    return material::build_layered(cfg.grid, m.axis, m.fractions,
                                   m.layer_materials, std::move(phases));
  }
  if (m.builder == "framed")
    return material::build_framed(cfg.grid, m.inner_extent, phase(0),
                                  phase(1));
  if (m.builder == "voronoi")
    return material::build_voronoi(cfg.grid, m.n_grains, cfg.seed,
                                   lookup_crystal(m.crystal));
  if (m.builder == "phase_map") {
    auto [g, map] = io::read_phase_map(m.path);
    if (!(g == cfg.grid))
      throw config_error("phase map grid differs from the config grid");
    material::Microstructure out;
    out.grid = g;
    out.phase = std::move(map);
    for (const auto &name : m.materials)
      out.phases.push_back(material::phase_of(lookup_metal(name)));
    return out;
  }
  throw config_error("unknown microstructure builder: " + m.builder);
}

inline greens::Manifold build_manifold(const RunConfig &cfg) {
  const GammaSpec &gs = cfg.gamma;
  std::vector<int> comps = gs.components;
  if (comps.empty()) comps = cfg.grid.is_1d() ? std::vector<int>{0}
                                              : std::vector<int>{0, 1, 2};
  if (cfg.grid.is_1d())
    for (int c : comps)
      if (c != 0)
        throw config_error("1d runs constrain displacement component 0 only");
  if (gs.type == "point")
    return greens::Manifold::point(cfg.grid, gs.index[0], gs.index[1],
                                   gs.index[2], comps);
  if (gs.type == "plane")
    return greens::Manifold::plane(cfg.grid, gs.axis, gs.plane_index, comps);
  return greens::Manifold::ball(cfg.grid, gs.index, gs.radius_voxels, comps);
}

/// One prescribed amplitude per manifold dof: the pulse direction component
/// belonging to the dof.  Zero entries pin their dof to rest.
inline std::vector<double> manifold_amplitudes(const RunConfig &cfg,
                                               const greens::Manifold &gamma) {
  std::vector<double> amp(gamma.size());
  for (std::size_t i = 0; i < amp.size(); ++i)
    amp[i] = cfg.pulse.direction[gamma.dofs[i].comp];
  return amp;
}

inline double resolve_dt(const RunConfig &cfg,
                         const material::Microstructure &micro) {
  if (cfg.dt.value > 0.0) return cfg.dt.value;
  const integrate::StableDt bound = integrate::stable_dt(micro);
  const double base =
      cfg.dt.convention == "fe" ? bound.fe : bound.spectral;
  return cfg.dt.cfl_multiple * base * cfg.dt.safety;
}

namespace detail_run {
inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}
} // namespace detail_run

/// Relative L2 error of the final state against the configured oracle.
inline double oracle_error(const RunConfig &cfg,
                           const material::Microstructure &micro,
                           const integrate::Stepper &st) {
  const Grid &g = micro.grid;
  if (!g.is_1d())
    throw config_error("analytic oracles cover 1d runs only");
  if (cfg.gamma.type != "point")
    throw config_error("analytic oracles require a point source");
  const integrate::Pulse pulse{cfg.pulse.amplitude, cfg.pulse.omega,
                               cfg.pulse.alpha};
  const double t = st.time();
  if (cfg.oracle == "dalembert") {
    if (micro.phases.size() != 1)
      throw config_error("the traveling-wave oracle requires a homogeneous "
                         "bar");
    const material::Phase &ph = micro.phases[0];
    const oracle::Wave1D w{pulse, std::sqrt(ph.young_iso() / ph.rho),
                           cfg.gamma.index[0]};
    return oracle::l2_error(st.displacement(), oracle::dalembert_field(w, t, g));
  }
  const MicroSpec &ms = cfg.micro;
  if (ms.builder != "layered" || ms.layer_materials.size() != 3 ||
      ms.fractions.size() != 4 ||
      ms.layer_materials[0] != ms.layer_materials[2] ||
      ms.layer_materials[0] == ms.layer_materials[1])
    throw config_error("the layered oracle requires an A|B|A bar");
  const material::Phase &A = micro.phases[ms.layer_materials[0]];
  const material::Phase &B = micro.phases[ms.layer_materials[1]];
  const double cA = std::sqrt(A.young_iso() / A.rho);
  const double cB = std::sqrt(B.young_iso() / B.rho);
  const oracle::LayeredWave1D w{pulse,
                                cA,
                                cB,
                                A.rho * cA,
                                B.rho * cB,
                                ms.fractions[1] * g.length[0],
                                ms.fractions[2] * g.length[0],
                                cfg.gamma.index[0]};
  return oracle::l2_error(st.displacement(), oracle::layered_field(w, t, g));
}

/**
 * @brief Execute one configured run end to end.
 *
 * Builds the microstructure, resolves the step size, assembles or reloads
 * the influence matrix (implicit runs), advances floor(final_time / dt)
 * steps, and writes snapshots, probes, forces, and report.json into the
 * output directory.
 */
inline io::RunReport run_scenario(const RunConfig &cfg) {
  using clock = std::chrono::steady_clock;
  using detail_run::seconds_since;
  const auto t_start = clock::now();
  cfg.validate();

  material::Microstructure micro = build_microstructure(cfg);
  micro.validate();
  const Grid &g = micro.grid;
  greens::Manifold gamma = build_manifold(cfg);
  gamma.validate(g);
  const std::vector<double> amp = manifold_amplitudes(cfg, gamma);
  const double dt = resolve_dt(cfg, micro);
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw config_error("resolved time step is not positive");
  const int nsteps = static_cast<int>(std::floor(cfg.final_time / dt + 1e-9));
  const integrate::Pulse pulse{cfg.pulse.amplitude, cfg.pulse.omega,
                               cfg.pulse.alpha};

  io::RunReport rep;
  rep.scenario = cfg.scenario.empty() ? "custom" : cfg.scenario;
  rep.grid = g;
  rep.dt = dt;
  rep.steps = nsteps;

  integrate::StepperOptions opt;
  opt.dt = dt;
  opt.tol = cfg.tol;
  opt.track_energy = cfg.output.energy;
  opt.record_forces = cfg.output.forces;

  try {
    std::filesystem::create_directories(cfg.output.directory);
  } catch (const std::filesystem::filesystem_error &e) {
    throw io_error("cannot create output directory: " + std::string(e.what()));
  }
  rep.times.preprocess = seconds_since(t_start);

  std::optional<greens::GreensMatrix> gm;
  if (cfg.integrator == "implicit") {
    const double beta = 0.25;
    const auto t_g = clock::now();
    const std::uint64_t want =
        greens::content_hash(micro, gamma, beta, dt, cfg.tol);
    if (!cfg.greens_cache.empty())
      gm = greens::GreensMatrix::load(cfg.greens_cache, want);
    if (gm) {
      rep.greens_cached = true;
    } else {
      gm = greens::GreensMatrix::assemble(micro, beta, dt, gamma, cfg.tol,
                                          cfg.resolved_greens_threads());
      if (!cfg.greens_cache.empty()) gm->save(cfg.greens_cache);
    }
    rep.greens_hash = gm->hash();
    rep.times.greens = seconds_since(t_g);
  }

  const auto t_build = clock::now();
  std::unique_ptr<integrate::Stepper> stepper;
  if (cfg.integrator == "implicit") {
    if (g.is_1d())
      stepper = std::make_unique<
          integrate::ImplicitStepper<spectral::Operator1D, spectral::Precond1D>>(
          micro, gamma, amp, pulse, *gm, opt);
    else
      stepper = std::make_unique<
          integrate::ImplicitStepper<spectral::Operator3D, spectral::Precond3D>>(
          micro, gamma, amp, pulse, *gm, opt);
  } else {
    if (g.is_1d())
      stepper =
          std::make_unique<integrate::ExplicitStepper<spectral::Operator1D>>(
              micro, gamma, amp, pulse, opt);
    else
      stepper =
          std::make_unique<integrate::ExplicitStepper<spectral::Operator3D>>(
              micro, gamma, amp, pulse, opt);
  }
  rep.times.preprocess += seconds_since(t_build);

  const int comps = g.is_1d() ? 1 : 3;
  const auto t_io0 = clock::now();
  std::optional<io::ProbeWriter> probes;
  if (!cfg.output.probes.empty()) {
    probes.emplace(cfg.output.directory + "/probes.csv", g,
                   cfg.output.probes);
    probes->add(0, 0.0, comps, stepper->displacement().data());
  }
  auto snapshot = [&](int s, double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "u_%08d", s);
    io::write_snapshot(cfg.output.directory + "/" + buf, g, t, s, "u", comps,
                       stepper->displacement().data());
  };
  if (cfg.output.snapshots) snapshot(0, 0.0);
  rep.times.io = seconds_since(t_io0);

  for (int s = 1; s <= nsteps; ++s) {
    const auto t_s = clock::now();
    stepper->step();
    rep.times.step += seconds_since(t_s);
    const auto t_io = clock::now();
    if (probes) probes->add(s, s * dt, comps, stepper->displacement().data());
    if (cfg.output.snapshots &&
        (s % cfg.output.stride == 0 || s == nsteps))
      snapshot(s, s * dt);
    rep.times.io += seconds_since(t_io);
  }

  const auto t_post = clock::now();
  if (opt.record_forces && !stepper->forces().empty())
    io::write_forces(cfg.output.directory + "/forces.csv", dt,
                     stepper->forces());
  const bool keep_energy = opt.track_energy || cfg.integrator == "explicit";
  for (const auto &r : stepper->records()) {
    rep.iters_b.push_back(r.iters_b);
    rep.iters_f.push_back(r.iters_f);
    rep.gamma_max_dev = std::max(rep.gamma_max_dev, r.gamma_dev);
    if (keep_energy) {
      rep.energy_t.push_back(r.t);
      rep.kinetic.push_back(r.kinetic);
      rep.elastic.push_back(r.elastic);
    }
  }
  if (nsteps > 0 && cfg.oracle != "none")
    rep.final_error = oracle_error(cfg, micro, *stepper);
  rep.times.io += seconds_since(t_post);
  rep.times.total = seconds_since(t_start);
  rep.save(cfg.output.directory + "/report.json");
  return rep;
}

struct StudyRow {
  double multiple = 0.0;
  double dt = 0.0;
  double error = 0.0;
  double wall = 0.0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  std::optional<double> slope; //!< log-log fit, present with >= 2 rows

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["rows"] = nlohmann::json::array();
    for (const auto &r : rows)
      j["rows"].push_back({{"multiple", r.multiple},
                           {"dt", r.dt},
                           {"error", r.error},
                           {"wall", r.wall}});
    if (slope)
      j["slope"] = *slope;
    else
      j["slope"] = nullptr;
    return j;
  }
};

/**
 * @brief Re-run a configuration at several multiples of its base step.
 *
 * Each run writes into its own subdirectory of the base output directory.
 * With two or more rows the temporal convergence order is fitted from
 * log(error) against log(dt).
 */
inline StudyResult convergence_study(const RunConfig &base,
                                     const std::vector<double> &multiples) {
  if (multiples.empty())
    throw config_error("a study needs at least one dt multiple");
  if (base.oracle == "none")
    throw config_error("a study requires a scenario with an analytic oracle");
  const material::Microstructure micro = build_microstructure(base);
  const double dt0 = resolve_dt(base, micro);

  StudyResult out;
  for (double m : multiples) {
    RunConfig c = base;
    c.dt = DtSpec{};
    c.dt.value = m * dt0;
    c.output.snapshots = false;
    c.output.probes.clear();
    c.output.forces = false;
    c.output.energy = false;
    char buf[48];
    std::snprintf(buf, sizeof buf, "/study_%g", m);
    c.output.directory = base.output.directory + buf;
    const io::RunReport rep = run_scenario(c);
    if (!rep.final_error)
      throw solver_error("study run produced no error measure");
    out.rows.push_back({m, c.dt.value, *rep.final_error, rep.times.total});
  }
  if (out.rows.size() >= 2) {
    std::vector<double> lx, ly;
    bool usable = true;
    for (const auto &r : out.rows) {
      if (!(r.error > 0.0)) usable = false;
      lx.push_back(std::log(r.dt));
      ly.push_back(std::log(std::max(r.error, 1e-300)));
    }
    if (usable) out.slope = oracle::linear_fit(lx, ly).first;
  }
  return out;
}

} // namespace elastodyn::cli
