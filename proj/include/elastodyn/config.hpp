/**
 * @file config.hpp
 * @brief Run configuration: JSON schema parsing and validation.
 *
 * A run is described by one JSON document.  A `scenario` key selects a
 * built-in preset; any further keys in the same document override the
 * preset (RFC 7386 merge, applied by the loader in scenario.hpp).
 */
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "core.hpp"

namespace elastodyn::cli {

/// Time-step choice: either absolute, or a multiple of a CFL estimate.
struct DtSpec {
  double value = 0.0;        //!< absolute step in s (0 = use multiple)
  double cfl_multiple = 0.0; //!< step as multiple of the CFL estimate
  std::string convention = "fe"; //!< "fe" (min dx / c) or "spectral" (2/omega_max)
  double safety = 1.0; //!< extra factor, e.g. 0.9 for heterogeneous explicit
};

/// Geometry of the constrained manifold.
struct GammaSpec {
  std::string type = "point"; //!< point | plane | ball
  std::array<int, 3> index{0, 0, 0}; //!< point/ball center voxel
  int axis = 2;                      //!< plane normal axis
  int plane_index = 0;               //!< plane position along the axis
  double radius_voxels = 1.0;        //!< ball radius in voxel spacings
  std::vector<int> components;       //!< constrained components per point
};

struct PulseSpec {
  double amplitude = 0.0;
  int alpha = 4;
  double omega = 0.0;
  std::array<double, 3> direction{1, 0, 0};
};

struct MicroSpec {
  std::string builder = "homogeneous"; //!< homogeneous | layered | framed |
                                       //!< voronoi | phase_map
  std::vector<std::string> materials;  //!< names from the built-in table
  int axis = 0;                        //!< layered: layering axis
  std::vector<double> fractions;       //!< layered: boundaries, 0..1
  std::vector<int> layer_materials;    //!< layered: material slot per layer
  std::array<double, 3> inner_extent{0, 0, 0}; //!< framed: inner box size
  int n_grains = 1;                    //!< voronoi: grain count
  std::string crystal = "Ni";          //!< voronoi: single-crystal constants
  std::string path;                    //!< phase_map: file to load
};

struct OutputSpec {
  std::string directory = "out";
  int stride = 1;          //!< snapshot every this many steps
  std::vector<std::array<int, 3>> probes;
  bool snapshots = false;
  bool energy = true;      //!< record kinetic/elastic energy each step
  bool forces = true;      //!< emit the manifold force history CSV
};

struct RunConfig {
  std::string scenario;
  Grid grid;
  MicroSpec micro;
  PulseSpec pulse;
  GammaSpec gamma;
  std::string integrator = "implicit"; //!< implicit | explicit
  DtSpec dt;
  double final_time = 0.0;
  double tol = 1e-8;
  OutputSpec output;
  std::uint64_t seed = 1;
  std::string greens_cache; //!< optional cache file for the influence matrix
  int greens_threads = 0;   //!< 0 = hardware concurrency (capped at 8)
  std::string oracle = "none"; //!< none | dalembert | layered

  int resolved_greens_threads() const {
    if (greens_threads > 0) return greens_threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::min(hw == 0 ? 1u : hw, 8u));
  }

  static RunConfig from_json(const nlohmann::json &j) {
    RunConfig c;
    c.scenario = j.value("scenario", "");
    if (j.contains("grid")) {
      const auto &g = j.at("grid");
      if (g.contains("n")) c.grid.n = g.at("n").get<std::array<int, 3>>();
      if (g.contains("lengths"))
        c.grid.length = g.at("lengths").get<std::array<double, 3>>();
    }
    if (j.contains("microstructure")) {
      const auto &m = j.at("microstructure");
      c.micro.builder = m.value("builder", c.micro.builder);
      c.micro.materials =
          m.value("materials", std::vector<std::string>{});
      c.micro.axis = m.value("axis", c.micro.axis);
      c.micro.fractions = m.value("fractions", std::vector<double>{});
      c.micro.layer_materials =
          m.value("layer_materials", std::vector<int>{});
      if (m.contains("inner_extent"))
        c.micro.inner_extent =
            m.at("inner_extent").get<std::array<double, 3>>();
      c.micro.n_grains = m.value("n_grains", c.micro.n_grains);
      c.micro.crystal = m.value("crystal", c.micro.crystal);
      c.micro.path = m.value("path", c.micro.path);
    }
    if (j.contains("pulse")) {
      const auto &p = j.at("pulse");
      c.pulse.amplitude = p.value("amplitude", c.pulse.amplitude);
      c.pulse.alpha = p.value("alpha", c.pulse.alpha);
      c.pulse.omega = p.value("omega", c.pulse.omega);
      if (p.contains("direction"))
        c.pulse.direction = p.at("direction").get<std::array<double, 3>>();
    }
    if (j.contains("gamma")) {
      const auto &g = j.at("gamma");
      c.gamma.type = g.value("type", c.gamma.type);
      if (g.contains("index"))
        c.gamma.index = g.at("index").get<std::array<int, 3>>();
      c.gamma.axis = g.value("axis", c.gamma.axis);
      c.gamma.plane_index = g.value("plane_index", c.gamma.plane_index);
      c.gamma.radius_voxels = g.value("radius_voxels", c.gamma.radius_voxels);
      c.gamma.components = g.value("components", std::vector<int>{});
    }
    c.integrator = j.value("integrator", c.integrator);
    if (j.contains("dt")) {
      const auto &d = j.at("dt");
      c.dt.value = d.value("value", 0.0);
      c.dt.cfl_multiple = d.value("cfl_multiple", 0.0);
      c.dt.convention = d.value("convention", c.dt.convention);
      c.dt.safety = d.value("safety", c.dt.safety);
    }
    c.final_time = j.value("final_time", c.final_time);
    c.tol = j.value("tol", c.tol);
    if (j.contains("output")) {
      const auto &o = j.at("output");
      c.output.directory = o.value("directory", c.output.directory);
      c.output.stride = o.value("stride", c.output.stride);
      if (o.contains("probes"))
        c.output.probes =
            o.at("probes").get<std::vector<std::array<int, 3>>>();
      c.output.snapshots = o.value("snapshots", c.output.snapshots);
      c.output.energy = o.value("energy", c.output.energy);
      c.output.forces = o.value("forces", c.output.forces);
    }
    c.seed = j.value("seed", c.seed);
    c.greens_cache = j.value("greens_cache", c.greens_cache);
    c.greens_threads = j.value("greens_threads", c.greens_threads);
    c.oracle = j.value("oracle", c.oracle);
    return c;
  }

  void validate() const {
    for (int a = 0; a < 3; ++a)
      if (grid.n[a] < 1 || !(grid.length[a] > 0.0))
        throw config_error("grid requires positive voxel counts and lengths");
    if (integrator != "implicit" && integrator != "explicit")
      throw config_error("integrator must be 'implicit' or 'explicit'");
    if (!(dt.value > 0.0) && !(dt.cfl_multiple > 0.0))
      throw config_error("dt needs either a value or a cfl_multiple");
    if (dt.convention != "fe" && dt.convention != "spectral")
      throw config_error("dt convention must be 'fe' or 'spectral'");
    if (final_time < 0.0) throw config_error("final_time must be >= 0");
    if (!(tol > 0.0)) throw config_error("tol must be positive");
    if (output.stride < 1) throw config_error("output stride must be >= 1");
    if (!(pulse.omega > 0.0)) throw config_error("pulse omega must be positive");
    if (pulse.alpha < 1) throw config_error("pulse alpha must be >= 1");
    const double dn = std::sqrt(pulse.direction[0] * pulse.direction[0] +
                                pulse.direction[1] * pulse.direction[1] +
                                pulse.direction[2] * pulse.direction[2]);
    if (!(dn > 0.0)) throw config_error("pulse direction must be nonzero");
    if (gamma.type != "point" && gamma.type != "plane" && gamma.type != "ball")
      throw config_error("gamma type must be point, plane, or ball");
    for (int comp : gamma.components)
      if (comp < 0 || comp > 2)
        throw config_error("gamma components must be 0, 1, or 2");
    for (const auto &p : output.probes)
      for (int a = 0; a < 3; ++a)
        if (p[a] < 0 || p[a] >= grid.n[a])
          throw config_error("probe voxel outside the grid");
    if (micro.builder == "phase_map" &&
        !std::filesystem::exists(micro.path))
      throw config_error("phase map file does not exist: " + micro.path);
    if (micro.builder != "homogeneous" && micro.builder != "layered" &&
        micro.builder != "framed" && micro.builder != "voronoi" &&
        micro.builder != "phase_map")
      throw config_error("unknown microstructure builder: " + micro.builder);
    if (oracle != "none" && oracle != "dalembert" && oracle != "layered")
      throw config_error("oracle must be none, dalembert, or layered");
  }
};

} // namespace elastodyn::cli
