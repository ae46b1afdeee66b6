/**
 * @file test_cli.cpp
 * @brief Configuration schema, preset expansion, run driver behaviour
 *        (zero-step runs, determinism, convergence studies), and the
 *        command line binary's subcommands and exit codes.
 */
#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <elastodyn/scenario.hpp>

using namespace elastodyn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path &p) {
  std::ifstream f(p);
  REQUIRE(f.good());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<char> read_bytes(const fs::path &p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_json(const fs::path &p, const json &j) {
  std::ofstream f(p);
  f << j.dump(2) << '\n';
}

/// Run the driver binary, capture stdout+stderr, return its exit code.
int run_cli(const std::string &args, const fs::path &capture) {
  const std::string cmd = std::string(ELASTODYN_CLI_PATH) + " " + args +
                          " > \"" + capture.string() + "\" 2>&1";
  const int st = std::system(cmd.c_str());
  REQUIRE(st != -1);
  REQUIRE(WIFEXITED(st));
  return WEXITSTATUS(st);
}

/// Minimal valid implicit rod configuration (no outputs enabled).
cli::RunConfig valid_rod() {
  cli::RunConfig c;
  const int n = 48;
  c.grid = Grid{{n, 1, 1}, {2.0, 2.0 / n, 2.0 / n}};
  c.micro.builder = "homogeneous";
  c.micro.materials = {"Al"};
  c.pulse.amplitude = 1e-3;
  c.pulse.alpha = 4;
  c.pulse.omega = 5.0 * M_PI * material::metals::aluminum().c_bar() / 2.0;
  c.pulse.direction = {1.0, 0.0, 0.0};
  c.gamma.type = "point";
  c.gamma.index = {0, 0, 0};
  c.gamma.components = {0};
  c.integrator = "implicit";
  c.dt.value = 8e-6;
  c.final_time = 8.2e-5;
  c.tol = 1e-8;
  c.output.snapshots = false;
  c.output.forces = false;
  c.output.energy = true;
  return c;
}

json rod_json(const fs::path &outdir) {
  const cli::RunConfig c = valid_rod();
  json j;
  j["grid"] = {{"n", c.grid.n}, {"lengths", c.grid.length}};
  j["microstructure"] = {{"builder", "homogeneous"}, {"materials", {"Al"}}};
  j["pulse"] = {{"amplitude", c.pulse.amplitude},
                {"alpha", c.pulse.alpha},
                {"omega", c.pulse.omega},
                {"direction", c.pulse.direction}};
  j["gamma"] = {{"type", "point"}, {"index", {0, 0, 0}}, {"components", {0}}};
  j["integrator"] = c.integrator;
  j["dt"] = {{"value", c.dt.value}};
  j["final_time"] = c.final_time;
  j["tol"] = c.tol;
  j["oracle"] = "dalembert";
  j["output"] = {{"directory", outdir.string()},
                 {"snapshots", false},
                 {"forces", false}};
  return j;
}

} // namespace

TEST_CASE("configuration parsing, presets, and overrides") {
  SECTION("a full document lands in the config struct") {
    json j = rod_json("somewhere/out");
    j["seed"] = 42;
    j["greens_cache"] = "cache.bin";
    j["greens_threads"] = 3;
    j["output"]["stride"] = 7;
    j["output"]["probes"] = {{1, 0, 0}, {40, 0, 0}};
    const cli::RunConfig c = cli::parse_config(j);
    REQUIRE(c.grid.n == std::array<int, 3>{48, 1, 1});
    REQUIRE(c.grid.length[0] == 2.0);
    REQUIRE(c.micro.builder == "homogeneous");
    REQUIRE(c.micro.materials == std::vector<std::string>{"Al"});
    REQUIRE(c.pulse.amplitude == 1e-3);
    REQUIRE(c.pulse.alpha == 4);
    REQUIRE(c.gamma.type == "point");
    REQUIRE(c.gamma.components == std::vector<int>{0});
    REQUIRE(c.integrator == "implicit");
    REQUIRE(c.dt.value == 8e-6);
    REQUIRE(c.final_time == 8.2e-5);
    REQUIRE(c.tol == 1e-8);
    REQUIRE(c.oracle == "dalembert");
    REQUIRE(c.seed == 42);
    REQUIRE(c.greens_cache == "cache.bin");
    REQUIRE(c.greens_threads == 3);
    REQUIRE(c.resolved_greens_threads() == 3);
    REQUIRE(c.output.directory == "somewhere/out");
    REQUIRE(c.output.stride == 7);
    REQUIRE(c.output.probes.size() == 2);
    REQUIRE_NOTHROW(c.validate());
  }

  SECTION("a scenario key expands the preset and keeps overrides") {
    const cli::RunConfig c = cli::parse_config(
        json{{"scenario", "1d_homogeneous_al"},
             {"tol", 1e-10},
             {"output", {{"directory", "elsewhere"}}}});
    REQUIRE(c.scenario == "1d_homogeneous_al");
    REQUIRE(c.grid.n == std::array<int, 3>{2187, 1, 1});
    REQUIRE(c.oracle == "dalembert");
    REQUIRE(c.integrator == "implicit");
    REQUIRE(c.dt.cfl_multiple == 10.0);
    REQUIRE(c.tol == 1e-10);
    REQUIRE(c.output.directory == "elsewhere");
    // Non-overridden preset output keys survive the merge.
    REQUIRE(c.output.snapshots);
  }

  SECTION("every built-in preset parses and validates") {
    for (const std::string &name : cli::scenario_names()) {
      const cli::RunConfig c = cli::parse_config(json{{"scenario", name}});
      REQUIRE(c.scenario == name);
      REQUIRE_NOTHROW(c.validate());
      REQUIRE(c.final_time > 0.0);
    }
    REQUIRE_THROWS_AS(cli::scenario_preset("bogus"), config_error);
  }

  SECTION("every shipped example config loads and validates") {
    const fs::path dir = fs::path(ELASTODYN_SOURCE_DIR) / "configs";
    std::size_t count = 0;
    for (const auto &e : fs::directory_iterator(dir)) {
      if (e.path().extension() != ".json") continue;
      const cli::RunConfig c = cli::load_config(e.path().string());
      REQUIRE_NOTHROW(c.validate());
      ++count;
    }
    REQUIRE(count >= 7);
  }

  SECTION("material and crystal lookups reject unknown names") {
    REQUIRE(cli::lookup_metal("Fe").name == "Fe");
    REQUIRE_THROWS_AS(cli::lookup_metal("Cu"), config_error);
    REQUIRE_THROWS_AS(cli::lookup_crystal("Cu"), config_error);
  }

  SECTION("dt resolution honours value, multiple, convention, and safety") {
    cli::RunConfig c = valid_rod();
    const material::Microstructure micro = cli::build_microstructure(c);
    const integrate::StableDt bound = integrate::stable_dt(micro);
    REQUIRE(cli::resolve_dt(c, micro) == 8e-6);
    c.dt.value = 0.0;
    c.dt.cfl_multiple = 10.0;
    c.dt.convention = "fe";
    REQUIRE(cli::resolve_dt(c, micro) == 10.0 * bound.fe);
    c.dt.convention = "spectral";
    c.dt.safety = 0.9;
    REQUIRE(cli::resolve_dt(c, micro) == 10.0 * bound.spectral * 0.9);
  }

  SECTION("manifold amplitudes take the pulse direction per component") {
    cli::RunConfig c = valid_rod();
    c.grid = Grid{{5, 5, 5}, {1.0, 1.0, 1.0}};
    c.gamma.type = "point";
    c.gamma.index = {2, 2, 2};
    c.gamma.components = {0, 2};
    c.pulse.direction = {0.3, 0.0, -0.7};
    const greens::Manifold gamma = cli::build_manifold(c);
    const std::vector<double> amp = cli::manifold_amplitudes(c, gamma);
    REQUIRE(amp == std::vector<double>{0.3, -0.7});
  }

  SECTION("a missing config file is an io error") {
    REQUIRE_THROWS_AS(cli::load_config("/no/such/file.json"), io_error);
  }
}

TEST_CASE("configuration validation rejects bad values") {
  REQUIRE_NOTHROW(valid_rod().validate());
  auto reject = [](auto mutate) {
    cli::RunConfig c = valid_rod();
    mutate(c);
    REQUIRE_THROWS_AS(c.validate(), config_error);
  };
  reject([](cli::RunConfig &c) { c.grid.n[1] = 0; });
  reject([](cli::RunConfig &c) { c.grid.length[2] = 0.0; });
  reject([](cli::RunConfig &c) { c.integrator = "verlet"; });
  reject([](cli::RunConfig &c) { c.dt = cli::DtSpec{}; });
  reject([](cli::RunConfig &c) {
    c.dt.value = 0.0;
    c.dt.cfl_multiple = 4.0;
    c.dt.convention = "cfl";
  });
  reject([](cli::RunConfig &c) { c.final_time = -1.0; });
  reject([](cli::RunConfig &c) { c.tol = 0.0; });
  reject([](cli::RunConfig &c) { c.output.stride = 0; });
  reject([](cli::RunConfig &c) { c.pulse.omega = 0.0; });
  reject([](cli::RunConfig &c) { c.pulse.alpha = 0; });
  reject([](cli::RunConfig &c) { c.pulse.direction = {0.0, 0.0, 0.0}; });
  reject([](cli::RunConfig &c) { c.gamma.type = "line"; });
  reject([](cli::RunConfig &c) { c.gamma.components = {0, 3}; });
  reject([](cli::RunConfig &c) { c.output.probes = {{48, 0, 0}}; });
  reject([](cli::RunConfig &c) {
    c.micro.builder = "phase_map";
    c.micro.path = "/no/such/map.bin";
  });
  reject([](cli::RunConfig &c) { c.micro.builder = "random"; });
  reject([](cli::RunConfig &c) { c.oracle = "exact"; });

  // Constraining a transverse component is meaningless on a 1D grid; the
  // manifold builder is the layer that knows this.
  cli::RunConfig c = valid_rod();
  c.gamma.components = {1};
  REQUIRE_THROWS_AS(cli::build_manifold(c), config_error);
}

TEST_CASE("zero final time yields zero steps and a valid report") {
  const fs::path dir = fresh_dir("elastodyn_cli_zero");
  cli::RunConfig c = valid_rod();
  c.final_time = 0.0;
  c.oracle = "dalembert";
  c.output.directory = dir.string();
  const io::RunReport rep = cli::run_scenario(c);

  REQUIRE(rep.steps == 0);
  REQUIRE(rep.iters_b.empty());
  REQUIRE(rep.iters_f.empty());
  REQUIRE(rep.energy_t.empty());
  REQUIRE(rep.gamma_max_dev == 0.0);
  REQUIRE_FALSE(rep.final_error.has_value());
  REQUIRE(rep.dt == 8e-6);

  // The report is the only artifact: no snapshots, probes, or forces.
  std::vector<std::string> files;
  for (const auto &e : fs::directory_iterator(dir))
    files.push_back(e.path().filename().string());
  REQUIRE(files == std::vector<std::string>{"report.json"});

  json j;
  std::ifstream(dir / "report.json") >> j;
  REQUIRE(j.at("steps").get<int>() == 0);
  REQUIRE(j.at("final_error").is_null());
  fs::remove_all(dir);
}

TEST_CASE("identical config and seed reproduce snapshots bitwise") {
  auto polycfg = [](const fs::path &dir, std::uint64_t seed) {
    cli::RunConfig c;
    const int n = 9;
    c.grid = Grid{{n, n, n}, {1e-4, 1e-4, 1e-4}};
    c.micro.builder = "voronoi";
    c.micro.n_grains = 8;
    c.micro.crystal = "Ni";
    c.seed = seed;
    c.pulse.amplitude = 1e-6;
    c.pulse.alpha = 4;
    c.pulse.omega = 5e8;
    c.pulse.direction = {0.0, 0.0, 1.0};
    c.gamma.type = "point";
    c.gamma.index = {4, 4, 4};
    c.gamma.components = {2};
    c.integrator = "implicit";
    c.dt.value = 1e-9;
    c.final_time = 3.25e-9;
    c.tol = 1e-8;
    c.output.directory = dir.string();
    c.output.stride = 1;
    c.output.snapshots = true;
    c.output.forces = false;
    return c;
  };

  const fs::path d1 = fresh_dir("elastodyn_cli_det1");
  const fs::path d2 = fresh_dir("elastodyn_cli_det2");
  const fs::path d3 = fresh_dir("elastodyn_cli_det3");
  const io::RunReport r1 = cli::run_scenario(polycfg(d1, 5));
  const io::RunReport r2 = cli::run_scenario(polycfg(d2, 5));
  const io::RunReport r3 = cli::run_scenario(polycfg(d3, 6));
  REQUIRE(r1.steps == 3);

  const auto b1 = read_bytes(d1 / "u_00000003.bin");
  const auto b2 = read_bytes(d2 / "u_00000003.bin");
  const auto b3 = read_bytes(d3 / "u_00000003.bin");
  REQUIRE(b1 == b2);
  REQUIRE(r1.greens_hash == r2.greens_hash);
  REQUIRE(r1.iters_b == r2.iters_b);
  REQUIRE(r1.iters_f == r2.iters_f);

  // A different seed grows different grains, so the field differs too.
  REQUIRE(b1 != b3);
  REQUIRE(r1.greens_hash != r3.greens_hash);

  fs::remove_all(d1);
  fs::remove_all(d2);
  fs::remove_all(d3);
}

TEST_CASE("convergence study rows and fit") {
  const fs::path dir = fresh_dir("elastodyn_cli_study");
  cli::RunConfig base = valid_rod();
  base.oracle = "dalembert";
  base.output.directory = dir.string();

  SECTION("single multiplier gives one row and no fit") {
    const cli::StudyResult res = cli::convergence_study(base, {2.0});
    REQUIRE(res.rows.size() == 1);
    REQUIRE_FALSE(res.slope.has_value());
    REQUIRE(res.rows[0].multiple == 2.0);
    REQUIRE(res.rows[0].dt == 2.0 * 8e-6);
    REQUIRE(res.rows[0].error > 0.0);
    REQUIRE(res.rows[0].wall > 0.0);
    REQUIRE(fs::exists(dir / "study_2" / "report.json"));
    const json j = res.to_json();
    REQUIRE(j.at("rows").size() == 1);
    REQUIRE(j.at("slope").is_null());
  }

  SECTION("two multipliers produce ordered rows and a fitted slope") {
    const cli::StudyResult res = cli::convergence_study(base, {2.0, 4.0});
    REQUIRE(res.rows.size() == 2);
    REQUIRE(res.rows[0].multiple == 2.0);
    REQUIRE(res.rows[1].multiple == 4.0);
    REQUIRE(res.slope.has_value());
    REQUIRE(std::isfinite(*res.slope));
  }

  SECTION("a study needs multipliers and an oracle") {
    REQUIRE_THROWS_AS(cli::convergence_study(base, {}), config_error);
    base.oracle = "none";
    REQUIRE_THROWS_AS(cli::convergence_study(base, {2.0}), config_error);
  }

  fs::remove_all(dir);
}

TEST_CASE("driver subcommands and exit codes") {
  const fs::path dir = fresh_dir("elastodyn_cli_bin");
  const fs::path cap = dir / "out.txt";

  SECTION("info lists the built-in scenarios") {
    REQUIRE(run_cli("info", cap) == 0);
    const std::string out = slurp(cap);
    REQUIRE(out.find("1d_homogeneous_al") != std::string::npos);
    REQUIRE(out.find("polycrystal_short") != std::string::npos);
  }

  SECTION("info and validate accept a bare scenario name") {
    REQUIRE(run_cli("info 1d_layered_al_fe", cap) == 0);
    REQUIRE(slurp(cap).find("stability bounds") != std::string::npos);
    REQUIRE(run_cli("validate 1d_homogeneous_al", cap) == 0);
    REQUIRE(slurp(cap).find("configuration valid") != std::string::npos);
  }

  SECTION("help succeeds and parse errors are config errors") {
    REQUIRE(run_cli("--help", cap) == 0);
    REQUIRE(slurp(cap).find("run") != std::string::npos);
    REQUIRE(run_cli("", cap) == 2);
    REQUIRE(run_cli("frobnicate", cap) == 2);
    REQUIRE(run_cli("run", cap) == 2);
  }

  SECTION("invalid configs exit 2, missing files exit 4") {
    const fs::path bad = dir / "bad.json";
    write_json(bad, json{{"scenario", "1d_homogeneous_al"}, {"tol", -1.0}});
    REQUIRE(run_cli("validate \"" + bad.string() + "\"", cap) == 2);
    REQUIRE(slurp(cap).find("config error") != std::string::npos);

    const fs::path notjson = dir / "notjson.json";
    std::ofstream(notjson) << "{ nope\n";
    REQUIRE(run_cli("validate \"" + notjson.string() + "\"", cap) == 2);

    REQUIRE(run_cli("run /no/such/config.json", cap) == 4);
    REQUIRE(slurp(cap).find("io error") != std::string::npos);
  }

  SECTION("zero-step run, output override, and cache reuse") {
    const fs::path cfgfile = dir / "zero.json";
    write_json(cfgfile, json{{"scenario", "1d_homogeneous_al"},
                             {"final_time", 0.0},
                             {"output",
                              {{"directory", (dir / "a").string()},
                               {"snapshots", false},
                               {"forces", false},
                               {"probes", json::array()}}}});
    const std::string cache = (dir / "greens.bin").string();
    REQUIRE(run_cli("run \"" + cfgfile.string() + "\" --output \"" +
                        (dir / "b").string() + "\" --cache \"" + cache + "\"",
                    cap) == 0);
    REQUIRE(slurp(cap).find("assembled") != std::string::npos);
    REQUIRE_FALSE(fs::exists(dir / "a"));
    REQUIRE(fs::exists(dir / "b" / "report.json"));
    REQUIRE(fs::exists(cache));

    REQUIRE(run_cli("run \"" + cfgfile.string() + "\" --output \"" +
                        (dir / "c").string() + "\" --cache \"" + cache + "\"",
                    cap) == 0);
    REQUIRE(slurp(cap).find("reloaded from cache") != std::string::npos);
    json j;
    std::ifstream(dir / "c" / "report.json") >> j;
    REQUIRE(j.at("greens_cache").at("reused").get<bool>());
    REQUIRE(j.at("steps").get<int>() == 0);
  }

  SECTION("an unstable explicit run exits with the solver code") {
    json j = rod_json(dir / "blowup");
    j["integrator"] = "explicit";
    j["dt"] = {{"cfl_multiple", 1.5}, {"convention", "spectral"}};
    j["final_time"] = 7e-4;
    j.erase("oracle");
    const fs::path cfgfile = dir / "blowup.json";
    write_json(cfgfile, j);
    REQUIRE(run_cli("run \"" + cfgfile.string() + "\"", cap) == 3);
    REQUIRE(slurp(cap).find("solver error") != std::string::npos);
  }

  SECTION("an unwritable output directory exits with the io code") {
    std::ofstream(dir / "blocker") << "file\n";
    json j = rod_json(dir / "blocker" / "out");
    const fs::path cfgfile = dir / "ioerr.json";
    write_json(cfgfile, j);
    REQUIRE(run_cli("run \"" + cfgfile.string() + "\"", cap) == 4);
    REQUIRE(slurp(cap).find("io error") != std::string::npos);
  }

  SECTION("study prints the table and writes the summary") {
    const fs::path cfgfile = dir / "study.json";
    write_json(cfgfile, rod_json(dir / "study_out"));
    REQUIRE(run_cli("study \"" + cfgfile.string() + "\" --dts 2", cap) == 0);
    const std::string out = slurp(cap);
    REQUIRE(out.find("multiple,dt,error,wall") != std::string::npos);
    REQUIRE(out.find("fitted temporal order: n/a") != std::string::npos);
    json j;
    std::ifstream(dir / "study_out" / "study.json") >> j;
    REQUIRE(j.at("rows").size() == 1);
    REQUIRE(j.at("slope").is_null());
  }

  fs::remove_all(dir);
}
