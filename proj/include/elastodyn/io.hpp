/**
 * @file io.hpp
 * @brief Field snapshots, probe/force CSVs, phase-map and orientation
 *        files, and the machine-readable run report.
 *
 * Snapshot format: `<base>.bin` holds raw little-endian 64-bit floats in
 * row-major voxel order (first grid axis fastest) with the components of a
 * voxel interleaved; `<base>.hdr` is a small text sidecar with dims,
 * lengths, time, step, field name, and component count.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "material.hpp"

namespace elastodyn::io {

struct SnapshotHeader {
  Grid grid;
  double time = 0.0;
  std::int64_t step = 0;
  std::string field;
  int comps = 0;
};

/// Write one field (component-major planes in memory) as an interleaved
/// binary snapshot plus its text sidecar.
inline void write_snapshot(const std::string &base, const Grid &g,
                           double time, std::int64_t step,
                           const std::string &field_name, int comps,
                           const double *planes) {
  {
    std::ofstream f(base + ".bin", std::ios::binary);
    if (!f) throw io_error("cannot open snapshot for writing: " + base + ".bin");
    std::vector<double> row(comps);
    for (std::size_t v = 0; v < g.nvox(); ++v) {
      for (int c = 0; c < comps; ++c) row[c] = planes[c * g.nvox() + v];
      f.write(reinterpret_cast<const char *>(row.data()),
              static_cast<std::streamsize>(comps * sizeof(double)));
    }
    if (!f) throw io_error("short write on snapshot: " + base + ".bin");
  }
  std::ofstream h(base + ".hdr");
  if (!h) throw io_error("cannot open snapshot header for writing: " + base);
  h.precision(17);
  h << "dims: " << g.n[0] << ' ' << g.n[1] << ' ' << g.n[2] << '\n'
    << "lengths: " << g.length[0] << ' ' << g.length[1] << ' ' << g.length[2]
    << '\n'
    << "time: " << time << '\n'
    << "step: " << step << '\n'
    << "field: " << field_name << '\n'
    << "components: " << comps << '\n';
  if (!h) throw io_error("short write on snapshot header: " + base);
}

inline SnapshotHeader read_snapshot_header(const std::string &base) {
  std::ifstream h(base + ".hdr");
  if (!h) throw io_error("cannot open snapshot header: " + base + ".hdr");
  SnapshotHeader hdr;
  std::string line;
  while (std::getline(h, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "dims:")
      ls >> hdr.grid.n[0] >> hdr.grid.n[1] >> hdr.grid.n[2];
    else if (key == "lengths:")
      ls >> hdr.grid.length[0] >> hdr.grid.length[1] >> hdr.grid.length[2];
    else if (key == "time:")
      ls >> hdr.time;
    else if (key == "step:")
      ls >> hdr.step;
    else if (key == "field:")
      ls >> hdr.field;
    else if (key == "components:")
      ls >> hdr.comps;
    if (ls.fail()) throw io_error("malformed snapshot header line: " + line);
  }
  if (hdr.comps < 1 || hdr.grid.nvox() == 0)
    throw io_error("snapshot header incomplete: " + base + ".hdr");
  return hdr;
}

/// Read a snapshot back into component-major planes, validating sizes.
inline std::vector<double> read_snapshot(const std::string &base,
                                         SnapshotHeader *header = nullptr) {
  const SnapshotHeader hdr = read_snapshot_header(base);
  std::ifstream f(base + ".bin", std::ios::binary);
  if (!f) throw io_error("cannot open snapshot: " + base + ".bin");
  f.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::uint64_t>(f.tellg());
  const std::uint64_t expect =
      hdr.grid.nvox() * static_cast<std::uint64_t>(hdr.comps) * sizeof(double);
  if (bytes != expect)
    throw io_error("snapshot size does not match its header: " + base);
  f.seekg(0);
  std::vector<double> planes(hdr.grid.nvox() * hdr.comps);
  std::vector<double> row(hdr.comps);
  for (std::size_t v = 0; v < hdr.grid.nvox(); ++v) {
    f.read(reinterpret_cast<char *>(row.data()),
           static_cast<std::streamsize>(hdr.comps * sizeof(double)));
    for (int c = 0; c < hdr.comps; ++c)
      planes[c * hdr.grid.nvox() + v] = row[c];
  }
  if (!f) throw io_error("snapshot truncated: " + base + ".bin");
  if (header) *header = hdr;
  return planes;
}

/// Streaming CSV writer for displacement probes.
class ProbeWriter {
public:
  ProbeWriter(const std::string &path, const Grid &g,
              std::vector<std::array<int, 3>> probes)
      : g_(g), probes_(std::move(probes)), f_(path) {
    if (!f_) throw io_error("cannot open probe csv for writing: " + path);
    f_ << "step,t,x,y,z,ux,uy,uz\n";
    f_.precision(17);
  }

  void add(std::int64_t step, double t, int comps, const double *planes) {
    for (const auto &p : probes_) {
      const std::size_t v = g_.idx(p[0], p[1], p[2]);
      f_ << step << ',' << t;
      for (int a = 0; a < 3; ++a) f_ << ',' << g_.center(a, p[a]);
      for (int c = 0; c < 3; ++c)
        f_ << ',' << (c < comps ? planes[c * g_.nvox() + v] : 0.0);
      f_ << '\n';
    }
    if (!f_) throw io_error("short write on probe csv");
  }

private:
  Grid g_;
  std::vector<std::array<int, 3>> probes_;
  std::ofstream f_;
};

/// Force history on the manifold, one column per constrained dof.
inline void write_forces(const std::string &path, double dt,
                         const std::vector<std::vector<double>> &forces) {
  std::ofstream f(path);
  if (!f) throw io_error("cannot open force csv for writing: " + path);
  f.precision(17);
  f << "step,t";
  const std::size_t n = forces.empty() ? 0 : forces.front().size();
  for (std::size_t i = 0; i < n; ++i) f << ",f" << i;
  f << '\n';
  for (std::size_t s = 0; s < forces.size(); ++s) {
    f << (s + 1) << ',' << (s + 1) * dt;
    for (double x : forces[s]) f << ',' << x;
    f << '\n';
  }
  if (!f) throw io_error("short write on force csv: " + path);
}

/// Wall-clock decomposition of a run, in seconds.
struct PhaseTimes {
  double preprocess = 0.0;
  double greens = 0.0;
  double step = 0.0;
  double io = 0.0;
  double total = 0.0;
};

/// Everything a finished run reports back.
struct RunReport {
  std::string scenario;
  Grid grid;
  double dt = 0.0;
  int steps = 0;
  std::vector<int> iters_b, iters_f;
  std::vector<double> energy_t, kinetic, elastic;
  double gamma_max_dev = 0.0;
  std::optional<double> final_error;
  PhaseTimes times;
  bool greens_cached = false;
  std::uint64_t greens_hash = 0;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["scenario"] = scenario;
    j["grid"] = {{"n", grid.n}, {"lengths", grid.length}};
    j["dt"] = dt;
    j["steps"] = steps;
    j["cg_iterations"] = {{"force_free", iters_b}, {"force", iters_f}};
    j["energy"] = {{"t", energy_t}, {"kinetic", kinetic}, {"elastic", elastic}};
    j["gamma_max_deviation"] = gamma_max_dev;
    if (final_error)
      j["final_error"] = *final_error;
    else
      j["final_error"] = nullptr;
    j["wall_clock"] = {{"preprocess", times.preprocess},
                       {"greens", times.greens},
                       {"step", times.step},
                       {"io", times.io},
                       {"total", times.total}};
    j["greens_cache"] = {{"reused", greens_cached},
                         {"content_hash", greens_hash}};
    return j;
  }

  void save(const std::string &path) const {
    std::ofstream f(path);
    if (!f) throw io_error("cannot open report for writing: " + path);
    f << to_json().dump(2) << '\n';
    if (!f) throw io_error("short write on report: " + path);
  }
};

/**
 * @brief Phase map file: text header `N1 N2 N3 L1 L2 L3`, then one phase
 *        index per voxel (first axis fastest).  A `.txt` extension selects
 *        whitespace-separated text indices; anything else stores raw
 *        little-endian 32-bit integers after the header line.
 */
inline void write_phase_map(const std::string &path,
                            const material::Microstructure &m) {
  const bool text = path.size() >= 4 && path.substr(path.size() - 4) == ".txt";
  std::ofstream f(path, text ? std::ios::out : std::ios::binary);
  if (!f) throw io_error("cannot open phase map for writing: " + path);
  f.precision(17);
  f << m.grid.n[0] << ' ' << m.grid.n[1] << ' ' << m.grid.n[2] << ' '
    << m.grid.length[0] << ' ' << m.grid.length[1] << ' ' << m.grid.length[2]
    << '\n';
  if (text) {
    for (std::size_t v = 0; v < m.phase.size(); ++v)
      f << m.phase[v] << ((v + 1) % 16 == 0 ? '\n' : ' ');
    f << '\n';
  } else {
    f.write(reinterpret_cast<const char *>(m.phase.data()),
            static_cast<std::streamsize>(m.phase.size() * sizeof(std::int32_t)));
  }
  if (!f) throw io_error("short write on phase map: " + path);
}

inline std::pair<Grid, std::vector<std::int32_t>>
read_phase_map(const std::string &path) {
  const bool text = path.size() >= 4 && path.substr(path.size() - 4) == ".txt";
  std::ifstream f(path, text ? std::ios::in : std::ios::binary);
  if (!f) throw io_error("cannot open phase map: " + path);
  Grid g;
  std::string header;
  std::getline(f, header);
  std::istringstream hs(header);
  hs >> g.n[0] >> g.n[1] >> g.n[2] >> g.length[0] >> g.length[1] >> g.length[2];
  if (hs.fail() || g.nvox() == 0)
    throw io_error("malformed phase map header: " + path);
  std::vector<std::int32_t> phase(g.nvox());
  if (text) {
    for (auto &p : phase) f >> p;
    if (f.fail()) throw io_error("phase map truncated: " + path);
  } else {
    f.read(reinterpret_cast<char *>(phase.data()),
           static_cast<std::streamsize>(phase.size() * sizeof(std::int32_t)));
    if (f.gcount() !=
        static_cast<std::streamsize>(phase.size() * sizeof(std::int32_t)))
      throw io_error("phase map truncated: " + path);
  }
  return {g, std::move(phase)};
}

/// Per-grain unit quaternions, text, four values per line.
inline void
write_orientations(const std::string &path,
                   const std::vector<std::array<double, 4>> &quats) {
  std::ofstream f(path);
  if (!f) throw io_error("cannot open orientation file for writing: " + path);
  f.precision(17);
  for (const auto &q : quats)
    f << q[0] << ' ' << q[1] << ' ' << q[2] << ' ' << q[3] << '\n';
  if (!f) throw io_error("short write on orientation file: " + path);
}

inline std::vector<std::array<double, 4>>
read_orientations(const std::string &path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open orientation file: " + path);
  std::vector<std::array<double, 4>> quats;
  std::array<double, 4> q;
  while (f >> q[0] >> q[1] >> q[2] >> q[3]) quats.push_back(q);
  return quats;
}

} // namespace elastodyn::io
