/**
 * @file material.hpp
 * @brief Material definitions, stiffness-tensor algebra, and voxel
 *        microstructure builders (homogeneous, layered, framed, polycrystal).
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "core.hpp"
#include "detail/linalg.hpp"
#include "detail/rng.hpp"

namespace elastodyn::material {

/**
 * @brief Isotropic material with mutually consistent elastic moduli.
 *
 * Constructed from the Lame pair (lambda, mu); E and nu are derived so the
 * consistency invariant E = mu(3*lambda+2*mu)/(lambda+mu) holds exactly.
 */
struct Isotropic {
  std::string name;
  double E = 0, rho = 0, lambda = 0, mu = 0, nu = 0;

  static Isotropic from_lame(std::string name, double lambda, double mu,
                             double rho) {
    if (mu <= 0 || 3 * lambda + 2 * mu <= 0 || rho <= 0)
      throw config_error("isotropic material '" + name +
                         "' is not positive definite");
    Isotropic m;
    m.name = std::move(name);
    m.lambda = lambda;
    m.mu = mu;
    m.rho = rho;
    m.E = mu * (3 * lambda + 2 * mu) / (lambda + mu);
    m.nu = lambda / (2 * (lambda + mu));
    return m;
  }

  /// Rod (1D bar) wave speed sqrt(E/rho).
  double c_bar() const { return std::sqrt(E / rho); }
  /// Longitudinal (P) wave speed sqrt((lambda+2mu)/rho).
  double c_long() const { return std::sqrt((lambda + 2 * mu) / rho); }
  /// Shear (S) wave speed sqrt(mu/rho).
  double c_shear() const { return std::sqrt(mu / rho); }
};

/// Cubic single crystal given by its three independent constants.
struct CubicCrystal {
  double c11 = 0, c12 = 0, c44 = 0, rho = 0;

  void validate() const {
    if (!(c11 > std::fabs(c12)) || !(c44 > 0) || !(c11 + 2 * c12 > 0) ||
        !(rho > 0))
      throw config_error("cubic crystal constants are not positive definite");
  }

  double zener_ratio() const { return 2 * c44 / (c11 - c12); }
};

/**
 * @brief Rank-4 stiffness tensor, stored as all 81 components.
 *
 * Minor and major symmetries are exact by construction.  The full tensor is
 * the working representation; a Mandel 6x6 view is derived only where a
 * symmetric-matrix eigenvalue problem is needed.
 */
class StiffnessTensor {
public:
  double operator()(int i, int j, int k, int l) const {
    return c_[((i * 3 + j) * 3 + k) * 3 + l];
  }

  static StiffnessTensor isotropic(double lambda, double mu) {
    if (mu <= 0 || 3 * lambda + 2 * mu <= 0)
      throw config_error("isotropic stiffness is not positive definite");
    StiffnessTensor t;
    auto d = [](int a, int b) { return a == b ? 1.0 : 0.0; };
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l)
            t.set(i, j, k, l,
                  lambda * d(i, j) * d(k, l) +
                      mu * (d(i, k) * d(j, l) + d(i, l) * d(j, k)));
    return t;
  }

  static StiffnessTensor cubic(const CubicCrystal &m) {
    m.validate();
    StiffnessTensor t;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t.set(i, i, j, j, i == j ? m.c11 : m.c12);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) {
          t.set(i, j, i, j, m.c44);
          t.set(i, j, j, i, m.c44);
        }
    return t;
  }

  /// C'_ijkl = r_ia r_jb r_kc r_ld C_abcd for a proper rotation r (row-major).
  StiffnessTensor rotated(const std::array<double, 9> &r) const {
    check_rotation(r);
    StiffnessTensor out;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) {
            double s = 0.0;
            for (int a = 0; a < 3; ++a)
              for (int b = 0; b < 3; ++b)
                for (int cc = 0; cc < 3; ++cc)
                  for (int dd = 0; dd < 3; ++dd)
                    s += r[i * 3 + a] * r[j * 3 + b] * r[k * 3 + cc] *
                         r[l * 3 + dd] * (*this)(a, b, cc, dd);
            out.set(i, j, k, l, s);
          }
    return out;
  }

  /**
   * @brief Mandel 6x6 matrix (sqrt-2 weights on shear rows/columns).
   *
   * Its eigenvalues equal those of the tensor acting on symmetric
   * second-order tensors, which makes it the right view for positive
   * definiteness checks.
   */
  std::array<double, 36> mandel() const {
    static constexpr int vi[6] = {0, 1, 2, 1, 0, 0};
    static constexpr int vj[6] = {0, 1, 2, 2, 2, 1};
    const double s2 = std::sqrt(2.0);
    std::array<double, 36> m{};
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) {
        const double w = (a < 3 ? 1.0 : s2) * (b < 3 ? 1.0 : s2);
        m[a * 6 + b] = w * (*this)(vi[a], vj[a], vi[b], vj[b]);
      }
    return m;
  }

  bool positive_definite() const {
    const auto m = mandel();
    const auto ev = detail::symmetric_eigenvalues({m.begin(), m.end()}, 6);
    return *std::min_element(ev.begin(), ev.end()) > 0.0;
  }

  /**
   * @brief Voigt contraction table W with engineering-shear doubling folded in.
   *
   * With strain stored plainly as the six components (e11,e22,e33,e23,e13,e12),
   * stress follows as sigma_J = sum_M W[J][M] * eps_M; the factor 2 on mixed
   * strain columns accounts for the symmetric pair C_ijkl e_kl + C_ijlk e_lk.
   */
  std::array<double, 36> voigt_w() const {
    static constexpr int vi[6] = {0, 1, 2, 1, 0, 0};
    static constexpr int vj[6] = {0, 1, 2, 2, 2, 1};
    std::array<double, 36> w{};
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b)
        w[a * 6 + b] = (*this)(vi[a], vj[a], vi[b], vj[b]) * (b < 3 ? 1.0 : 2.0);
    return w;
  }

  /// Acoustic tensor K_ik = C_ijkl n_j n_l for a unit direction n.
  std::array<double, 9> acoustic(const std::array<double, 3> &n) const {
    std::array<double, 9> k{};
    for (int i = 0; i < 3; ++i)
      for (int kk = 0; kk < 3; ++kk) {
        double s = 0.0;
        for (int j = 0; j < 3; ++j)
          for (int l = 0; l < 3; ++l) s += (*this)(i, j, kk, l) * n[j] * n[l];
        k[i * 3 + kk] = s;
      }
    return k;
  }

  StiffnessTensor &operator+=(const StiffnessTensor &o) {
    for (int i = 0; i < 81; ++i) c_[i] += o.c_[i];
    return *this;
  }
  StiffnessTensor &operator*=(double s) {
    for (double &x : c_) x *= s;
    return *this;
  }

private:
  void set(int i, int j, int k, int l, double v) {
    // Write all minor/major symmetric slots so symmetry is exact.
    for (auto [a, b] : {std::pair{i, j}, std::pair{j, i}})
      for (auto [c, d] : {std::pair{k, l}, std::pair{l, k}}) {
        c_[((a * 3 + b) * 3 + c) * 3 + d] = v;
        c_[((c * 3 + d) * 3 + a) * 3 + b] = v;
      }
  }

  static void check_rotation(const std::array<double, 9> &r) {
    double dev = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += r[k * 3 + i] * r[k * 3 + j];
        dev = std::max(dev, std::fabs(s - (i == j ? 1.0 : 0.0)));
      }
    const double det =
        r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
        r[2] * (r[3] * r[7] - r[4] * r[6]);
    if (dev > 1e-10 || std::fabs(det - 1.0) > 1e-10)
      throw config_error("stiffness rotation requires a proper rotation matrix");
  }

  std::array<double, 81> c_{};
};

/// One constituent: a stiffness tensor and a mass density.
struct Phase {
  StiffnessTensor C;
  double rho = 0;

  /// Lame lambda, assuming the phase is isotropic.
  double lambda_iso() const { return C(0, 0, 1, 1); }
  /// Lame mu, assuming the phase is isotropic.
  double mu_iso() const { return C(0, 1, 0, 1); }
  /// Young modulus of an isotropic phase (used by the 1D rod solver).
  double young_iso() const {
    const double l = lambda_iso(), m = mu_iso();
    return m * (3 * l + 2 * m) / (l + m);
  }

  /// Largest axis-aligned plane-wave speed, max_n sqrt(eig_max K(n)/rho).
  double fastest_speed() const {
    double w = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
      std::array<double, 3> n{0, 0, 0};
      n[axis] = 1.0;
      const auto k = C.acoustic(n);
      const auto ev = detail::symmetric_eigenvalues({k.begin(), k.end()}, 3);
      w = std::max(w, *std::max_element(ev.begin(), ev.end()));
    }
    return std::sqrt(w / rho);
  }
};

/**
 * @brief Periodic voxel microstructure: per-voxel phase indices plus the
 *        phase table.  Immutable after construction; shared read-only by
 *        solver threads.
 */
struct Microstructure {
  Grid grid;
  std::vector<std::int32_t> phase;            //!< per-voxel phase index
  std::vector<Phase> phases;                  //!< phase table
  std::vector<std::array<double, 4>> orientations; //!< per-phase quaternion (polycrystal)

  const Phase &at(std::size_t v) const { return phases[phase[v]]; }

  void validate() const {
    if (phase.size() != grid.nvox())
      throw config_error("phase map size does not match the grid");
    for (std::int32_t p : phase)
      if (p < 0 || static_cast<std::size_t>(p) >= phases.size())
        throw config_error("voxel phase index outside the phase table");
    for (const Phase &p : phases) {
      if (p.rho <= 0) throw config_error("phase density must be positive");
      if (!p.C.positive_definite())
        throw config_error("phase stiffness must be positive definite");
    }
  }

  bool homogeneous() const {
    for (std::int32_t p : phase)
      if (p != phase[0]) return false;
    return true;
  }

  /// Volume-averaged stiffness and density (preconditioner reference medium).
  Phase averaged() const {
    std::vector<std::size_t> count(phases.size(), 0);
    for (std::int32_t p : phase) ++count[p];
    Phase avg;
    avg.rho = 0;
    const double w0 = 1.0 / static_cast<double>(grid.nvox());
    for (std::size_t p = 0; p < phases.size(); ++p) {
      const double w = w0 * static_cast<double>(count[p]);
      StiffnessTensor c = phases[p].C;
      c *= w;
      avg.C += c;
      avg.rho += w * phases[p].rho;
    }
    return avg;
  }

  /// Fastest plane-wave speed over all phases present in the map.
  double fastest_speed() const {
    std::vector<bool> present(phases.size(), false);
    for (std::int32_t p : phase) present[p] = true;
    double c = 0.0;
    for (std::size_t p = 0; p < phases.size(); ++p)
      if (present[p]) c = std::max(c, phases[p].fastest_speed());
    return c;
  }

  /// Per-voxel Young modulus (1D rod solver).
  std::vector<double> young_profile() const {
    std::vector<double> e(grid.nvox());
    for (std::size_t v = 0; v < e.size(); ++v) e[v] = at(v).young_iso();
    return e;
  }

  /// Per-voxel density.
  std::vector<double> density_profile() const {
    std::vector<double> r(grid.nvox());
    for (std::size_t v = 0; v < r.size(); ++v) r[v] = at(v).rho;
    return r;
  }
};

inline Phase phase_of(const Isotropic &m) {
  return {StiffnessTensor::isotropic(m.lambda, m.mu), m.rho};
}

/// Reference metals used by the built-in scenarios.
namespace metals {
inline Isotropic aluminum() {
  return Isotropic::from_lame("Al", 58.2e9, 26.1e9, 2700.0);
}
inline Isotropic iron() {
  return Isotropic::from_lame("Fe", 115.7e9, 81.6e9, 7850.0);
}
inline Isotropic uranium() {
  return Isotropic::from_lame("U", 99.2e9, 66.1e9, 18950.0);
}
inline CubicCrystal nickel() { return {249e9, 155e9, 114e9, 8908.0}; }
} // namespace metals

inline Microstructure build_homogeneous(const Grid &g, Phase p) {
  Microstructure m;
  m.grid = g;
  m.phase.assign(g.nvox(), 0);
  m.phases = {std::move(p)};
  return m;
}

/**
 * @brief Layered microstructure along one axis.
 *
 * @param fractions  Layer boundaries as fractions of the axis length,
 *                   strictly increasing from 0 to 1 (half-open intervals
 *                   [a, b), so boundary ties resolve deterministically).
 * @param layer_phase  Phase index per layer, one entry per interval.
 */
inline Microstructure build_layered(const Grid &g, int axis,
                                    const std::vector<double> &fractions,
                                    const std::vector<int> &layer_phase,
                                    std::vector<Phase> phases) {
  if (fractions.size() < 2 || fractions.front() != 0.0 ||
      fractions.back() != 1.0)
    throw config_error("layer fractions must run from 0 to 1");
  for (std::size_t i = 1; i < fractions.size(); ++i)
    if (fractions[i] <= fractions[i - 1])
      throw config_error("layer fractions must be strictly increasing");
  if (layer_phase.size() + 1 != fractions.size())
    throw config_error("need one phase per layer interval");

  Microstructure m;
  m.grid = g;
  m.phases = std::move(phases);
  m.phase.resize(g.nvox());
  const double L = g.length[axis];
  for (std::size_t v = 0; v < g.nvox(); ++v) {
    const double x = g.center(axis, g.coords(v)[axis]);
    int layer = static_cast<int>(layer_phase.size()) - 1;
    for (std::size_t l = 0; l + 1 < fractions.size(); ++l)
      if (x >= fractions[l] * L && x < fractions[l + 1] * L) {
        layer = static_cast<int>(l);
        break;
      }
    m.phase[v] = layer_phase[layer];
  }
  m.validate();
  return m;
}

/**
 * @brief Inner box of one phase centered in a frame of another.
 *
 * Voxels whose centers fall inside the centered box of size @p inner_extent
 * get @p inner_phase; the rest get @p outer_phase.  An extent equal to the
 * domain means no frame.
 */
inline Microstructure build_framed(const Grid &g,
                                   const std::array<double, 3> &inner_extent,
                                   Phase inner_phase, Phase outer_phase) {
  for (int a = 0; a < 3; ++a)
    if (inner_extent[a] > g.length[a])
      throw config_error("framed inner extent exceeds the domain");
  Microstructure m;
  m.grid = g;
  m.phases = {std::move(inner_phase), std::move(outer_phase)};
  m.phase.resize(g.nvox());
  for (std::size_t v = 0; v < g.nvox(); ++v) {
    const auto ijk = g.coords(v);
    bool inside = true;
    for (int a = 0; a < 3; ++a) {
      const double d = std::fabs(g.center(a, ijk[a]) - 0.5 * g.length[a]);
      if (d > 0.5 * inner_extent[a]) inside = false;
    }
    m.phase[v] = inside ? 0 : 1;
  }
  m.validate();
  return m;
}

/**
 * @brief Periodic Voronoi polycrystal with uniformly random grain
 *        orientations.
 *
 * Each voxel joins the seed nearest under the minimum-image metric; each
 * grain becomes its own phase carrying the crystal stiffness rotated by an
 * independent random orientation.  Deterministic for a fixed seed.
 */
inline Microstructure build_voronoi(const Grid &g, int n_grains,
                                    std::uint64_t seed,
                                    const CubicCrystal &crystal) {
  if (n_grains < 1) throw config_error("polycrystal needs at least one grain");
  detail::Rng rng(seed);
  std::vector<std::array<double, 3>> seeds(n_grains);
  for (auto &s : seeds)
    for (int a = 0; a < 3; ++a) s[a] = rng.uniform(0.0, g.length[a]);

  Microstructure m;
  m.grid = g;
  m.phases.resize(n_grains);
  m.orientations.resize(n_grains);
  const StiffnessTensor base = StiffnessTensor::cubic(crystal);
  for (int gr = 0; gr < n_grains; ++gr) {
    m.orientations[gr] = rng.rotation_quaternion();
    m.phases[gr] = {base.rotated(detail::quaternion_matrix(m.orientations[gr])),
                    crystal.rho};
  }

  m.phase.resize(g.nvox());
  for (std::size_t v = 0; v < g.nvox(); ++v) {
    const auto ijk = g.coords(v);
    double best = -1.0;
    int win = 0;
    for (int s = 0; s < n_grains; ++s) {
      double d2 = 0.0;
      for (int a = 0; a < 3; ++a) {
        double d = std::fabs(g.center(a, ijk[a]) - seeds[s][a]);
        d = std::min(d, g.length[a] - d);
        d2 += d * d;
      }
      if (best < 0.0 || d2 < best) {
        best = d2;
        win = s;
      }
    }
    m.phase[v] = win;
  }
  m.validate();
  return m;
}

/// Mean sphere-equivalent grain diameter realized by a polycrystal map.
inline double mean_grain_diameter(const Microstructure &m) {
  std::vector<std::size_t> count(m.phases.size(), 0);
  for (std::int32_t p : m.phase) ++count[p];
  const double vol = m.grid.voxel_volume();
  double sum = 0.0;
  std::size_t grains = 0;
  for (std::size_t c : count)
    if (c > 0) {
      sum += std::cbrt(6.0 * static_cast<double>(c) * vol / M_PI);
      ++grains;
    }
  return sum / static_cast<double>(grains);
}

} // namespace elastodyn::material
