/**
 * @file greens.hpp
 * @brief Discrete influence matrix G coupling point forces on an embedded
 *        manifold to the displacements they induce there.
 *
 * Column (p, j) of G is the displacement response to a unit force density
 * occupying exactly the voxel of manifold point p in direction j, obtained
 * by one PCG solve of the implicit-step operator.  Prescribing U(t) on the
 * manifold then reduces to a dense solve with the stored LU factorization.
 */
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <thread>
#include <vector>

#include "core.hpp"
#include "detail/hash.hpp"
#include "detail/linalg.hpp"
#include "material.hpp"
#include "spectral.hpp"

namespace elastodyn::greens {

/// One constrained degree of freedom: a voxel and a displacement component.
struct Dof {
  std::size_t voxel = 0;
  int comp = 0;
  bool operator==(const Dof &o) const {
    return voxel == o.voxel && comp == o.comp;
  }
};

/**
 * @brief Ordered manifold degrees of freedom, interleaved point-major:
 *        dof index I = d*(point index) + component slot.
 */
struct Manifold {
  std::vector<Dof> dofs;

  std::size_t size() const { return dofs.size(); }

  void validate(const Grid &g) const {
    if (dofs.empty()) throw config_error("manifold is empty");
    for (const Dof &d : dofs) {
      if (d.voxel >= g.nvox() || d.comp < 0 || d.comp > 2)
        throw config_error("manifold dof out of range");
      for (const Dof &o : dofs)
        if (&o != &d && o == d)
          throw config_error("manifold contains duplicate dofs");
    }
  }

  static Manifold point(const Grid &g, int i, int j, int k,
                        const std::vector<int> &comps) {
    Manifold m;
    for (int c : comps) m.dofs.push_back({g.idx(i, j, k), c});
    return m;
  }

  /// All voxels of the slice `index` along `axis`.
  static Manifold plane(const Grid &g, int axis, int index,
                        const std::vector<int> &comps) {
    Manifold m;
    for (std::size_t v = 0; v < g.nvox(); ++v)
      if (g.coords(v)[axis] == index)
        for (int c : comps) m.dofs.push_back({v, c});
    return m;
  }

  /// Voxels whose centers lie within `radius_vox` voxel spacings of the
  /// center voxel (minimum-image metric, spacing of the finest axis).
  static Manifold ball(const Grid &g, const std::array<int, 3> &center,
                       double radius_vox, const std::vector<int> &comps) {
    Manifold m;
    double h = g.length[0];
    for (int a = 0; a < 3; ++a)
      if (g.n[a] > 1) h = std::min(h, g.dx(a));
    const double r = radius_vox * h;
    // Round-off guard so a radius that lands exactly on a voxel center
    // (radius_vox = 1 and its face neighbors) includes it deterministically.
    const double r2 = r * r + 1e-9 * h * h;
    for (std::size_t v = 0; v < g.nvox(); ++v) {
      const auto ijk = g.coords(v);
      double d2 = 0.0;
      for (int a = 0; a < 3; ++a) {
        double d = std::fabs(g.center(a, ijk[a]) - g.center(a, center[a]));
        d = std::min(d, g.length[a] - d);
        d2 += d * d;
      }
      if (d2 <= r2)
        for (int c : comps) m.dofs.push_back({v, c});
    }
    return m;
  }
};

/// Content hash tying a factorized G to the inputs it was assembled from.
inline std::uint64_t
content_hash(const material::Microstructure &micro, const Manifold &gamma,
             double beta, double dt, double tol) {
  detail::Hasher h;
  for (int a = 0; a < 3; ++a) {
    h.add(static_cast<std::int64_t>(micro.grid.n[a]));
    h.add(micro.grid.length[a]);
  }
  h.add(micro.phase);
  for (const auto &p : micro.phases) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) h.add(p.C(i, j, k, l));
    h.add(p.rho);
  }
  for (const Dof &d : gamma.dofs) {
    h.add(static_cast<std::int64_t>(d.voxel));
    h.add(static_cast<std::int64_t>(d.comp));
  }
  h.add(beta);
  h.add(dt);
  h.add(tol);
  return h.value();
}

/**
 * @brief Dense influence matrix with its LU factorization.
 *
 * Immutable after assembly.  The raw matrix is kept on fresh assemblies for
 * diagnostics (symmetry checks); cache reloads restore only the
 * factorization, which is all solve_forces needs.
 */
class GreensMatrix {
public:
  int n() const { return lu_.n; }
  std::uint64_t hash() const { return hash_; }
  const std::vector<double> &matrix() const { return g_; }
  bool has_matrix() const { return !g_.empty(); }

  /**
   * @brief Forces reproducing the prescribed manifold displacements.
   *
   * @param v  U(t_n) minus the force-free displacement u_b restricted to
   *           the manifold dofs.
   * @return F with beta dt^2 G F = v.
   */
  std::vector<double> solve_forces(const std::vector<double> &v,
                                   double beta_dt2) const {
    std::vector<double> f = v;
    lu_.solve(f);
    for (double &x : f) x /= beta_dt2;
    return f;
  }

  /**
   * @brief Assemble by solving one unit-force problem per manifold dof.
   *
   * Columns are solved at tol/10 (their error enters every later step) and
   * distributed round-robin over `nthreads` workers, each with its own
   * operator instance; the result is identical for any thread count.
   */
  static GreensMatrix assemble(const material::Microstructure &micro,
                               double beta, double dt, const Manifold &gamma,
                               double tol, int nthreads = 1) {
    gamma.validate(micro.grid);
    const int n = static_cast<int>(gamma.size());
    const std::size_t flat =
        micro.grid.is_1d() ? micro.grid.nvox() : 3 * micro.grid.nvox();
    std::vector<double> g(static_cast<std::size_t>(n) * n);

    const int workers = std::max(1, std::min(nthreads, n));
    std::vector<std::exception_ptr> errors(workers);
    auto run = [&](int w) {
      try {
        std::unique_ptr<spectral::Operator1D> op1;
        std::unique_ptr<spectral::Precond1D> pc1;
        std::unique_ptr<spectral::Operator3D> op3;
        std::unique_ptr<spectral::Precond3D> pc3;
        if (micro.grid.is_1d()) {
          op1 = std::make_unique<spectral::Operator1D>(micro, beta, dt);
          pc1 = std::make_unique<spectral::Precond1D>(micro, beta, dt);
        } else {
          op3 = std::make_unique<spectral::Operator3D>(micro, beta, dt);
          pc3 = std::make_unique<spectral::Precond3D>(micro, beta, dt);
        }
        std::vector<double> b(flat), x(flat);
        for (int col = w; col < n; col += workers) {
          const Dof &src = gamma.dofs[col];
          std::fill(b.begin(), b.end(), 0.0);
          b[src.comp * micro.grid.nvox() + src.voxel] = 1.0;
          std::fill(x.begin(), x.end(), 0.0);
          if (op1)
            spectral::pcg([&](const auto &in, auto &out) { op1->apply(in, out); },
                          [&](const auto &in, auto &out) { pc1->apply(in, out); },
                          b, x, tol / 10.0);
          else
            spectral::pcg([&](const auto &in, auto &out) { op3->apply(in, out); },
                          [&](const auto &in, auto &out) { pc3->apply(in, out); },
                          b, x, tol / 10.0);
          for (int row = 0; row < n; ++row) {
            const Dof &obs = gamma.dofs[row];
            g[static_cast<std::size_t>(row) * n + col] =
                x[obs.comp * micro.grid.nvox() + obs.voxel];
          }
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    };

    if (workers == 1) {
      run(0);
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
      for (auto &t : pool) t.join();
    }
    for (auto &e : errors)
      if (e) std::rethrow_exception(e);

    GreensMatrix gm;
    gm.g_ = g;
    gm.lu_ = detail::Lu::factorize(std::move(g), n);
    gm.hash_ = content_hash(micro, gamma, beta, dt, tol);
    return gm;
  }

  /// Write the factorization to a cache file (little-endian host layout).
  void save(const std::string &path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open greens cache for writing: " + path);
    const char magic[4] = {'E', 'D', 'G', 'C'};
    const std::uint32_t version = 1;
    const std::int64_t n = lu_.n;
    f.write(magic, 4);
    f.write(reinterpret_cast<const char *>(&version), sizeof version);
    f.write(reinterpret_cast<const char *>(&hash_), sizeof hash_);
    f.write(reinterpret_cast<const char *>(&n), sizeof n);
    f.write(reinterpret_cast<const char *>(lu_.a.data()),
            static_cast<std::streamsize>(lu_.a.size() * sizeof(double)));
    f.write(reinterpret_cast<const char *>(lu_.piv.data()),
            static_cast<std::streamsize>(lu_.piv.size() * sizeof(std::int64_t)));
    if (!f) throw io_error("short write on greens cache: " + path);
  }

  /// Reload a factorization if the file exists and its hash matches.
  static std::optional<GreensMatrix> load(const std::string &path,
                                          std::uint64_t expected_hash) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return std::nullopt;
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t hash = 0;
    std::int64_t n = 0;
    f.read(magic, 4);
    f.read(reinterpret_cast<char *>(&version), sizeof version);
    f.read(reinterpret_cast<char *>(&hash), sizeof hash);
    f.read(reinterpret_cast<char *>(&n), sizeof n);
    if (!f || std::memcmp(magic, "EDGC", 4) != 0 || version != 1)
      throw io_error("greens cache has an unrecognized header: " + path);
    if (hash != expected_hash || n <= 0) return std::nullopt;
    GreensMatrix gm;
    gm.hash_ = hash;
    gm.lu_.n = static_cast<int>(n);
    gm.lu_.a.resize(static_cast<std::size_t>(n) * n);
    gm.lu_.piv.resize(n);
    f.read(reinterpret_cast<char *>(gm.lu_.a.data()),
           static_cast<std::streamsize>(gm.lu_.a.size() * sizeof(double)));
    f.read(reinterpret_cast<char *>(gm.lu_.piv.data()),
           static_cast<std::streamsize>(gm.lu_.piv.size() * sizeof(std::int64_t)));
    if (!f) throw io_error("greens cache truncated: " + path);
    return gm;
  }

private:
  std::vector<double> g_;
  detail::Lu lu_;
  std::uint64_t hash_ = 0;
};

/// Spread manifold forces into a zero field (flat component-major layout).
inline void scatter_forces(const Manifold &gamma,
                           const std::vector<double> &f, std::size_t nvox,
                           std::vector<double> &field) {
  std::fill(field.begin(), field.end(), 0.0);
  for (std::size_t i = 0; i < gamma.dofs.size(); ++i)
    field[gamma.dofs[i].comp * nvox + gamma.dofs[i].voxel] = f[i];
}

} // namespace elastodyn::greens
