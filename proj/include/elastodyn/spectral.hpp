/**
 * @file spectral.hpp
 * @brief Frequency grids, the implicit-step operator in mixed
 *        Fourier/real-space form, its homogeneous-reference preconditioner,
 *        and the preconditioned conjugate-gradient solver.
 *
 * The operator applied at every implicit step is
 *   A(u) = -beta dt^2 div( C(x) : sym grad u ) + rho(x) u,
 * with derivatives evaluated spectrally and the constitutive contraction in
 * real space.  A is linear, self-adjoint, and positive definite, so PCG with
 * the averaged-medium inverse as preconditioner applies.
 */
#pragma once

#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "core.hpp"
#include "fft.hpp"
#include "material.hpp"

namespace elastodyn::spectral {

/**
 * @brief Angular spatial frequencies per axis in natural DFT ordering.
 *
 * For axis size N and length L the frequency set is
 *   N odd:  (2 pi / L) (k - (N-1)/2), k = 0..N-1,
 *   N even: (2 pi / L) (k - N/2),
 * stored in the order the DFT emits them, with an explicit ascending-order
 * index map.  `xi_d` carries the first-derivative factors: identical to
 * `xi` except that the unmatched Nyquist mode of an even axis is zeroed,
 * which keeps the assembled operator exactly self-adjoint.
 */
struct FrequencyGrid {
  std::array<std::vector<double>, 3> xi;
  std::array<std::vector<double>, 3> xi_d;
  std::array<std::vector<int>, 3> sorted_to_natural;

  static FrequencyGrid make(const Grid &g) {
    FrequencyGrid f;
    for (int a = 0; a < 3; ++a) {
      const int n = g.n[a];
      const double step = 2.0 * M_PI / g.length[a];
      f.xi[a].resize(n);
      f.xi_d[a].resize(n);
      for (int m = 0; m < n; ++m) {
        const int shifted = (m <= (n - 1) / 2) ? m : m - n;
        f.xi[a][m] = step * shifted;
        f.xi_d[a][m] = f.xi[a][m];
      }
      if (n % 2 == 0) f.xi_d[a][n / 2] = 0.0;
      f.sorted_to_natural[a].resize(n);
      std::iota(f.sorted_to_natural[a].begin(), f.sorted_to_natural[a].end(), 0);
      std::sort(f.sorted_to_natural[a].begin(), f.sorted_to_natural[a].end(),
                [&](int p, int q) { return f.xi[a][p] < f.xi[a][q]; });
    }
    return f;
  }
};

/// Iteration record of one PCG solve.
struct PcgResult {
  int iterations = 0;
  double rel_residual = 0.0;
};

/**
 * @brief Preconditioned conjugate gradients on flat real vectors.
 *
 * Convergence criterion: ||b - A x|| / ||b|| <= tol.  The initial x is the
 * warm start.  A zero right-hand side short-circuits to x = 0 with zero
 * iterations.  Throws solver_error when max_iter is exhausted.
 *
 * @param A  Functor A(in, out) applying the operator.
 * @param M  Functor M(in, out) applying the preconditioner.
 * @param history  Optional: appended with sqrt(r.z) after each iteration.
 */
template <class OpFn, class PcFn>
PcgResult pcg(OpFn &&A, PcFn &&M, const std::vector<double> &b,
              std::vector<double> &x, double tol, int max_iter = 500,
              std::vector<double> *history = nullptr) {
  const double bn = std::sqrt(norm2(b));
  if (bn == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return {0, 0.0};
  }

  std::vector<double> r(b.size()), z(b.size()), p(b.size()), ap(b.size());
  A(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  const double rn0 = std::sqrt(norm2(r));
  if (rn0 / bn <= tol) return {0, rn0 / bn};

  M(r, z);
  p = z;
  double rz = dot(r, z);
  for (int it = 1; it <= max_iter; ++it) {
    A(p, ap);
    const double alpha = rz / dot(p, ap);
    axpy(alpha, p, x);
    axpy(-alpha, ap, r);
    const double rn = std::sqrt(norm2(r));
    M(r, z);
    const double rz_next = dot(r, z);
    if (history) history->push_back(std::sqrt(std::max(rz_next, 0.0)));
    if (rn / bn <= tol) return {it, rn / bn};
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
  }
  throw solver_error("PCG did not converge within " +
                     std::to_string(max_iter) + " iterations (residual " +
                     std::to_string(std::sqrt(norm2(r)) / bn) + ")");
}

/**
 * @brief Scalar rod operator A(u) = -beta dt^2 d/dx(E(x) du/dx) + rho(x) u
 *        on a periodic 1D grid.
 */
class Operator1D {
public:
  Operator1D(const material::Microstructure &micro, double beta, double dt)
      : g_(micro.grid), fft_(g_), fq_(FrequencyGrid::make(g_)),
        bdt2_(beta * dt * dt), E_(micro.young_profile()),
        rho_(micro.density_profile()), ch_(fft_.ncplx()), rw_(g_.nvox()) {
    if (!g_.is_1d())
      throw config_error("Operator1D requires a grid with N2 = N3 = 1");
  }

  double beta_dt2() const { return bdt2_; }
  const std::vector<double> &rho() const { return rho_; }
  const std::vector<double> &young() const { return E_; }
  const Grid &grid() const { return g_; }

  /// d/dx( E(x) du/dx ), evaluated spectrally.
  void div_stress(const std::vector<double> &u, std::vector<double> &out) {
    derivative(u.data(), rw_.data());
    for (std::size_t v = 0; v < rw_.size(); ++v) rw_[v] *= E_[v];
    derivative(rw_.data(), out.data());
  }

  void apply(const std::vector<double> &u, std::vector<double> &out) {
    div_stress(u, out);
    for (std::size_t v = 0; v < out.size(); ++v)
      out[v] = -bdt2_ * out[v] + rho_[v] * u[v];
  }

  /// Elastic strain energy 1/2 integral E (du/dx)^2.
  double strain_energy(const std::vector<double> &u) {
    derivative(u.data(), rw_.data());
    double e = 0.0;
    for (std::size_t v = 0; v < rw_.size(); ++v) e += E_[v] * rw_[v] * rw_[v];
    return 0.5 * e * g_.voxel_volume();
  }

private:
  void derivative(const double *in, double *out) {
    fft_.forward(in, ch_.data());
    for (int m = 0; m < fft_.n1c(); ++m) ch_[m] *= cplx(0.0, fq_.xi_d[0][m]);
    fft_.inverse(ch_.data(), out);
  }

  Grid g_;
  Fft fft_;
  FrequencyGrid fq_;
  double bdt2_;
  std::vector<double> E_, rho_;
  std::vector<cplx> ch_;
  std::vector<double> rw_;
};

/// Exact inverse of the averaged-medium rod operator, applied per mode.
class Precond1D {
public:
  Precond1D(const material::Microstructure &micro, double beta, double dt)
      : fft_(micro.grid), inv_(fft_.ncplx()) {
    const auto fq = FrequencyGrid::make(micro.grid);
    const auto E = micro.young_profile();
    const auto rho = micro.density_profile();
    const double n = static_cast<double>(micro.grid.nvox());
    const double Ebar = std::accumulate(E.begin(), E.end(), 0.0) / n;
    const double rbar = std::accumulate(rho.begin(), rho.end(), 0.0) / n;
    const double bdt2 = beta * dt * dt;
    for (int m = 0; m < fft_.n1c(); ++m) {
      const double xi = fq.xi_d[0][m];
      inv_[m] = 1.0 / (bdt2 * Ebar * xi * xi + rbar);
    }
  }

  void apply(const std::vector<double> &r, std::vector<double> &z) {
    ch_.resize(fft_.ncplx());
    fft_.forward(r.data(), ch_.data());
    for (std::size_t m = 0; m < ch_.size(); ++m) ch_[m] *= inv_[m];
    fft_.inverse(ch_.data(), z.data());
  }

private:
  Fft fft_;
  std::vector<double> inv_;
  std::vector<cplx> ch_;
};

namespace detail_3d {
/// Voigt pair (a, b) of each of the six strain/stress slots.
inline constexpr int vi[6] = {0, 1, 2, 1, 0, 0};
inline constexpr int vj[6] = {0, 1, 2, 2, 2, 1};
/// Voigt slot of the component pair (j, k).
inline constexpr int vmap[3][3] = {{0, 5, 4}, {5, 1, 3}, {4, 3, 2}};
} // namespace detail_3d

/**
 * @brief Vector operator A(u)_j = -beta dt^2 [div C(x):sym grad u]_j
 *        + rho(x) u_j on a periodic voxel grid.
 *
 * One application costs 18 transforms: 3 forward for u, 6 inverse for the
 * strain components, 6 forward for the stress, 3 inverse for the
 * divergence.  Not safe for concurrent use on one instance (shared scratch);
 * concurrent column solves construct one operator per worker.
 */
class Operator3D {
public:
  Operator3D(const material::Microstructure &micro, double beta, double dt)
      : micro_(&micro), g_(micro.grid), fft_(g_), fq_(FrequencyGrid::make(g_)),
        bdt2_(beta * dt * dt), rho_(micro.density_profile()) {
    w_.reserve(micro.phases.size());
    for (const auto &p : micro.phases) w_.push_back(p.C.voigt_w());
    for (auto &c : uh_) c.resize(fft_.ncplx());
    for (auto &c : th_) c.resize(fft_.ncplx());
    for (auto &r : rw_) r.resize(g_.nvox());
  }

  const Grid &grid() const { return g_; }
  const std::vector<double> &rho() const { return rho_; }
  double beta_dt2() const { return bdt2_; }

  /// [div sigma(u)]_j with sigma = C(x) : sym grad u.  Component-major
  /// pointer layout, 3 planes of nvox values.
  void div_stress(const double *u, double *out) {
    strain_and_stress(u);
    // Stress back to Fourier space, then divergence (i xi_k sigma_jk).
    for (int J = 0; J < 6; ++J) fft_.forward(rw_[J].data(), th_[J].data());
    using namespace detail_3d;
    for (int j = 0; j < 3; ++j) {
      std::size_t m = 0;
      for (int m3 = 0; m3 < g_.n[2]; ++m3)
        for (int m2 = 0; m2 < g_.n[1]; ++m2)
          for (int m1 = 0; m1 < fft_.n1c(); ++m1, ++m) {
            const double x0 = fq_.xi_d[0][m1], x1 = fq_.xi_d[1][m2],
                         x2 = fq_.xi_d[2][m3];
            const cplx s = x0 * th_[vmap[j][0]][m] + x1 * th_[vmap[j][1]][m] +
                           x2 * th_[vmap[j][2]][m];
            uh_[j][m] = cplx(0.0, 1.0) * s;
          }
      fft_.inverse(uh_[j].data(), out + j * g_.nvox());
    }
  }

  void apply(const double *u, double *out) {
    div_stress(u, out);
    for (int c = 0; c < 3; ++c) {
      double *o = out + c * g_.nvox();
      const double *ui = u + c * g_.nvox();
      for (std::size_t v = 0; v < g_.nvox(); ++v)
        o[v] = -bdt2_ * o[v] + rho_[v] * ui[v];
    }
  }

  void apply(const std::vector<double> &x, std::vector<double> &y) {
    y.resize(x.size());
    apply(x.data(), y.data());
  }
  void apply(const Field &u, Field &out) { apply(u.v.data(), out.v.data()); }
  void div_stress(const std::vector<double> &u, std::vector<double> &out) {
    out.resize(u.size());
    div_stress(u.data(), out.data());
  }
  void div_stress(const Field &u, Field &out) {
    div_stress(u.v.data(), out.v.data());
  }

  /// Elastic strain energy 1/2 integral eps : C : eps.
  double strain_energy(const double *u) {
    strain_and_stress(u, /*keep_strain=*/true);
    double e = 0.0;
    for (std::size_t v = 0; v < g_.nvox(); ++v) {
      double s = 0.0;
      for (int J = 0; J < 6; ++J)
        s += (J < 3 ? 1.0 : 2.0) * rw_[J][v] * eps_[J][v];
      e += s;
    }
    return 0.5 * e * g_.voxel_volume();
  }
  double strain_energy(const std::vector<double> &u) {
    return strain_energy(u.data());
  }
  double strain_energy(const Field &u) { return strain_energy(u.v.data()); }

private:
  /// Shared head of div_stress / strain_energy: rw_[J] ends up holding the
  /// real-space stress; with keep_strain the strain is saved to eps_.
  void strain_and_stress(const double *u, bool keep_strain = false) {
    using namespace detail_3d;
    for (int c = 0; c < 3; ++c)
      fft_.forward(u + c * g_.nvox(), uh_[c].data());
    for (int J = 0; J < 6; ++J) {
      const int a = vi[J], b = vj[J];
      std::size_t m = 0;
      for (int m3 = 0; m3 < g_.n[2]; ++m3)
        for (int m2 = 0; m2 < g_.n[1]; ++m2)
          for (int m1 = 0; m1 < fft_.n1c(); ++m1, ++m) {
            const double xd[3] = {fq_.xi_d[0][m1], fq_.xi_d[1][m2],
                                  fq_.xi_d[2][m3]};
            // eps_ab = i/2 (u_a xi_b + u_b xi_a)
            th_[J][m] = cplx(0.0, 0.5) * (uh_[a][m] * xd[b] + uh_[b][m] * xd[a]);
          }
      fft_.inverse(th_[J].data(), rw_[J].data());
    }
    if (keep_strain)
      for (int J = 0; J < 6; ++J) eps_[J] = rw_[J];
    // Constitutive contraction per voxel.
    for (std::size_t v = 0; v < g_.nvox(); ++v) {
      const double *W = w_[micro_->phase[v]].data();
      double eJ[6];
      for (int J = 0; J < 6; ++J) eJ[J] = rw_[J][v];
      for (int J = 0; J < 6; ++J) {
        const double *row = W + J * 6;
        rw_[J][v] = row[0] * eJ[0] + row[1] * eJ[1] + row[2] * eJ[2] +
                    row[3] * eJ[3] + row[4] * eJ[4] + row[5] * eJ[5];
      }
    }
  }

  const material::Microstructure *micro_;
  Grid g_;
  Fft fft_;
  FrequencyGrid fq_;
  double bdt2_;
  std::vector<double> rho_;
  std::vector<std::array<double, 36>> w_;
  std::array<std::vector<cplx>, 3> uh_;
  std::array<std::vector<cplx>, 6> th_;
  std::array<std::vector<double>, 6> rw_;
  std::array<std::vector<double>, 6> eps_;
};

/**
 * @brief Averaged-medium inverse (beta dt^2 Kbar(xi) + rhobar I)^-1 stored as
 *        a symmetric 3x3 block per retained mode.
 *
 * Kbar is the acoustic tensor of the volume-averaged stiffness.  At xi = 0
 * the block reduces to (1/rhobar) I.  Exact for homogeneous media.
 */
class Precond3D {
public:
  Precond3D(const material::Microstructure &micro, double beta, double dt)
      : g_(micro.grid), fft_(g_) {
    const auto fq = FrequencyGrid::make(g_);
    const material::Phase avg = micro.averaged();
    const double bdt2 = beta * dt * dt;
    blocks_.resize(fft_.ncplx());
    std::size_t m = 0;
    for (int m3 = 0; m3 < g_.n[2]; ++m3)
      for (int m2 = 0; m2 < g_.n[1]; ++m2)
        for (int m1 = 0; m1 < fft_.n1c(); ++m1, ++m) {
          const std::array<double, 3> xd = {fq.xi_d[0][m1], fq.xi_d[1][m2],
                                            fq.xi_d[2][m3]};
          std::array<double, 9> k{};
          for (int i = 0; i < 3; ++i)
            for (int kk = 0; kk < 3; ++kk) {
              double s = 0.0;
              for (int j = 0; j < 3; ++j)
                for (int l = 0; l < 3; ++l)
                  s += avg.C(i, j, kk, l) * xd[j] * xd[l];
              k[i * 3 + kk] = bdt2 * s + (i == kk ? avg.rho : 0.0);
            }
          blocks_[m] = invert_sym3(k);
        }
    for (auto &c : ch_) c.resize(fft_.ncplx());
  }

  void apply(const std::vector<double> &r, std::vector<double> &z) {
    const std::size_t nv = g_.nvox();
    for (int c = 0; c < 3; ++c) fft_.forward(r.data() + c * nv, ch_[c].data());
    for (std::size_t m = 0; m < blocks_.size(); ++m) {
      const auto &b = blocks_[m];
      const cplx v0 = ch_[0][m], v1 = ch_[1][m], v2 = ch_[2][m];
      ch_[0][m] = b[0] * v0 + b[1] * v1 + b[2] * v2;
      ch_[1][m] = b[1] * v0 + b[3] * v1 + b[4] * v2;
      ch_[2][m] = b[2] * v0 + b[4] * v1 + b[5] * v2;
    }
    z.resize(3 * nv);
    for (int c = 0; c < 3; ++c) fft_.inverse(ch_[c].data(), z.data() + c * nv);
  }

private:
  /// Inverse of a symmetric 3x3, packed (00, 01, 02, 11, 12, 22).
  static std::array<double, 6> invert_sym3(const std::array<double, 9> &a) {
    const double a00 = a[0], a01 = a[1], a02 = a[2], a11 = a[4], a12 = a[5],
                 a22 = a[8];
    const double c00 = a11 * a22 - a12 * a12;
    const double c01 = a02 * a12 - a01 * a22;
    const double c02 = a01 * a12 - a02 * a11;
    const double det = a00 * c00 + a01 * c01 + a02 * c02;
    if (!(det > 0.0))
      throw solver_error("preconditioner block is not positive definite");
    const double c11 = a00 * a22 - a02 * a02;
    const double c12 = a02 * a01 - a00 * a12;
    const double c22 = a00 * a11 - a01 * a01;
    return {c00 / det, c01 / det, c02 / det, c11 / det, c12 / det, c22 / det};
  }

  Grid g_;
  Fft fft_;
  std::vector<std::array<double, 6>> blocks_;
  std::array<std::vector<cplx>, 3> ch_;
};

} // namespace elastodyn::spectral
