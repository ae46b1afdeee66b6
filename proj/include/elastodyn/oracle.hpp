/**
 * @file oracle.hpp
 * @brief Analytical reference solutions and error metrics: traveling-pulse
 *        fields in homogeneous and layered rods, interface
 *        transmission/reflection coefficients, screened-Laplace (Helmholtz)
 *        Green functions, and least-squares decay/order fits.
 */
#pragma once

#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "core.hpp"
#include "fft.hpp"
#include "integrate.hpp"
#include "spectral.hpp"

namespace elastodyn::oracle {

/**
 * @brief Transmission and reflection amplitude ratios of a displacement
 *        pulse crossing an impedance contrast.
 *
 * @return (A_T/A_I, A_R/A_I) with A_T/A_I = 2/(1+Z2/Z1) and
 *         A_R/A_I = (1-Z2/Z1)/(1+Z2/Z1); their difference is exactly 1
 *         and A_I + A_R = A_T (displacement continuity).
 */
inline std::pair<double, double> transmission_coeffs(double z1, double z2) {
  if (!(z1 > 0.0) || !(z2 > 0.0))
    throw config_error("impedances must be positive");
  const double q = z2 / z1;
  return {2.0 / (1.0 + q), (1.0 - q) / (1.0 + q)};
}

/**
 * @brief Traveling-pulse solution in a homogeneous periodic rod whose
 *        source voxel is prescribed the pulse history.
 *
 * Prescribing u(x0, t) = U(t) from rest radiates the full-amplitude pulse
 * in both directions; each propagates at c and re-enters periodically.
 * Valid until the wave front returns to the (then pinned) source voxel,
 * i.e. for t < L/c.
 */
struct Wave1D {
  integrate::Pulse pulse;
  double c = 0.0;       //!< propagation speed
  int source_index = 0; //!< source voxel

  double valid_until(const Grid &g) const { return g.length[0] / c; }
};

inline std::vector<double> dalembert_field(const Wave1D &w, double t,
                                           const Grid &g) {
  if (t > w.valid_until(g))
    throw config_error("analytic rod solution evaluated past its validity "
                       "window (wave has re-crossed the source)");
  const int n = g.n[0];
  const double dx = g.dx(0), L = g.length[0];
  std::vector<double> u(g.nvox(), 0.0);
  for (int m = 0; m < n; ++m) {
    const double dr = ((m - w.source_index) % n + n) % n * dx;
    const double dl = dr > 0.0 ? L - dr : L; // left-mover reaches the source
                                             // itself only after a full loop
    double s = w.pulse.value(t - dr / w.c);  // right-moving, n = 0 image
    for (int img = 0; img < 3; ++img) {
      if (img > 0) s += w.pulse.value(t - (dr + img * L) / w.c);
      s += w.pulse.value(t - (dl + img * L) / w.c);
    }
    u[m] = s;
  }
  return u;
}

/**
 * @brief First-event solution in an A|B|A layered periodic rod with the
 *        source at the left edge of the first A layer.
 *
 * Covers the incident pulses, the first transmission into B from both
 * interfaces, and the first reflections back into A.  Exact until either
 * the transmitted front exits layer B or the reflected front returns to
 * the pinned source, whichever is first.
 */
struct LayeredWave1D {
  integrate::Pulse pulse;
  double cA = 0.0, cB = 0.0; //!< rod speeds of layers A and B
  double zA = 0.0, zB = 0.0; //!< impedances rho*c
  double s1 = 0.0, s2 = 0.0; //!< interface positions
  int source_index = 0;

  double valid_until(const Grid &g) const {
    const double x0 = g.center(0, source_index);
    const double exit_b = (s1 - x0) / cA + (s2 - s1) / cB;
    const double back_at_source = 2.0 * (s1 - x0) / cA;
    return std::min(exit_b, back_at_source);
  }
};

inline std::vector<double> layered_field(const LayeredWave1D &w, double t,
                                         const Grid &g) {
  if (t > w.valid_until(g))
    throw config_error("layered analytic solution evaluated past its "
                       "first-event validity window");
  const auto [at, ar] = transmission_coeffs(w.zA, w.zB);
  const double L = g.length[0];
  const double x0 = g.center(0, w.source_index);
  std::vector<double> u(g.nvox(), 0.0);
  for (int m = 0; m < g.n[0]; ++m) {
    const double x = g.center(0, m);
    double s = 0.0;
    if (x < w.s1) {
      // Layer A, source side: incident right-mover plus its reflection.
      s = w.pulse.value(t - (x - x0) / w.cA) +
          ar * w.pulse.value(t - ((w.s1 - x0) + (w.s1 - x)) / w.cA);
    } else if (x < w.s2) {
      // Layer B: transmissions entering from both interfaces.
      s = at * w.pulse.value(t - (w.s1 - x0) / w.cA - (x - w.s1) / w.cB) +
          at * w.pulse.value(t - (L - w.s2 + x0) / w.cA - (w.s2 - x) / w.cB);
    } else {
      // Layer A, far side (reached by the left-mover through the periodic
      // boundary): incident left-mover plus its reflection off s2.
      s = w.pulse.value(t - (L - x + x0) / w.cA) +
          ar * w.pulse.value(t - ((L - w.s2 + x0) + (x - w.s2)) / w.cA);
    }
    u[m] = s;
  }
  return u;
}

/// Infinite-medium Green function of u'' - K^2 u: -exp(-K|x-x'|)/(2K).
/// Finite at coincident points, value -1/(2K).
inline double helmholtz_green_1d(double K, double x, double xp) {
  if (!(K > 0.0)) throw config_error("screening constant K must be positive");
  return -std::exp(-K * std::fabs(x - xp)) / (2.0 * K);
}

/// Infinite-medium Green function of (lap - K^2) in 3D: -exp(-Kr)/(4 pi r).
/// Singular at r = 0.
inline double helmholtz_green_3d(double K, double r) {
  if (!(K > 0.0)) throw config_error("screening constant K must be positive");
  if (!(r > 0.0))
    throw config_error("3D screened Green function is singular at r = 0");
  return -std::exp(-K * r) / (4.0 * M_PI * r);
}

/// At-source value of the periodic-continuum Green function of
/// (K^2 - d^2/dx^2) on a ring of length L: coth(K L / 2) / (2 K).
inline double periodic_helmholtz_at_source(double K, double L) {
  return 1.0 / (std::tanh(K * L / 2.0) * 2.0 * K);
}

/**
 * @brief Exact discrete column of (K^2 - d^2/dx^2) u = delta_voxel on a
 *        periodic grid, by the closed-form frequency sum.
 *
 * The delta carries value 1 at the source voxel.  `lag` is the voxel
 * offset from the source.  This is the reference the spectral solver's
 * Green columns are pinned against at machine precision.
 */
inline double discrete_helmholtz_column(int n, double L, double K, int lag) {
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    const int shifted = (k <= (n - 1) / 2) ? k : k - n;
    const double xi = 2.0 * M_PI / L * shifted;
    s += std::cos(2.0 * M_PI * k * lag / n) / (xi * xi + K * K);
  }
  return s / n;
}

/// 3D analogue of discrete_helmholtz_column: spectral solve of
/// (K^2 - lap) u = delta_voxel, full field returned.
inline std::vector<double>
discrete_helmholtz_column_3d(const Grid &g, double K,
                             const std::array<int, 3> &src) {
  Fft fft(g);
  const auto fq = spectral::FrequencyGrid::make(g);
  std::vector<double> b(g.nvox(), 0.0);
  b[g.idx(src[0], src[1], src[2])] = 1.0;
  std::vector<cplx> bh(fft.ncplx());
  fft.forward(b.data(), bh.data());
  std::size_t m = 0;
  for (int m3 = 0; m3 < g.n[2]; ++m3)
    for (int m2 = 0; m2 < g.n[1]; ++m2)
      for (int m1 = 0; m1 < fft.n1c(); ++m1, ++m) {
        const double x0 = fq.xi_d[0][m1], x1 = fq.xi_d[1][m2],
                     x2 = fq.xi_d[2][m3];
        bh[m] /= x0 * x0 + x1 * x1 + x2 * x2 + K * K;
      }
  std::vector<double> u(g.nvox());
  fft.inverse(bh.data(), u.data());
  return u;
}

/// Relative L2 error ||ref - num|| / ||ref|| over all entries.
inline double l2_error(const std::vector<double> &numeric,
                       const std::vector<double> &reference) {
  if (numeric.size() != reference.size())
    throw config_error("field sizes differ in l2_error");
  double diff = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    const double d = numeric[i] - reference[i];
    diff += d * d;
    ref += reference[i] * reference[i];
  }
  if (ref == 0.0) throw config_error("l2_error against a zero reference");
  return std::sqrt(diff / ref);
}

/// Least-squares slope and intercept of y vs x.
inline std::pair<double, double> linear_fit(const std::vector<double> &x,
                                            const std::vector<double> &y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

/**
 * @brief Power-law exponent of front amplitude vs radius by log-log
 *        least squares.  Requires at least 4 samples.
 */
inline double
decay_exponent(const std::vector<std::pair<double, double>> &radius_amplitude) {
  if (radius_amplitude.size() < 4)
    throw config_error("decay fit needs at least 4 (radius, amplitude) samples");
  std::vector<double> lx, ly;
  for (const auto &[r, a] : radius_amplitude) {
    if (!(r > 0.0) || !(a > 0.0))
      throw config_error("decay fit samples must be positive");
    lx.push_back(std::log(r));
    ly.push_back(std::log(a));
  }
  return linear_fit(lx, ly).first;
}

/**
 * @brief Sub-sample peak location by a parabola through three samples
 *        around a discrete maximum.
 *
 * @return (offset in [-1/2, 1/2] grid units relative to the middle sample,
 *          interpolated peak value).
 */
inline std::pair<double, double> quadratic_peak(double ym, double y0,
                                                double yp) {
  const double denom = ym - 2.0 * y0 + yp;
  if (denom == 0.0) return {0.0, y0};
  const double off = 0.5 * (ym - yp) / denom;
  return {off, y0 - 0.25 * (ym - yp) * off};
}

} // namespace elastodyn::oracle
