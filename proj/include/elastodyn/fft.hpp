/**
 * @file fft.hpp
 * @brief Real-to-complex FFT engine for periodic voxel fields.
 *
 * Wraps FFTW with the project's grid conventions: the first grid axis is
 * fastest-varying in memory and is the half-spectrum axis of the r2c
 * transform.  Plans are created with FFTW_ESTIMATE so planning is
 * deterministic and cheap; plan creation and destruction are serialized
 * through a global mutex because the FFTW planner is not thread-safe.
 */
#pragma once

#include <complex>
#include <cstring>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "core.hpp"

namespace elastodyn {

using cplx = std::complex<double>;

/**
 * @brief One forward/inverse transform pair for a fixed grid.
 *
 * Executing transforms on a shared instance is not safe; concurrent workers
 * each construct their own engine.  The inverse preserves its input (FFTW's
 * multidimensional c2r would destroy it, so a scratch copy is taken) and
 * applies the 1/N normalization.
 */
class Fft {
public:
  explicit Fft(const Grid &g) : g_(g) {
    n1c_ = g.n[0] / 2 + 1;
    ncplx_ = static_cast<std::size_t>(n1c_) * g.n[1] * g.n[2];
    scratch_.resize(ncplx_);
    std::vector<double> rdummy(g.nvox());
    std::vector<cplx> cdummy(ncplx_);
    // Row-major dims for FFTW: slowest first, so our fastest axis is last.
    const int dims[3] = {g.n[2], g.n[1], g.n[0]};
    std::lock_guard<std::mutex> lock(plan_mutex());
    fwd_ = fftw_plan_dft_r2c(3, dims, rdummy.data(),
                             reinterpret_cast<fftw_complex *>(cdummy.data()),
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
    inv_ = fftw_plan_dft_c2r(3, dims,
                             reinterpret_cast<fftw_complex *>(cdummy.data()),
                             rdummy.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!fwd_ || !inv_) throw solver_error("FFTW plan creation failed");
  }

  ~Fft() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
  }

  Fft(const Fft &) = delete;
  Fft &operator=(const Fft &) = delete;

  const Grid &grid() const { return g_; }

  /// Stored modes along the first axis (conjugate half retained implicitly).
  int n1c() const { return n1c_; }

  /// Total stored complex modes.
  std::size_t ncplx() const { return ncplx_; }

  /// Linear index of stored mode (m1, m2, m3), m1 in [0, n1c).
  std::size_t cidx(int m1, int m2, int m3) const {
    return static_cast<std::size_t>(m1) +
           static_cast<std::size_t>(n1c_) *
               (static_cast<std::size_t>(m2) + static_cast<std::size_t>(g_.n[1]) * m3);
  }

  void forward(const double *in, cplx *out) const {
    fftw_execute_dft_r2c(fwd_, const_cast<double *>(in),
                         reinterpret_cast<fftw_complex *>(out));
  }

  /// Inverse transform with 1/N normalization; `in` is left intact.
  void inverse(const cplx *in, double *out) const {
    std::memcpy(scratch_.data(), in, ncplx_ * sizeof(cplx));
    fftw_execute_dft_c2r(inv_,
                         reinterpret_cast<fftw_complex *>(scratch_.data()),
                         out);
    const double s = 1.0 / static_cast<double>(g_.nvox());
    for (std::size_t i = 0; i < g_.nvox(); ++i) out[i] *= s;
  }

  static std::mutex &plan_mutex() {
    static std::mutex m;
    return m;
  }

private:
  Grid g_;
  int n1c_ = 0;
  std::size_t ncplx_ = 0;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
  mutable std::vector<cplx> scratch_;
};

} // namespace elastodyn
