/**
 * @file integrate.hpp
 * @brief Time marching: implicit Newmark-beta stepping with manifold
 *        displacement enforcement, explicit central-difference stepping,
 *        stability estimates, and energy diagnostics.
 */
#pragma once

#include <cmath>
#include <iostream>
#include <memory>
#include <vector>

#include "core.hpp"
#include "greens.hpp"
#include "material.hpp"
#include "spectral.hpp"

namespace elastodyn::integrate {

/**
 * @brief Bell-shaped displacement pulse
 *        U(t) = A (t (T - t))^alpha / (T^2/4)^alpha on (0, T), T = pi/omega,
 *        zero outside.  Derivatives are closed-form, never finite-differenced.
 */
struct Pulse {
  double A = 0.0;
  double omega = 0.0;
  int alpha = 4;

  double duration() const { return M_PI / omega; }

  double value(double t) const {
    const double T = duration();
    if (t <= 0.0 || t >= T) return 0.0;
    return A * std::pow(t * (T - t), alpha) / std::pow(T * T / 4.0, alpha);
  }

  double deriv(double t) const {
    const double T = duration();
    if (t <= 0.0 || t >= T) return 0.0;
    return A * alpha * std::pow(t * (T - t), alpha - 1) * (T - 2.0 * t) /
           std::pow(T * T / 4.0, alpha);
  }

  double accel(double t) const {
    const double T = duration();
    if (t <= 0.0 || t >= T) return 0.0;
    const double q = t * (T - t), d = T - 2.0 * t;
    return A * alpha *
           ((alpha - 1) * std::pow(q, alpha - 2) * d * d -
            2.0 * std::pow(q, alpha - 1)) /
           std::pow(T * T / 4.0, alpha);
  }
};

/// Stability estimates for explicit stepping.
struct StableDt {
  double spectral = 0.0; //!< 2/omega_max of the spectral discretization
  double fe = 0.0;       //!< min(dx)/c, the finite-element CFL convention
};

/**
 * @brief Time-step bounds from the fastest phase present.
 *
 * omega_max is evaluated at the largest retained frequency vector
 * xi_a = pi N_a / L_a (axes with a single voxel carry no modes and
 * contribute zero).  1D grids use the scalar rod operator, so the rod
 * speed governs; in 3D the acoustic-tensor eigenvalues do.  For
 * heterogeneous media the bound of the fastest phase is returned, which is
 * conservative; explicit runs additionally apply a safety factor.
 */
inline StableDt stable_dt(const material::Microstructure &micro) {
  const Grid &g = micro.grid;
  std::array<double, 3> xi{};
  for (int a = 0; a < 3; ++a)
    xi[a] = g.n[a] > 1 ? M_PI * g.n[a] / g.length[a] : 0.0;

  std::vector<bool> present(micro.phases.size(), false);
  for (std::int32_t p : micro.phase) present[p] = true;

  double omega_sq = 0.0;
  for (std::size_t p = 0; p < micro.phases.size(); ++p) {
    if (!present[p]) continue;
    const material::Phase &ph = micro.phases[p];
    if (g.is_1d()) {
      omega_sq = std::max(omega_sq, ph.young_iso() / ph.rho * xi[0] * xi[0]);
    } else {
      std::array<double, 9> q{};
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) {
          double s = 0.0;
          for (int j = 0; j < 3; ++j)
            for (int l = 0; l < 3; ++l)
              s += ph.C(i, j, k, l) * xi[j] * xi[l];
          q[i * 3 + k] = s / ph.rho;
        }
      const auto ev = detail::symmetric_eigenvalues({q.begin(), q.end()}, 3);
      omega_sq = std::max(omega_sq, *std::max_element(ev.begin(), ev.end()));
    }
  }

  StableDt out;
  out.spectral = 2.0 / std::sqrt(omega_sq);
  double dx = g.length[0];
  for (int a = 0; a < 3; ++a) dx = std::min(dx, g.dx(a));
  double cmax = 0.0;
  for (std::size_t p = 0; p < micro.phases.size(); ++p)
    if (present[p])
      cmax = std::max(cmax, g.is_1d()
                                ? std::sqrt(micro.phases[p].young_iso() /
                                            micro.phases[p].rho)
                                : micro.phases[p].fastest_speed());
  out.fe = dx / cmax;
  return out;
}

/// Acceleration consistent with a displacement field and body force:
/// a = (div sigma(u) + f) / rho, derivatives spectral.
template <class Op>
std::vector<double> initial_acceleration(Op &op, const std::vector<double> &u,
                                         const std::vector<double> &f) {
  const std::vector<double> &rho = op.rho();
  const std::size_t nvox = rho.size();
  std::vector<double> a(u.size());
  op.div_stress(u, a);
  for (std::size_t i = 0; i < a.size(); ++i)
    a[i] = (a[i] + f[i]) / rho[i % nvox];
  return a;
}

/// Kinetic and elastic energy of a state (elastic strain evaluated
/// spectrally through the operator).
template <class Op>
std::pair<double, double> total_energy(Op &op, const std::vector<double> &u,
                                       const std::vector<double> &v) {
  const std::vector<double> &rho = op.rho();
  const std::size_t nvox = rho.size();
  double kin = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    kin += rho[i % nvox] * v[i] * v[i];
  kin *= 0.5 * op.grid().voxel_volume();
  return {kin, op.strain_energy(u)};
}

/// Per-step diagnostics.
struct StepRecord {
  double t = 0.0;
  int iters_b = 0;     //!< PCG iterations of the force-free solve
  int iters_f = 0;     //!< PCG iterations of the force solve (implicit only)
  double gamma_dev = 0.0; //!< max |u - U(t)| over the manifold
  double kinetic = 0.0;
  double elastic = 0.0;
};

struct StepperOptions {
  double dt = 0.0;
  double tol = 1e-8;
  bool track_energy = false;
  bool record_forces = false;
};

/// Common stepper interface consumed by the scenario runner.
class Stepper {
public:
  virtual ~Stepper() = default;
  virtual void step() = 0;
  virtual double time() const = 0;
  virtual int steps_taken() const = 0;
  virtual const std::vector<double> &displacement() const = 0;
  virtual const std::vector<double> &velocity() const = 0;
  virtual const std::vector<double> &acceleration() const = 0;
  virtual const std::vector<StepRecord> &records() const = 0;
  virtual const std::vector<std::vector<double>> &forces() const = 0;
};

/**
 * @brief Implicit Newmark stepper (beta = 1/4, gamma = 1/2 default).
 *
 * Each step solves the force-free problem A u_b = b, computes the manifold
 * forces from the influence matrix, solves A u_f = f, and combines
 * u_n = beta dt^2 u_f + u_b.  Both solves warm-start from their previous
 * counterparts.  Unconditionally stable for the default parameters.
 */
template <class Op, class Pc>
class ImplicitStepper final : public Stepper {
public:
  ImplicitStepper(const material::Microstructure &micro,
                  const greens::Manifold &gamma,
                  const std::vector<double> &dof_amp, const Pulse &pulse,
                  const greens::GreensMatrix &gm, const StepperOptions &opt,
                  double beta = 0.25, double newmark_gamma = 0.5)
      : op_(micro, beta, opt.dt), pc_(micro, beta, opt.dt), gamma_(gamma),
        amp_(dof_amp), pulse_(pulse), gm_(&gm), opt_(opt), beta_(beta),
        ng_(newmark_gamma), dt_(opt.dt) {
    const std::size_t flat =
        micro.grid.is_1d() ? micro.grid.nvox() : 3 * micro.grid.nvox();
    u_.assign(flat, 0.0);
    v_.assign(flat, 0.0);
    a_.assign(flat, 0.0);
    ub_.assign(flat, 0.0);
    uf_.assign(flat, 0.0);
    b_.assign(flat, 0.0);
    f_.assign(flat, 0.0);
    if (amp_.size() != gamma_.size())
      throw config_error("one amplitude per manifold dof required");
  }

  void step() override {
    const std::size_t nvox = op_.rho().size();
    const double bdt2 = beta_ * dt_ * dt_;
    const double t_next = (steps_ + 1) * dt_;

    // b = rho (u + dt v + dt^2 (1/2 - beta) a)
    const double ca = dt_ * dt_ * (0.5 - beta_);
    for (std::size_t i = 0; i < b_.size(); ++i)
      b_[i] = op_.rho()[i % nvox] * (u_[i] + dt_ * v_[i] + ca * a_[i]);

    StepRecord rec;
    rec.t = t_next;
    auto A = [this](const std::vector<double> &in, std::vector<double> &out) {
      op_.apply(in, out);
    };
    auto M = [this](const std::vector<double> &in, std::vector<double> &out) {
      pc_.apply(in, out);
    };
    rec.iters_b = spectral::pcg(A, M, b_, ub_, opt_.tol).iterations;

    // Forces that pin the manifold to the prescribed history.
    const double target = pulse_.value(t_next);
    std::vector<double> vgap(gamma_.size());
    for (std::size_t i = 0; i < gamma_.size(); ++i)
      vgap[i] = target * amp_[i] -
                ub_[gamma_.dofs[i].comp * nvox + gamma_.dofs[i].voxel];
    std::vector<double> F = gm_->solve_forces(vgap, bdt2);
    greens::scatter_forces(gamma_, F, nvox, f_);
    rec.iters_f = spectral::pcg(A, M, f_, uf_, opt_.tol).iterations;

    // Newmark recovery.
    for (std::size_t i = 0; i < u_.size(); ++i) {
      const double u_new = bdt2 * uf_[i] + ub_[i];
      const double a_new = (u_new - u_[i] - dt_ * v_[i] - ca * a_[i]) / bdt2;
      v_[i] = v_[i] + dt_ * ((1.0 - ng_) * a_[i] + ng_ * a_new);
      a_[i] = a_new;
      u_[i] = u_new;
    }
    ++steps_;

    for (std::size_t i = 0; i < gamma_.size(); ++i)
      rec.gamma_dev = std::max(
          rec.gamma_dev,
          std::fabs(u_[gamma_.dofs[i].comp * nvox + gamma_.dofs[i].voxel] -
                    target * amp_[i]));
    if (opt_.track_energy) {
      auto [k, e] = total_energy(op_, u_, v_);
      rec.kinetic = k;
      rec.elastic = e;
    }
    records_.push_back(rec);
    if (opt_.record_forces) forces_.push_back(std::move(F));
  }

  double time() const override { return steps_ * dt_; }
  int steps_taken() const override { return steps_; }
  const std::vector<double> &displacement() const override { return u_; }
  const std::vector<double> &velocity() const override { return v_; }
  const std::vector<double> &acceleration() const override { return a_; }
  const std::vector<StepRecord> &records() const override { return records_; }
  const std::vector<std::vector<double>> &forces() const override {
    return forces_;
  }

  Op &op() { return op_; }

private:
  Op op_;
  Pc pc_;
  greens::Manifold gamma_;
  std::vector<double> amp_;
  Pulse pulse_;
  const greens::GreensMatrix *gm_;
  StepperOptions opt_;
  double beta_, ng_, dt_;
  int steps_ = 0;
  std::vector<double> u_, v_, a_, ub_, uf_, b_, f_;
  std::vector<StepRecord> records_;
  std::vector<std::vector<double>> forces_;
};

/**
 * @brief Explicit central-difference stepper (Newmark beta = 0, gamma = 1/2).
 *
 * No linear solves: the displacement update is explicit and the manifold is
 * driven through its velocity, with the nodal force following from the
 * diagonal mass.  Conditionally stable; a blow-up detector aborts with a
 * solver_error once the post-pulse energy exceeds 10^3 times the largest
 * energy seen while the pulse was active, or turns non-finite.
 */
template <class Op>
class ExplicitStepper final : public Stepper {
public:
  ExplicitStepper(const material::Microstructure &micro,
                  const greens::Manifold &gamma,
                  const std::vector<double> &dof_amp, const Pulse &pulse,
                  const StepperOptions &opt)
      : op_(micro, 0.0, opt.dt), gamma_(gamma), amp_(dof_amp), pulse_(pulse),
        opt_(opt), dt_(opt.dt) {
    const StableDt bound = stable_dt(micro);
    if (dt_ > bound.spectral)
      std::cerr << "warning: explicit dt " << dt_
                << " exceeds the spectral stability bound " << bound.spectral
                << "\n";
    const std::size_t flat =
        micro.grid.is_1d() ? micro.grid.nvox() : 3 * micro.grid.nvox();
    u_.assign(flat, 0.0);
    v_.assign(flat, 0.0);
    a_.assign(flat, 0.0);
    ds_.assign(flat, 0.0);
    if (amp_.size() != gamma_.size())
      throw config_error("one amplitude per manifold dof required");
  }

  void step() override {
    const std::size_t nvox = op_.rho().size();
    const double t_next = (steps_ + 1) * dt_;

    for (std::size_t i = 0; i < u_.size(); ++i)
      u_[i] += dt_ * v_[i] + 0.5 * dt_ * dt_ * a_[i];
    op_.div_stress(u_, ds_);

    // Force-free half-updated velocity (reuses the divergence buffer).
    for (std::size_t i = 0; i < u_.size(); ++i)
      ds_[i] = v_[i] + 0.5 * dt_ * a_[i] +
               0.5 * dt_ / op_.rho()[i % nvox] * ds_[i];

    // Manifold force that makes the constrained dofs hit the prescribed
    // velocity exactly (explicit mass is diagonal, so no solve is needed).
    std::vector<double> F(gamma_.size(), 0.0);
    const double vt = pulse_.deriv(t_next);
    for (std::size_t i = 0; i < gamma_.size(); ++i) {
      const std::size_t fi = gamma_.dofs[i].comp * nvox + gamma_.dofs[i].voxel;
      const double rho = op_.rho()[gamma_.dofs[i].voxel];
      F[i] = 2.0 * rho / dt_ * (vt * amp_[i] - ds_[fi]);
      ds_[fi] = vt * amp_[i];
    }

    StepRecord rec;
    rec.t = t_next;
    for (std::size_t i = 0; i < u_.size(); ++i) {
      const double v_new = ds_[i];
      a_[i] = 2.0 * (v_new - v_[i]) / dt_ - a_[i];
      v_[i] = v_new;
    }
    ++steps_;

    auto [k, e] = total_energy(op_, u_, v_);
    rec.kinetic = k;
    rec.elastic = e;
    const double total = k + e;
    if (t_next <= pulse_.duration()) {
      pulse_peak_energy_ = std::max(pulse_peak_energy_, total);
    } else if (!std::isfinite(total) ||
               total > 1e3 * std::max(pulse_peak_energy_, 1e-300)) {
      throw solver_error("explicit integration unstable at step " +
                         std::to_string(steps_) + " (energy " +
                         std::to_string(total) + ")");
    }
    for (std::size_t i = 0; i < gamma_.size(); ++i)
      rec.gamma_dev = std::max(
          rec.gamma_dev,
          std::fabs(v_[gamma_.dofs[i].comp * nvox + gamma_.dofs[i].voxel] -
                    vt * amp_[i]));
    records_.push_back(rec);
    if (opt_.record_forces) forces_.push_back(std::move(F));
  }

  double time() const override { return steps_ * dt_; }
  int steps_taken() const override { return steps_; }
  const std::vector<double> &displacement() const override { return u_; }
  const std::vector<double> &velocity() const override { return v_; }
  const std::vector<double> &acceleration() const override { return a_; }
  const std::vector<StepRecord> &records() const override { return records_; }
  const std::vector<std::vector<double>> &forces() const override {
    return forces_;
  }

  Op &op() { return op_; }

private:
  Op op_;
  greens::Manifold gamma_;
  std::vector<double> amp_;
  Pulse pulse_;
  StepperOptions opt_;
  double dt_;
  int steps_ = 0;
  double pulse_peak_energy_ = 0.0;
  std::vector<double> u_, v_, a_, ds_;
  std::vector<StepRecord> records_;
  std::vector<std::vector<double>> forces_;
};

} // namespace elastodyn::integrate
