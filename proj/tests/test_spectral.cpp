/**
 * @file test_spectral.cpp
 * @brief Frequency grids, transforms, the implicit-step operator, its
 *        preconditioner, and the PCG solver.
 */
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <set>
#include <vector>

#include <elastodyn/detail/rng.hpp>
#include <elastodyn/fft.hpp>
#include <elastodyn/material.hpp>
#include <elastodyn/spectral.hpp>

using namespace elastodyn;
using Catch::Approx;

namespace {

std::vector<double> random_field(std::size_t n, std::uint64_t seed) {
  detail::Rng rng(seed);
  std::vector<double> v(n);
  for (double &x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

material::Microstructure rod_al(int n, double len = 2.0) {
  const Grid g{{n, 1, 1}, {len, len / n, len / n}};
  return material::build_homogeneous(
      g, material::phase_of(material::metals::aluminum()));
}

material::Microstructure rod_al_fe(int n, double len = 2.0) {
  const Grid g{{n, 1, 1}, {len, len / n, len / n}};
  return material::build_layered(
      g, 0, {0.0, 0.3, 0.6, 1.0}, {0, 1, 0},
      {material::phase_of(material::metals::aluminum()),
       material::phase_of(material::metals::iron())});
}

material::Microstructure box_al_fe(int n1, int n2, int n3) {
  const Grid g{{n1, n2, n3}, {1.0, 1.0, 2.0}};
  return material::build_layered(
      g, 2, {0.0, 0.3, 0.6, 1.0}, {0, 1, 0},
      {material::phase_of(material::metals::aluminum()),
       material::phase_of(material::metals::iron())});
}

double rel_l2(const std::vector<double> &a, const std::vector<double> &b) {
  double d = 0.0, r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    r += b[i] * b[i];
  }
  return std::sqrt(d / r);
}

} // namespace

TEST_CASE("frequency grid") {
  SECTION("odd axis: N=3, L=2pi") {
    const Grid g{{3, 1, 1}, {2 * M_PI, 1, 1}};
    const auto f = spectral::FrequencyGrid::make(g);
    const std::multiset<double> got(f.xi[0].begin(), f.xi[0].end());
    REQUIRE(got == std::multiset<double>{-1.0, 0.0, 1.0});
    // Natural DFT order: 0, 1, -1.
    REQUIRE(f.xi[0] == std::vector<double>{0.0, 1.0, -1.0});
    REQUIRE(f.xi_d[0] == f.xi[0]);
  }

  SECTION("even axis: N=4, L=2pi") {
    const Grid g{{4, 1, 1}, {2 * M_PI, 1, 1}};
    const auto f = spectral::FrequencyGrid::make(g);
    const std::multiset<double> got(f.xi[0].begin(), f.xi[0].end());
    REQUIRE(got == std::multiset<double>{-2.0, -1.0, 0.0, 1.0});
    // The unmatched Nyquist mode carries no first derivative.
    REQUIRE(f.xi_d[0][2] == 0.0);
    REQUIRE(f.xi_d[0][1] == 1.0);
  }

  SECTION("single voxel axis") {
    const Grid g{{1, 1, 1}, {1, 1, 1}};
    const auto f = spectral::FrequencyGrid::make(g);
    REQUIRE(f.xi[0] == std::vector<double>{0.0});
  }

  SECTION("zero appears exactly once per axis") {
    const Grid g{{6, 5, 1}, {1.0, 3.0, 1.0}};
    const auto f = spectral::FrequencyGrid::make(g);
    for (int a = 0; a < 2; ++a)
      REQUIRE(std::count(f.xi[a].begin(), f.xi[a].end(), 0.0) == 1);
  }

  SECTION("index map sorts ascending and is a permutation") {
    const Grid g{{8, 1, 1}, {2.0, 1, 1}};
    const auto f = spectral::FrequencyGrid::make(g);
    std::set<int> seen;
    double prev = -1e300;
    for (int m : f.sorted_to_natural[0]) {
      REQUIRE(m >= 0);
      REQUIRE(m < 8);
      seen.insert(m);
      REQUIRE(f.xi[0][m] > prev);
      prev = f.xi[0][m];
    }
    REQUIRE(seen.size() == 8);
  }
}

TEST_CASE("fft round trips and basic spectra") {
  const Grid g{{4, 3, 5}, {1.0, 2.0, 0.5}};
  Fft fft(g);

  SECTION("random field round trip below 1e-12") {
    const auto u = random_field(g.nvox(), 5);
    std::vector<cplx> uh(fft.ncplx());
    std::vector<double> back(g.nvox());
    fft.forward(u.data(), uh.data());
    fft.inverse(uh.data(), back.data());
    REQUIRE(rel_l2(back, u) < 1e-12);
  }

  SECTION("constant field concentrates at the zero mode") {
    std::vector<double> u(g.nvox(), 3.25);
    std::vector<cplx> uh(fft.ncplx());
    fft.forward(u.data(), uh.data());
    REQUIRE(uh[0].real() == Approx(3.25 * g.nvox()));
    for (std::size_t m = 1; m < uh.size(); ++m)
      REQUIRE(std::abs(uh[m]) < 1e-9 * g.nvox());
  }

  SECTION("single cosine yields two conjugate peaks") {
    const Grid r{{16, 1, 1}, {2.0, 1, 1}};
    Fft f1(r);
    std::vector<double> u(16);
    for (int i = 0; i < 16; ++i)
      u[i] = std::cos(2.0 * M_PI / 2.0 * 3.0 * r.center(0, i));
    std::vector<cplx> uh(f1.ncplx());
    f1.forward(u.data(), uh.data());
    // Real-input storage keeps modes 0..8; the +3 peak carries half the
    // amplitude, its conjugate partner is implicit.
    for (int m = 0; m < f1.n1c(); ++m) {
      if (m == 3)
        REQUIRE(std::abs(uh[m]) == Approx(8.0).epsilon(1e-9));
      else
        REQUIRE(std::abs(uh[m]) < 1e-8);
    }
  }
}

TEST_CASE("rod operator") {
  const double beta = 0.25, dt = 2e-6;

  SECTION("single mode multiplies by the closed-form symbol") {
    auto m = rod_al(27);
    spectral::Operator1D op(m, beta, dt);
    const Grid &g = m.grid;
    const double xi = 2.0 * M_PI / g.length[0] * 3.0;
    const double E = m.phases[0].young_iso(), rho = m.phases[0].rho;
    const double symbol = beta * dt * dt * E * xi * xi + rho;
    std::vector<double> u(g.nvox()), out(g.nvox());
    for (int i = 0; i < g.n[0]; ++i) {
      const double x = g.center(0, i);
      u[i] = std::sin(xi * x) + 0.5 * std::cos(xi * x);
    }
    op.apply(u, out);
    for (std::size_t i = 0; i < u.size(); ++i)
      REQUIRE(out[i] == Approx(symbol * u[i]).margin(1e-10 * symbol));
  }

  SECTION("constant field sees only the mass term") {
    auto m = rod_al_fe(30);
    spectral::Operator1D op(m, beta, dt);
    std::vector<double> u(m.grid.nvox(), 2.0), out;
    out.resize(u.size());
    op.apply(u, out);
    for (std::size_t i = 0; i < u.size(); ++i)
      REQUIRE(out[i] == Approx(op.rho()[i] * 2.0).epsilon(1e-12));
  }

  SECTION("zero-frequency content of A(u) is the mean of rho u") {
    auto m = rod_al_fe(32);
    spectral::Operator1D op(m, beta, dt);
    const auto u = random_field(m.grid.nvox(), 17);
    std::vector<double> out(u.size());
    op.apply(u, out);
    double mean_out = 0.0, mean_rho_u = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      mean_out += out[i];
      mean_rho_u += op.rho()[i] * u[i];
    }
    REQUIRE(mean_out == Approx(mean_rho_u).epsilon(1e-10).margin(1e-7));
  }

  SECTION("even-grid Nyquist mode carries no stiffness") {
    auto m = rod_al(16);
    spectral::Operator1D op(m, beta, dt);
    std::vector<double> u(16), out(16);
    for (int i = 0; i < 16; ++i) u[i] = (i % 2 == 0) ? 1.0 : -1.0;
    op.apply(u, out);
    for (int i = 0; i < 16; ++i)
      REQUIRE(out[i] == Approx(op.rho()[i] * u[i]).epsilon(1e-12));
  }

  SECTION("self-adjoint to 1e-10 on random pairs") {
    auto m = rod_al_fe(48);
    spectral::Operator1D op(m, beta, dt);
    const auto u = random_field(m.grid.nvox(), 7);
    const auto v = random_field(m.grid.nvox(), 8);
    std::vector<double> au(u.size()), av(u.size());
    op.apply(u, au);
    op.apply(v, av);
    const double lhs = dot(v, au), rhs = dot(u, av);
    REQUIRE(lhs == Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("vector operator") {
  const double beta = 0.25, dt = 1e-6;

  SECTION("longitudinal and shear plane modes match their symbols") {
    const Grid g{{1, 1, 27}, {0.1, 0.1, 2.0}};
    auto m = material::build_homogeneous(
        g, material::phase_of(material::metals::aluminum()));
    spectral::Operator3D op(m, beta, dt);
    const double xi = 2.0 * M_PI / g.length[2] * 4.0;
    const double lam = 58.2e9, mu = 26.1e9, rho = 2700.0;
    std::vector<double> u(3 * g.nvox(), 0.0), out(3 * g.nvox());
    for (int k = 0; k < g.n[2]; ++k) {
      const double s = std::sin(xi * g.center(2, k));
      u[2 * g.nvox() + g.idx(0, 0, k)] = s; // P polarization
      u[0 * g.nvox() + g.idx(0, 0, k)] = s; // S polarization
    }
    op.apply(u, out);
    const double sym_p = beta * dt * dt * (lam + 2 * mu) * xi * xi + rho;
    const double sym_s = beta * dt * dt * mu * xi * xi + rho;
    for (int k = 0; k < g.n[2]; ++k) {
      const auto v = g.idx(0, 0, k);
      REQUIRE(out[2 * g.nvox() + v] ==
              Approx(sym_p * u[2 * g.nvox() + v]).margin(1e-10 * sym_p));
      REQUIRE(out[0 * g.nvox() + v] ==
              Approx(sym_s * u[0 * g.nvox() + v]).margin(1e-10 * sym_s));
      REQUIRE(out[1 * g.nvox() + v] == Approx(0.0).margin(1e-6));
    }
  }

  SECTION("self-adjoint to 1e-10 on random pairs") {
    auto m = box_al_fe(6, 4, 10);
    spectral::Operator3D op(m, beta, dt);
    const auto u = random_field(3 * m.grid.nvox(), 21);
    const auto v = random_field(3 * m.grid.nvox(), 22);
    std::vector<double> au, av;
    op.apply(u, au);
    op.apply(v, av);
    REQUIRE(dot(v, au) == Approx(dot(u, av)).epsilon(1e-10));
  }

  SECTION("positive on 100 random nonzero fields") {
    auto m = box_al_fe(5, 3, 8);
    spectral::Operator3D op(m, beta, dt);
    std::vector<double> au;
    for (int it = 0; it < 100; ++it) {
      const auto u = random_field(3 * m.grid.nvox(), 1000 + it);
      op.apply(u, au);
      REQUIRE(dot(u, au) > 0.0);
    }
  }
}

TEST_CASE("preconditioner") {
  SECTION("1d aluminum scalar block at xi = pi") {
    // beta dt^2 = 1 with beta = 1/4, dt = 2.
    auto m = rod_al(64);
    spectral::Precond1D pc(m, 0.25, 2.0);
    const Grid &g = m.grid;
    std::vector<double> r(g.nvox()), z(g.nvox());
    for (int i = 0; i < g.n[0]; ++i)
      r[i] = std::cos(M_PI * g.center(0, i));
    pc.apply(r, z);
    // Projecting z back onto the input mode reads off the modal factor
    // without contamination from round-off in other modes.
    const double ratio = dot(r, z) / norm2(r);
    const double expected_rounded = 1.0 / (70.3e9 * M_PI * M_PI + 2700.0);
    const double expected_exact =
        1.0 / (m.phases[0].young_iso() * M_PI * M_PI + 2700.0);
    REQUIRE(ratio == Approx(expected_exact).epsilon(1e-10));
    REQUIRE(ratio == Approx(expected_rounded).epsilon(2e-3));
  }

  SECTION("zero-frequency block is 1/rho_bar") {
    auto m = rod_al_fe(40);
    spectral::Precond1D pc(m, 0.25, 1e-6);
    double rbar = 0.0;
    for (double x : m.density_profile()) rbar += x;
    rbar /= static_cast<double>(m.grid.nvox());
    std::vector<double> r(m.grid.nvox(), 5.0), z(m.grid.nvox());
    pc.apply(r, z);
    for (double v : z) REQUIRE(v == Approx(5.0 / rbar).epsilon(1e-12));

    auto m3 = box_al_fe(4, 4, 6);
    spectral::Precond3D pc3(m3, 0.25, 1e-6);
    const auto avg = m3.averaged();
    std::vector<double> r3(3 * m3.grid.nvox()), z3(3 * m3.grid.nvox());
    for (int c = 0; c < 3; ++c)
      std::fill_n(r3.begin() + c * m3.grid.nvox(), m3.grid.nvox(),
                  1.0 + c);
    pc3.apply(r3, z3);
    for (int c = 0; c < 3; ++c)
      for (std::size_t v = 0; v < m3.grid.nvox(); ++v)
        REQUIRE(z3[c * m3.grid.nvox() + v] ==
                Approx((1.0 + c) / avg.rho).epsilon(1e-12));
  }

  SECTION("exact inverse for homogeneous media, 1d and 3d") {
    auto m1 = rod_al(54);
    spectral::Operator1D op1(m1, 0.25, 2e-6);
    spectral::Precond1D pc1(m1, 0.25, 2e-6);
    const auto u1 = random_field(m1.grid.nvox(), 31);
    std::vector<double> t1(u1.size()), b1(u1.size());
    op1.apply(u1, t1);
    pc1.apply(t1, b1);
    REQUIRE(rel_l2(b1, u1) < 1e-10);

    const Grid g{{6, 5, 7}, {1.0, 1.5, 2.0}};
    auto m3 = material::build_homogeneous(
        g, material::phase_of(material::metals::iron()));
    spectral::Operator3D op3(m3, 0.25, 2e-6);
    spectral::Precond3D pc3(m3, 0.25, 2e-6);
    const auto u3 = random_field(3 * g.nvox(), 32);
    std::vector<double> t3, b3;
    op3.apply(u3, t3);
    b3.resize(t3.size());
    pc3.apply(t3, b3);
    REQUIRE(rel_l2(b3, u3) < 1e-10);
  }

  SECTION("diagonal modal action commutes with the index map") {
    const Grid g{{9, 1, 1}, {2.0, 1, 1}};
    Fft fft(g);
    const auto fq = spectral::FrequencyGrid::make(g);
    const auto r = random_field(g.nvox(), 77);
    std::vector<cplx> a(fft.ncplx()), b(fft.ncplx());
    fft.forward(r.data(), a.data());
    b = a;
    auto factor = [&](int mode) {
      const double xi = fq.xi_d[0][mode];
      return 1.0 / (2.0e-12 * 70e9 * xi * xi + 2700.0);
    };
    // Natural storage order against ascending frequency order.
    for (int mm = 0; mm < fft.n1c(); ++mm) a[mm] *= factor(mm);
    for (int s : fq.sorted_to_natural[0])
      if (s < fft.n1c()) b[s] *= factor(s);
    for (int mm = 0; mm < fft.n1c(); ++mm) REQUIRE(a[mm] == b[mm]);
    std::vector<double> za(g.nvox()), zb(g.nvox());
    fft.inverse(a.data(), za.data());
    fft.inverse(b.data(), zb.data());
    REQUIRE(za == zb);
  }
}

TEST_CASE("pcg solver") {
  const double beta = 0.25;

  SECTION("homogeneous media converge in one iteration, 1d and 3d") {
    auto m1 = rod_al(81);
    spectral::Operator1D op1(m1, beta, 2e-6);
    spectral::Precond1D pc1(m1, beta, 2e-6);
    const auto b1 = random_field(m1.grid.nvox(), 41);
    std::vector<double> x1(b1.size(), 0.0);
    auto res1 = spectral::pcg([&](auto &u, auto &o) { op1.apply(u, o); },
                              [&](auto &u, auto &o) { pc1.apply(u, o); }, b1,
                              x1, 1e-8);
    REQUIRE(res1.iterations == 1);

    const Grid g{{8, 6, 9}, {1.0, 1.0, 1.0}};
    auto m3 = material::build_homogeneous(
        g, material::phase_of(material::metals::aluminum()));
    spectral::Operator3D op3(m3, beta, 2e-6);
    spectral::Precond3D pc3(m3, beta, 2e-6);
    const auto b3 = random_field(3 * g.nvox(), 42);
    std::vector<double> x3(b3.size(), 0.0);
    auto res3 = spectral::pcg([&](auto &u, auto &o) { op3.apply(u, o); },
                              [&](auto &u, auto &o) { pc3.apply(u, o); }, b3,
                              x3, 1e-8);
    REQUIRE(res3.iterations == 1);

    // The one-step answer equals the closed-form modal division, which for
    // a homogeneous medium is exactly the preconditioner application.
    std::vector<double> closed(b3.size());
    pc3.apply(b3, closed);
    REQUIRE(rel_l2(x3, closed) < 1e-10);
  }

  SECTION("manufactured solution is recovered") {
    auto m = rod_al_fe(96);
    spectral::Operator1D op(m, beta, 2e-6);
    spectral::Precond1D pc(m, beta, 2e-6);
    const auto want = random_field(m.grid.nvox(), 51);
    std::vector<double> b(want.size());
    op.apply(want, b);
    std::vector<double> x(want.size(), 0.0);
    auto res = spectral::pcg([&](auto &u, auto &o) { op.apply(u, o); },
                             [&](auto &u, auto &o) { pc.apply(u, o); }, b, x,
                             1e-10);
    REQUIRE(res.rel_residual <= 1e-10);
    REQUIRE(rel_l2(x, want) < 1e-8);
  }

  SECTION("zero right-hand side short-circuits") {
    auto m = rod_al(32);
    spectral::Operator1D op(m, beta, 2e-6);
    spectral::Precond1D pc(m, beta, 2e-6);
    std::vector<double> b(m.grid.nvox(), 0.0);
    auto x = random_field(b.size(), 61);
    auto res = spectral::pcg([&](auto &u, auto &o) { op.apply(u, o); },
                             [&](auto &u, auto &o) { pc.apply(u, o); }, b, x,
                             1e-8);
    REQUIRE(res.iterations == 0);
    for (double v : x) REQUIRE(v == 0.0);
  }

  SECTION("an already converged warm start takes no iterations") {
    auto m = rod_al(32);
    spectral::Operator1D op(m, beta, 2e-6);
    spectral::Precond1D pc(m, beta, 2e-6);
    const auto want = random_field(m.grid.nvox(), 62);
    std::vector<double> b(want.size());
    op.apply(want, b);
    auto x = want;
    auto res = spectral::pcg([&](auto &u, auto &o) { op.apply(u, o); },
                             [&](auto &u, auto &o) { pc.apply(u, o); }, b, x,
                             1e-8);
    REQUIRE(res.iterations == 0);
    REQUIRE(x == want);
  }

  SECTION("layered Al/Fe step system converges within 15 iterations") {
    auto m = rod_al_fe(729);
    const Grid &g = m.grid;
    const double dt = 10.0 * g.dx(0) / material::metals::iron().c_bar();
    spectral::Operator1D op(m, beta, dt);
    spectral::Precond1D pc(m, beta, dt);
    // Right-hand side shaped like a time step: rho(x) times a traveling
    // displacement pulse.
    std::vector<double> b(g.nvox(), 0.0);
    for (int i = 0; i < g.n[0]; ++i) {
      const double x = g.center(0, i);
      const double s = (x - 0.45) / 0.1;
      b[i] = op.rho()[i] * 1e-3 * std::exp(-s * s);
    }
    std::vector<double> x(b.size(), 0.0), history;
    auto res = spectral::pcg([&](auto &u, auto &o) { op.apply(u, o); },
                             [&](auto &u, auto &o) { pc.apply(u, o); }, b, x,
                             1e-8, 500, &history);
    REQUIRE(res.iterations <= 15);
    REQUIRE(res.rel_residual <= 1e-8);

    SECTION("preconditioned residual norm decreases monotonically") {
      REQUIRE(history.size() == static_cast<std::size_t>(res.iterations));
      for (std::size_t i = 1; i < history.size(); ++i)
        REQUIRE(history[i] <= history[i - 1] * (1.0 + 1e-12));
    }
  }

  SECTION("iteration cap raises a solver error") {
    auto m = rod_al_fe(128);
    spectral::Operator1D op(m, beta, 2e-6);
    spectral::Precond1D pc(m, beta, 2e-6);
    const auto b = random_field(m.grid.nvox(), 71);
    std::vector<double> x(b.size(), 0.0);
    REQUIRE_THROWS_AS(
        spectral::pcg([&](auto &u, auto &o) { op.apply(u, o); },
                      [&](auto &u, auto &o) { pc.apply(u, o); }, b, x, 1e-14,
                      2),
        solver_error);
  }
}
