/**
 * @file linalg.hpp
 * @brief Small dense linear algebra: LU with partial pivoting and a Jacobi
 *        eigensolver for symmetric matrices.
 *
 * The influence matrices factorized here are a few thousand rows at most,
 * so a plain O(n^3) implementation with a serializable layout is preferred
 * over an external dependency.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "../core.hpp"

namespace elastodyn::detail {

/**
 * @brief Dense LU factorization with partial pivoting, PA = LU.
 *
 * Factors are stored packed in one row-major n-by-n array; the pivot list
 * records the row swap applied at each elimination step.
 */
struct Lu {
  int n = 0;
  std::vector<double> a;      //!< packed L (unit diagonal) and U, row-major
  std::vector<std::int64_t> piv;

  static Lu factorize(std::vector<double> m, int n) {
    Lu lu;
    lu.n = n;
    lu.a = std::move(m);
    lu.piv.resize(n);
    for (int col = 0; col < n; ++col) {
      int p = col;
      double best = std::fabs(lu.a[static_cast<std::size_t>(col) * n + col]);
      for (int r = col + 1; r < n; ++r) {
        const double v = std::fabs(lu.a[static_cast<std::size_t>(r) * n + col]);
        if (v > best) { best = v; p = r; }
      }
      if (best == 0.0)
        throw solver_error("LU factorization hit a singular column");
      lu.piv[col] = p;
      if (p != col)
        for (int c = 0; c < n; ++c)
          std::swap(lu.a[static_cast<std::size_t>(col) * n + c],
                    lu.a[static_cast<std::size_t>(p) * n + c]);
      const double d = lu.a[static_cast<std::size_t>(col) * n + col];
      for (int r = col + 1; r < n; ++r) {
        double &l = lu.a[static_cast<std::size_t>(r) * n + col];
        l /= d;
        if (l != 0.0)
          for (int c = col + 1; c < n; ++c)
            lu.a[static_cast<std::size_t>(r) * n + c] -=
                l * lu.a[static_cast<std::size_t>(col) * n + c];
      }
    }
    return lu;
  }

  /// Solve A x = b in place.
  void solve(std::vector<double> &b) const {
    for (int i = 0; i < n; ++i)
      if (piv[i] != i) std::swap(b[i], b[piv[i]]);
    for (int i = 1; i < n; ++i) {
      double s = b[i];
      const double *row = a.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < i; ++j) s -= row[j] * b[j];
      b[i] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
      double s = b[i];
      const double *row = a.data() + static_cast<std::size_t>(i) * n;
      for (int j = i + 1; j < n; ++j) s -= row[j] * b[j];
      b[i] = s / row[i];
    }
  }
};

/**
 * @brief Eigenvalues of a symmetric n-by-n matrix by cyclic Jacobi sweeps.
 *
 * Used for 3x3 acoustic tensors and 6x6 stiffness positivity checks; the
 * matrix is passed row-major and destroyed.
 */
inline std::vector<double> symmetric_eigenvalues(std::vector<double> a, int n) {
  auto at = [&](int r, int c) -> double & {
    return a[static_cast<std::size_t>(r) * n + c];
  };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += at(p, q) * at(p, q);
    if (off < 1e-30 * (1.0 + norm2(a))) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (at(p, q) == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = at(i, i);
  return ev;
}

} // namespace elastodyn::detail
