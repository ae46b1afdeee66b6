/**
 * @file core.hpp
 * @brief Voxel grid description, field storage, and the error hierarchy
 *        shared by all elastodyn components.
 */
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace elastodyn {

/// Thrown for invalid or inconsistent user-facing configuration.
class config_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a numerical solve fails (non-convergence, instability,
/// singular factorization).
class solver_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Thrown on file-format or filesystem failures.
class io_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/**
 * @brief Periodic voxel grid: counts per axis and physical domain lengths.
 *
 * Voxels are addressed by (i, j, k) with i the fastest-varying index in
 * memory.  Voxel centers sit at x_a = (L_a / N_a) * (index + 1/2).
 */
struct Grid {
  std::array<int, 3> n{1, 1, 1};        //!< voxel counts (N1, N2, N3)
  std::array<double, 3> length{1, 1, 1}; //!< domain lengths in m

  std::size_t nvox() const {
    return static_cast<std::size_t>(n[0]) * n[1] * n[2];
  }

  std::size_t idx(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(n[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(n[1]) * k);
  }

  /// Inverse of idx(): linear index back to (i, j, k).
  std::array<int, 3> coords(std::size_t v) const {
    const int i = static_cast<int>(v % n[0]);
    const int j = static_cast<int>((v / n[0]) % n[1]);
    const int k = static_cast<int>(v / (static_cast<std::size_t>(n[0]) * n[1]));
    return {i, j, k};
  }

  double dx(int axis) const { return length[axis] / n[axis]; }

  /// Physical coordinate of a voxel center along one axis.
  double center(int axis, int index) const {
    return dx(axis) * (index + 0.5);
  }

  double voxel_volume() const { return dx(0) * dx(1) * dx(2); }

  /// True when only the first axis is discretized (scalar rod problems).
  bool is_1d() const { return n[1] == 1 && n[2] == 1; }

  bool operator==(const Grid &o) const {
    return n == o.n && length == o.length;
  }
};

/**
 * @brief Real field with a fixed number of components per voxel.
 *
 * Components are stored as contiguous planes (component-major), so each
 * component can be transformed independently and the whole field doubles
 * as one flat vector for Krylov arithmetic.
 */
struct Field {
  int comps = 0;
  std::size_t nvox = 0;
  std::vector<double> v;

  Field() = default;
  Field(int c, std::size_t nv) : comps(c), nvox(nv), v(c * nv, 0.0) {}

  double *comp(int c) { return v.data() + static_cast<std::size_t>(c) * nvox; }
  const double *comp(int c) const {
    return v.data() + static_cast<std::size_t>(c) * nvox;
  }

  std::size_t size() const { return v.size(); }
  void fill(double x) { std::fill(v.begin(), v.end(), x); }
};

/// Euclidean inner product of two flat vectors.
inline double dot(const std::vector<double> &a, const std::vector<double> &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const std::vector<double> &a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return s;
}

/// y += alpha * x
inline void axpy(double alpha, const std::vector<double> &x,
                 std::vector<double> &y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

} // namespace elastodyn
