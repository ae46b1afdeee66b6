/**
 * @file rng.hpp
 * @brief Deterministic random numbers for microstructure generation.
 *
 * A fixed mapping from raw 64-bit draws to doubles is used instead of
 * std::uniform_real_distribution, whose output may differ between
 * standard-library implementations.  Identical seeds must give identical
 * microstructures on every platform.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>

namespace elastodyn::detail {

class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform double in [0, 1) with 53 random mantissa bits.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /**
   * @brief Uniformly distributed rotation as a unit quaternion (w, x, y, z).
   *
   * Shoemake's subgroup-algorithm construction from three uniforms.
   */
  std::array<double, 4> rotation_quaternion() {
    const double u1 = uniform(), u2 = uniform(), u3 = uniform();
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    const double t2 = 2.0 * M_PI * u2, t3 = 2.0 * M_PI * u3;
    return {b * std::cos(t3), a * std::sin(t2), a * std::cos(t2),
            b * std::sin(t3)};
  }

private:
  std::mt19937_64 eng_;
};

/// Rotation matrix of a unit quaternion (w, x, y, z), row-major.
inline std::array<double, 9>
quaternion_matrix(const std::array<double, 4> &q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
          2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
          2 * (x * z - w * y),     2 * (y * z + w * x), 1 - 2 * (x * x + y * y)};
}

} // namespace elastodyn::detail
