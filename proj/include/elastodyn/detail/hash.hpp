/**
 * @file hash.hpp
 * @brief FNV-1a content hashing for influence-matrix cache keys.
 */
#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace elastodyn::detail {

/// Incremental 64-bit FNV-1a hasher over raw bytes.
class Hasher {
public:
  void bytes(const void *p, std::size_t n) {
    const auto *b = static_cast<const unsigned char *>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 0x100000001b3ULL;
    }
  }

  void add(double x) { bytes(&x, sizeof x); }
  void add(std::int64_t x) { bytes(&x, sizeof x); }
  void add(std::int32_t x) { bytes(&x, sizeof x); }
  void add(const std::string &s) { bytes(s.data(), s.size()); }

  template <typename T> void add(const std::vector<T> &v) {
    for (const T &x : v) add(x);
  }

  std::uint64_t value() const { return h_; }

private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

} // namespace elastodyn::detail
