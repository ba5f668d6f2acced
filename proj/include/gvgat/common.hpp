#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace gvgat {

// Error with a stable machine-readable code; the CLI prints these as JSON.
struct Error : std::runtime_error {
  std::string code;
  Error(std::string c, const std::string& msg)
      : std::runtime_error(msg), code(std::move(c)) {}
};

[[noreturn]] inline void fail(const char* code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool ok, const char* code, const std::string& msg) {
  if (!ok) fail(code, msg);
}

// Seeded RNG wrapper. mt19937_64 output is fully specified by the standard,
// and we derive doubles ourselves, so streams are reproducible everywhere.
class Rng {
 public:
  explicit Rng(uint64_t seed) : g_(seed) {}

  uint64_t next() { return g_(); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  int below(int n) { return static_cast<int>(uniform() * n) % n; }

  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::mt19937_64 g_;
};

// FNV-1a over raw bytes; used for parameter checksums and config hashes.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace gvgat
