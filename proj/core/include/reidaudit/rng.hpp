#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace reidaudit {

// 64-bit FNV-1a; the fixed hash behind feature hashing and seed derivation.
inline constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  return fnv1a64(s.data(), s.size());
}

// Independent stream seed for (base, tag). Used to give every derived job
// (curve point, masking pass, encoder init) its own reproducible stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  std::uint64_t h = fnv1a64(&base, sizeof(base));
  return fnv1a64(tag.data(), tag.size(), h);
}

// mt19937_64 produces identical raw sequences on every platform, but
// std::uniform_int_distribution and std::shuffle do not, so the draws
// below are hand-rolled.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, n); n > 0. Modulo bias is negligible for n << 2^64.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(engine_() % n);
  }

  // Uniform in [0, 1).
  double real() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return real() < p; }

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[index(v.size())];
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace reidaudit
