#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>

namespace wclt {

/// Recorded in every report so streams can be reproduced elsewhere.
inline constexpr const char* kGeneratorName =
    "fnv1a64-tag/splitmix64-derive/xoshiro256++/box-muller";

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline constexpr std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Counter-based stream derivation: every random stream in the toolkit is
/// keyed by (master seed, purpose tag, up to three indices). Derivation is
/// a fixed splitmix64 chain, so streams are independent of execution order
/// and thread count.
///
///   key = chain(master ^ fnv1a64(tag), i0, i1, i2)
///   state[0..3] = four successive splitmix64 outputs of key
///
/// The generator is xoshiro256++; gaussians come from Box-Muller pairs.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t key) { reseed(key); }

  static SplitRng derive(std::uint64_t master, std::string_view tag,
                         std::uint64_t i0 = 0, std::uint64_t i1 = 0,
                         std::uint64_t i2 = 0) {
    std::uint64_t st = master ^ fnv1a64(tag);
    splitmix64_next(st);
    st ^= i0;
    splitmix64_next(st);
    st ^= i1;
    splitmix64_next(st);
    st ^= i2;
    return SplitRng(splitmix64_next(st));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0,1), 53-bit resolution.
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // Box-Muller; 1-u keeps the log argument in (0,1].
    const double u1 = 1.0 - next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double next_exponential(double rate) {
    return -std::log(1.0 - next_uniform()) / rate;
  }

 private:
  void reseed(std::uint64_t key) {
    for (auto& w : s_) w = splitmix64_next(key);
  }
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace wclt
