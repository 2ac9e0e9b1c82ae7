#pragma once

// Counter-based random numbers (Philox4x32-10). Every draw is a pure function of
// (key, counter), so streams can be addressed by sample index or lineage id and
// do not depend on the order in which work is scheduled.

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <numbers>
#include <string>

namespace bbm::rng {

using Block = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline Block philox4x32_10(Block ctr, Key key) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += W0;
      key[1] += W1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
  }
  return ctr;
}

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Uniform in (0, 1), never 0 or 1.
inline double to_unit(std::uint32_t u) { return (static_cast<double>(u) + 0.5) * 0x1p-32; }

struct Id128 {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  auto operator<=>(const Id128&) const = default;

  std::string hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(32, '0');
    for (int i = 0; i < 16; ++i) {
      out[15 - i] = digits[(hi >> (4 * i)) & 0xF];
      out[31 - i] = digits[(lo >> (4 * i)) & 0xF];
    }
    return out;
  }
};

inline constexpr Id128 kRootId{0x5eed0000b0b0cafeull, 0x0123456789abcdefull};

/// Child id from the parent id and a per-parent index; independent of any seed.
inline Id128 child_id(const Id128& parent, std::uint64_t index) {
  const Block out = philox4x32_10(
      {static_cast<std::uint32_t>(parent.lo), static_cast<std::uint32_t>(parent.lo >> 32),
       static_cast<std::uint32_t>(parent.hi), static_cast<std::uint32_t>(parent.hi >> 32)},
      {static_cast<std::uint32_t>(index) ^ 0x7f4a7c15u, static_cast<std::uint32_t>(index >> 32) ^ 0x85ebca6bu});
  return {(static_cast<std::uint64_t>(out[3]) << 32) | out[2], (static_cast<std::uint64_t>(out[1]) << 32) | out[0]};
}

/// A keyed family of blocks addressed by a 128-bit counter.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t tag) {
    const std::uint64_t k = mix64(seed ^ mix64(tag));
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  }

  Block block(std::uint64_t a, std::uint32_t b, std::uint32_t c) const {
    return philox4x32_10({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), b, c}, key_);
  }

  /// Four uniforms in (0, 1).
  std::array<double, 4> uniforms(std::uint64_t a, std::uint32_t b, std::uint32_t c) const {
    const Block u = block(a, b, c);
    return {to_unit(u[0]), to_unit(u[1]), to_unit(u[2]), to_unit(u[3])};
  }

  /// Four standard normals (two Box-Muller pairs).
  std::array<double, 4> normals(std::uint64_t a, std::uint32_t b, std::uint32_t c) const {
    const auto u = uniforms(a, b, c);
    std::array<double, 4> z;
    box_muller(u[0], u[1], z[0], z[1]);
    box_muller(u[2], u[3], z[2], z[3]);
    return z;
  }

  static void box_muller(double u1, double u2, double& z0, double& z1) {
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    z0 = r * std::cos(a);
    z1 = r * std::sin(a);
  }

 private:
  Key key_{};
};

/// Seed for replicate i of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed ^ mix64(index + 0x632BE59BD9B4E019ull));
}

}  // namespace bbm::rng
