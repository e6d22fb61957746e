#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

#include <Eigen/Core>

namespace kode {

// SplitMix64 step used both for seed expansion and for hashing seed parts.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Collapses (base seed, stream tag, indices...) into one 64-bit stream seed.
// Chained so that every part perturbs the whole state; order-sensitive.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6b6f646573696d00ull;
  for (std::uint64_t p : parts) h = splitmix64(h ^ p);
  return h;
}

// Stream tags keep independently derived streams from colliding even when
// their index tuples coincide.
namespace stream {
constexpr std::uint64_t instance = 1;
constexpr std::uint64_t env = 2;
constexpr std::uint64_t policy = 3;
constexpr std::uint64_t quantile = 4;
constexpr std::uint64_t gen_q = 5;
constexpr std::uint64_t gen_sigma = 6;
constexpr std::uint64_t gen_actions = 7;
constexpr std::uint64_t gen_gamma = 8;
constexpr std::uint64_t init_state = 9;
constexpr std::uint64_t permutation = 10;
}  // namespace stream

// xoshiro256++ seeded through SplitMix64. All distributions below are
// implemented in-repo so that sequences are identical across platforms and
// standard libraries; nothing is drawn from the OS or the clock.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) {
      x = splitmix64(x);
      s = x;
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; consumes exactly two raw draws per call.
  double next_normal() {
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform on {0, ..., k-1} by 128-bit multiply; one raw draw per call.
  int next_index(int k) {
    using u128 = unsigned __int128;
    return static_cast<int>((u128(next_u64()) * u128(k)) >> 64);
  }

  Eigen::VectorXd normal_vector(Eigen::Index d) {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = next_normal();
    return v;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int r) {
    return (x << r) | (x >> (64 - r));
  }
  std::uint64_t state_[4];
};

}  // namespace kode
