#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <string_view>

namespace ttrl {

// splitmix64 step. All randomness in the project flows through this so that
// runs replay bit-identically on any platform.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Child-seed derivation: fold a purpose tag and indices into the master seed.
// Adding unrelated draws elsewhere never perturbs a derived stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::initializer_list<std::uint64_t> indices = {}) {
  std::uint64_t h = master;
  std::uint64_t t = 0xcbf29ce484222325ull;  // FNV-1a over the tag bytes
  for (char c : tag) {
    t ^= static_cast<unsigned char>(c);
    t *= 0x100000001b3ull;
  }
  std::uint64_t s = h ^ t;
  h = splitmix64(s);
  for (std::uint64_t idx : indices) {
    s = h ^ idx;
    h = splitmix64(s);
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // uniform in [0, 1)
  double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform integer in [0, n)
  int next_int(int n) {
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t bound = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t u;
    do {
      u = next_u64();
    } while (u >= bound);
    return static_cast<int>(u % un);
  }

  // standard normal via Box-Muller (fixed draw order, no cached spare)
  double next_gaussian() {
    const double u1 = 1.0 - next_uniform();
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace ttrl
