#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "genlab/tensor.hpp"

namespace genlab {

// Splittable counter-based generator.
//
// Stream: the i-th 64-bit output (i = 0, 1, ...) is mix64(key + (i + 1) * G)
// with G = 0x9E3779B97F4A7C15 and mix64 the SplitMix64 finaliser
//   z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//   z ^= z >> 27; z *= 0x94D049BB133111EB;
//   z ^= z >> 31.
// The key of Rng(seed) is mix64(seed). Child stream s of a generator with key
// k has key mix64(k ^ mix64(s + 0x632BE59BD9B4E019)).
//
// uniform() = (u64 >> 11) * 2^-53 in [0, 1).
// normal() uses Box–Muller on consecutive uniforms (u1, u2):
//   r = sqrt(-2 log(1 - u1)), z0 = r cos(2π u2), z1 = r sin(2π u2).
// 1 - u1 lies in (0, 1], so no pair is ever discarded; z0 is returned and z1
// is cached and returned by the next call.
class Rng {
 public:
  struct State {
    std::uint64_t key = 0;
    std::uint64_t counter = 0;
    bool has_spare = false;
    double spare = 0.0;
    friend bool operator==(const State&, const State&) = default;
  };

  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64() noexcept;
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal() noexcept;
  // Uniform integer in [0, n).
  std::size_t index(std::size_t n) noexcept;

  Tensor normal(std::size_t rows, std::size_t cols);
  Tensor uniform(std::size_t rows, std::size_t cols);
  std::vector<std::size_t> indices(std::size_t count, std::size_t n);

  Rng split(std::uint64_t stream) const noexcept;
  std::vector<Rng> split_n(std::size_t n) const;

  State state() const noexcept { return {key_, counter_, has_spare_, spare_}; }
  static Rng from_state(const State& s);

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t z) noexcept;

}  // namespace genlab
