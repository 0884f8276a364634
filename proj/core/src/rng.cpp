#include "genlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace genlab {
namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kStreamSalt = 0x632BE59BD9B4E019ull;
}  // namespace

std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

Rng::Rng(std::uint64_t seed) : key_(mix64(seed)) {}

std::uint64_t Rng::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGamma);
}

double Rng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::size_t Rng::index(std::size_t n) noexcept {
  if (n == 0) return 0;
  const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return i < n ? i : n - 1;
}

Tensor Rng::normal(std::size_t rows, std::size_t cols) {
  Tensor t(rows, cols);
  for (double& v : t.data()) v = normal();
  return t;
}

Tensor Rng::uniform(std::size_t rows, std::size_t cols) {
  Tensor t(rows, cols);
  for (double& v : t.data()) v = uniform();
  return t;
}

std::vector<std::size_t> Rng::indices(std::size_t count, std::size_t n) {
  std::vector<std::size_t> out(count);
  for (auto& i : out) i = index(n);
  return out;
}

Rng Rng::split(std::uint64_t stream) const noexcept {
  Rng child;
  child.key_ = mix64(key_ ^ mix64(stream + kStreamSalt));
  return child;
}

std::vector<Rng> Rng::split_n(std::size_t n) const {
  std::vector<Rng> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(split(i));
  return out;
}

Rng Rng::from_state(const State& s) {
  Rng r;
  r.key_ = s.key;
  r.counter_ = s.counter;
  r.has_spare_ = s.has_spare;
  r.spare_ = s.spare;
  return r;
}

}  // namespace genlab
