#pragma once

#include <cstdint>
#include <random>

namespace awl {

// SplitMix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t z) noexcept;

// Seed for stream `index` under `master`. Distinct indices give
// decorrelated seeds; the result depends only on (master, index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

// 64-bit Mersenne Twister with the draws the simulation needs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double normal(double mean, double sd) { return mean + sd * std_normal_(engine_); }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> std_normal_;
};

}  // namespace awl
