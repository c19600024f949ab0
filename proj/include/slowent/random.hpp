#pragma once

// Seed discipline: one 64-bit master seed per run. Every experiment derives
// its own stream as derive_seed(master, tag), so adding or reordering
// experiments never perturbs the draws of another one.

#include <cstdint>
#include <random>
#include <string_view>

namespace slowent {

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [lo, hi], independent of the standard library's distributions.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  // Uniform on [0, 1) with 53 random bits.
  double uniform01();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace slowent
