#pragma once

// Finite-time separation along orbits: Bowen-Dinaburg (max), Hamming (mean),
// mismatch counts, the tail-window proxy for the asymptotic separation
// frequency, and the normalized mismatch distance between words.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "slowent/systems.hpp"

namespace slowent {

struct FrequencyEstimate {
  double value = 0.0;
  // (m, M_{delta,m} / m) at every checkpoint
  std::vector<std::pair<std::int64_t, double>> checkpoints;
  std::int64_t horizon = 0;
};

inline constexpr int kDefaultCheckpoints = 12;

// d(f^i p, f^i q) for i = 0..n-1.
std::vector<double> step_distances(const SystemSpec& spec, const PhasePoint& p, const PhasePoint& q,
                                   std::int64_t n);

double bowen_distance(const SystemSpec& spec, const PhasePoint& p, const PhasePoint& q, std::int64_t n);
// Same comparison as bowen_distance(...) >= delta, stopping at the first witness step.
bool bowen_separated(const SystemSpec& spec, const PhasePoint& p, const PhasePoint& q, std::int64_t n,
                     double delta);
double hamming_distance(const SystemSpec& spec, const PhasePoint& p, const PhasePoint& q, std::int64_t n);
std::int64_t mismatch_count(const SystemSpec& spec, const PhasePoint& p, const PhasePoint& q, double delta,
                            std::int64_t n);

// Geometrically spaced checkpoints in [n/4, n], deduplicated, ascending.
std::vector<std::int64_t> frequency_checkpoints(std::int64_t n, int count);
// Tail-window maximum of M_{delta,m}/m over the checkpoints.
FrequencyEstimate separation_frequency_estimate(const SystemSpec& spec, const PhasePoint& p, const PhasePoint& q,
                                                double delta, std::int64_t n,
                                                int checkpoint_count = kDefaultCheckpoints);
FrequencyEstimate frequency_from_distances(std::span<const double> distances, double delta,
                                           int checkpoint_count = kDefaultCheckpoints);

// Mismatching positions / length, for words of equal odd length.
double word_distance(std::span<const std::uint8_t> u, std::span<const std::uint8_t> v);

// Distances between shift points read off symbol windows. A window for a
// point at offset m and horizon n holds omega_{m-K} .. omega_{m+n-1+K}.
// Every quantity is a dyadic sum, so results do not depend on summation order.
class ShiftKernel {
 public:
  ShiftKernel(int radius, std::int64_t n);

  int radius() const { return radius_; }
  std::int64_t horizon() const { return n_; }
  std::size_t window_length() const { return static_cast<std::size_t>(n_ + 2 * radius_); }

  void step_distances(const std::uint8_t* a, const std::uint8_t* b, std::span<double> out) const;
  double bowen(const std::uint8_t* a, const std::uint8_t* b) const;
  bool bowen_at_least(const std::uint8_t* a, const std::uint8_t* b, double delta) const;
  // Mismatch in positions 0..n-1 relative to the offset, which forces d_n >= 1.
  bool interior_differs(const std::uint8_t* a, const std::uint8_t* b) const;
  // n * hamming
  double hamming_sum(const std::uint8_t* a, const std::uint8_t* b) const;
  double hamming(const std::uint8_t* a, const std::uint8_t* b) const;

 private:
  int radius_;
  std::int64_t n_;
  std::vector<double> weights_;
  double interior_weight_ = 0.0;
  std::size_t interior_begin_ = 0;
  std::size_t interior_end_ = 0;
};

// Symbol window of a shift point for the given kernel.
std::vector<std::uint8_t> shift_window(const ShiftPoint& p, const ShiftKernel& kernel);

}  // namespace slowent
