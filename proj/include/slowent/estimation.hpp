#pragma once

// Growth exponents from separation counts: log-log least squares with local
// slopes, per-delta aggregation, amorphic fits against 1/nu and inversion of
// general scale functions a(s, n).

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slowent/separation.hpp"
#include "slowent/systems.hpp"

namespace slowent {

struct Sample {
  double n = 0.0;  // horizon, or 1/nu for amorphic fits
  double count = 0.0;
};

struct GrowthEstimate {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
  // (n_j, slope between samples j and j+1 on the log-log scale); on a
  // doubling schedule this is (log S_2n - log S_n) / log 2
  std::vector<std::pair<double, double>> local_slopes;
  std::pair<double, double> window{0.0, 0.0};
  std::vector<double> delta_schedule;
};

// Least squares of log count against log n.
GrowthEstimate fit_power_law(std::span<const Sample> samples);

enum class Quantity { Pow, Mod };
std::string to_string(Quantity q);
Quantity parse_quantity(const std::string& text);

inline const std::vector<double> kDefaultDeltaSchedule = {0.4, 0.25, 0.15, 0.1};

// Powers of two from 2^lo to 2^hi.
std::vector<std::int64_t> dyadic_schedule(int lo, int hi);

struct EntropyEstimate {
  Quantity quantity = Quantity::Pow;
  std::vector<GrowthEstimate> per_delta;  // one per delta, schedule order
  std::vector<SeparationResult> results;  // delta-major, then n
  double aggregate = 0.0;                 // max slope over the schedule
};

EntropyEstimate entropy_estimate(const SystemSpec& spec, Quantity quantity, const std::vector<double>& deltas,
                                 const std::vector<std::int64_t>& ns, const CandidateSet& candidates,
                                 unsigned threads = 1, Method method = Method::Greedy);

// Modified power entropy of the plateau skew product from the witness sets:
// counts 2^k at horizons 2^(2k+2), delta = 1/4, for k = k_lo..k_hi. A block
// whose verification fails contributes the trivial count 1.
EntropyEstimate witness_entropy_estimate(const SkewProduct& spec, int k_lo, int k_hi);

struct AmorphicEstimate {
  GrowthEstimate fit;  // over (1/nu, S*_nu)
  std::vector<SeparationResult> results;
};

AmorphicEstimate amorphic_estimate(const SystemSpec& spec, double delta, const std::vector<double>& nus,
                                   const CandidateSet& candidates, std::int64_t horizon, unsigned threads = 1,
                                   Method method = Method::Greedy);

struct ScaleFamily {
  std::string name;
  std::function<double(double s, double n)> a;
  double s_min = 0.0;
  double s_max = 1.0;
};

ScaleFamily power_family();        // n^s, s in [0, 64]
ScaleFamily exponential_family();  // e^(s n), s in [0, 16]

struct ScaleEntropy {
  double upper = 0.0;
  double lower = 0.0;
  std::vector<std::pair<double, double>> solutions;  // (n, s with a(s,n) = count)
};

// Window defaults to the tail half of the samples.
ScaleEntropy scale_entropy(std::span<const Sample> samples, const ScaleFamily& family,
                           std::optional<std::pair<double, double>> window = std::nullopt);

// max log(count)/n over samples with n >= n_max / 4.
double exponential_rate(std::span<const Sample> samples);

std::vector<Sample> samples_of(const std::vector<SeparationResult>& results);

}  // namespace slowent
