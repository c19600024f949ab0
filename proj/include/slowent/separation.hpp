#pragma once

// Separation numbers over finite candidate sets: greedy maximal packings,
// exact maxima via maximum clique, the plateau witness sets of the skew
// product and subword counts for symbolic sequences.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slowent/systems.hpp"

namespace slowent {

class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n);
  // Validated copy of a nested-row matrix.
  explicit DistanceMatrix(const std::vector<std::vector<double>>& rows);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  // Writes both (i,j) and (j,i).
  void set(std::size_t i, std::size_t j, double value);

  // Throws InvalidInput unless square, symmetric, finite, nonnegative with zero diagonal.
  void validate() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

// Index-order scan keeping i iff separated(j, i) holds for every kept j.
// Kept indices are tested newest first.
template <class Separated>
std::vector<std::size_t> greedy_select(std::size_t count, Separated&& separated) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < count; ++i) {
    bool ok = true;
    for (auto it = kept.rbegin(); it != kept.rend(); ++it) {
      if (!separated(*it, i)) {
        ok = false;
        break;
      }
    }
    if (ok) kept.push_back(i);
  }
  return kept;
}

std::vector<std::size_t> greedy_separated(const DistanceMatrix& distances, double delta);

inline constexpr std::size_t kExactLimit = 64;

struct ExactSelection {
  std::size_t count = 0;
  std::vector<std::size_t> members;  // ascending
};

ExactSelection exact_max_separated(const DistanceMatrix& distances, double delta,
                                   std::size_t limit = kExactLimit);

enum class SeparationKind { Bowen, Hamming, Asymptotic, Subword };
enum class Method { Greedy, Exact, Witness };

std::string to_string(SeparationKind kind);
std::string to_string(Method method);
Method parse_method(const std::string& text);

struct Provenance {
  std::string sampler;
  std::uint64_t seed = 0;
  std::size_t count = 0;
};

struct CandidateSet {
  std::vector<PhasePoint> points;
  Provenance provenance;
};

struct CenterSet {
  std::vector<std::int64_t> centers;
  Provenance provenance;
};

// y_j = j / count
CandidateSet circle_grid(std::size_t count);
// (j / count, y)
CandidateSet torus_x_grid(std::size_t count, double y = 0.0);
CandidateSet torus_grid(std::size_t nx, std::size_t ny);
// cell midpoints in x over [0,1], y_j = j / ny
CandidateSet interval_circle_grid(std::size_t nx, std::size_t ny);
CandidateSet shift_points(std::shared_ptr<const SymbolSequence> source, const CenterSet& centers);

CenterSet progression_centers(std::int64_t start, std::int64_t step, std::size_t count);
// Distinct uniform draws from [lo, hi] in draw order.
CenterSet random_centers(std::int64_t lo, std::int64_t hi, std::size_t count, std::uint64_t seed);

// Grid or center sampler suited to the system's phase space, about `count` points.
CandidateSet default_candidates(const SystemSpec& spec, std::size_t count, std::uint64_t seed);

struct SeparationResult {
  std::string system;
  SeparationKind kind = SeparationKind::Bowen;
  Method method = Method::Greedy;
  double delta = 0.0;
  double nu = std::numeric_limits<double>::quiet_NaN();
  std::int64_t n = 0;  // horizon, or word radius for subword counts
  std::size_t count = 0;
  std::vector<std::size_t> members;  // indices into the candidates
  Provenance provenance;
};

SeparationResult bowen_separation_number(const SystemSpec& spec, std::int64_t n, double delta,
                                         const CandidateSet& candidates, Method method = Method::Greedy,
                                         unsigned threads = 1);
SeparationResult hamming_separation_number(const SystemSpec& spec, std::int64_t n, double delta,
                                           const CandidateSet& candidates, Method method = Method::Greedy,
                                           unsigned threads = 1);
// Pairs count as separated when their frequency estimate at horizon is >= nu.
SeparationResult asymptotic_separation_number(const SystemSpec& spec, double delta, double nu,
                                              const CandidateSet& candidates, std::int64_t horizon,
                                              Method method = Method::Greedy, unsigned threads = 1);
// One frequency evaluation per pair, shared by every nu in the schedule.
std::vector<SeparationResult> asymptotic_separation_numbers(const SystemSpec& spec, double delta,
                                                           const std::vector<double>& nus,
                                                           const CandidateSet& candidates, std::int64_t horizon,
                                                           Method method = Method::Greedy, unsigned threads = 1);
// Words of length 2n+1 centred at the given positions, compared under word_distance.
SeparationResult subword_separation_number(const SymbolSequence& source, std::int64_t n, double delta,
                                           const CenterSet& centers, Method method = Method::Greedy);

inline constexpr double kWitnessTolerance = 1e-6;

struct WitnessReport {
  int n_block = 0;
  std::vector<PhasePoint> points;
  std::int64_t horizon = 0;
  double min_distance = 0.0;
  std::size_t pair_count = 0;
  bool orbits_in_plateau = false;
  // first step at which some first coordinate left I_n, with the point index
  std::optional<std::pair<std::int64_t, std::size_t>> plateau_exit;
  std::optional<std::pair<std::size_t, std::size_t>> offending_pair;
  bool passed = false;
};

// 2^n points (2^-n + j 2^-(2n+2), 0), j = 0..2^n-1, checked for plateau
// confinement and pairwise Hamming distance >= 1/4 - tol at horizon 2^(2n+2).
WitnessReport counterexample_witness_set(int n_block, const SkewProduct& spec = {},
                                         double tolerance = kWitnessTolerance);

struct BowenTransfer {
  std::int64_t n = 0;
  double min_distance = 0.0;  // min pairwise d_n at the reported n
  bool check = false;
};

// Least n <= horizon at which every witness pair has met distance >= delta;
// SearchExhausted when some pair never does.
BowenTransfer sep_to_bowen_witness(const SystemSpec& spec, double delta, double nu,
                                   const std::vector<PhasePoint>& witness, std::int64_t horizon);

// system,kind,method,delta,nu,n,count,seed,sampler,candidate_count
void write_results_header(std::ostream& os);
void write_result_row(std::ostream& os, const SeparationResult& result);

}  // namespace slowent
