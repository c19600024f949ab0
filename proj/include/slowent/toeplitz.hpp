#pragma once

// Toeplitz sequences with periodic structure a_{n+1} = 2 b_n a_n.
//
// Level n owns the blocks A_n = {-a_n..a_n} + a_{n+1}Z; B_n is the union of
// A_1..A_n and C_n = B_n \ B_{n-1}. A position in C_n carries symbol 0 when n
// is odd and 1 when n is even. Every level above the explicit b prefix keeps
// doubling b, so the default prefix {4} yields b_n = 2^{n+1}.

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slowent/systems.hpp"

namespace slowent {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Positions are supported for |k| <= 2^62.
inline constexpr std::int64_t kMaxPosition = std::int64_t{1} << 62;

struct ToeplitzSpec {
  std::int64_t a1 = 2;
  // b_1, b_2, ...; entries past the end double the previous one
  std::vector<std::int64_t> b = {4};
  // number of block levels A_1..A_depth that are materialized
  int depth = 6;

  BigInt b_at(int n) const;
};

void validate(const ToeplitzSpec& spec);

// a_1 followed by a_{i+1} = 2 b_i a_i for every listed b_i.
std::vector<BigInt> derive_periods(std::int64_t a1, std::span<const std::int64_t> b);
// a_1 .. a_{depth+1}
std::vector<BigInt> derive_periods(const ToeplitzSpec& spec);

class IrregularToeplitz final : public SymbolSequence {
 public:
  explicit IrregularToeplitz(ToeplitzSpec spec);

  const ToeplitzSpec& spec() const { return spec_; }
  const std::vector<BigInt>& periods() const { return periods_; }
  int depth() const { return spec_.depth; }

  // k in A_n, 1 <= n <= depth
  bool in_block(std::int64_t k, int n) const;
  // least n with k in A_n; DepthExceeded when k is outside B_depth
  int level_of(std::int64_t k) const;
  int symbol(std::int64_t k) const override;
  std::string describe() const override;

 private:
  ToeplitzSpec spec_;
  std::vector<BigInt> periods_;
  // a_n and a_{n+1} as int64 where representable, -1 otherwise
  std::vector<std::int64_t> half_width_;
  std::vector<std::int64_t> period_;
};

// Trailing-zeros Toeplitz sequence: symbol 1 when |k| has an even number of
// trailing binary zeros, 0 when odd; position 0 is filled with 0.
int regular_symbol_at(std::int64_t k);

class RegularToeplitz final : public SymbolSequence {
 public:
  int symbol(std::int64_t k) const override { return regular_symbol_at(k); }
  std::string describe() const override { return "regular-toeplitz"; }
};

int level_of(const IrregularToeplitz& seq, std::int64_t k);
int symbol_at(const IrregularToeplitz& seq, std::int64_t k);

using Word = std::vector<std::uint8_t>;

// (omega_{m-N}, ..., omega_{m+N})
Word window(const SymbolSequence& seq, std::int64_t m, std::int64_t radius);

// Exact density of B_n, i.e. (#residues of B_n mod a_{n+1}) / a_{n+1}.
Rational periodic_density(const ToeplitzSpec& spec, int n);
// Numerator of the above.
BigInt periodic_residue_count(const ToeplitzSpec& spec, int n);

struct PeriodicityReport {
  int level = 0;
  std::int64_t probe_range = 0;
  std::int64_t checked_positions = 0;
  std::vector<std::int64_t> violations;
  // k in C_{n+1} and l with omega_{k + l a_{n+1}} != omega_k
  std::optional<std::pair<std::int64_t, std::int64_t>> aperiodic_witness;
  bool passed = false;
};

PeriodicityReport verify_periodic_structure(const IrregularToeplitz& seq, int n, std::int64_t probe_range);

enum class Verdict { Irregular, Inconclusive };

struct IrregularityCertificate {
  // sum_{i<=n} (2a_i + 1)/a_{i+1} for n = 1..depth
  std::vector<Rational> partial_sums;
  // periodic_density(n) for n = 1..depth
  std::vector<Rational> densities;
  // bound on the remaining series past depth
  Rational tail_bound;
  Rational limit_bound;
  Verdict verdict = Verdict::Inconclusive;
};

IrregularityCertificate irregularity_certificate(const ToeplitzSpec& spec);

std::string to_string(Verdict v);

// Fraction of ones among positions lo..hi.
double ones_frequency(const SymbolSequence& seq, std::int64_t lo, std::int64_t hi);

// Header line plus one line per position: "k symbol".
void write_sequence(std::ostream& os, const SymbolSequence& seq, std::int64_t lo, std::int64_t hi);
// CSV with columns n,numerator,denominator.
void write_density_csv(std::ostream& os, const ToeplitzSpec& spec);

std::string describe(const ToeplitzSpec& spec);

}  // namespace slowent
