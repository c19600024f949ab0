#include "slowent/toeplitz.hpp"

#include <fmt/format.h>

#include <limits>
#include <ostream>

#include "slowent/errors.hpp"

namespace slowent {

namespace {

constexpr std::int64_t kInt64Max = std::numeric_limits<std::int64_t>::max();

std::int64_t to_int64_or_sentinel(const BigInt& v) {
  return v > BigInt(kInt64Max) ? -1 : static_cast<std::int64_t>(v);
}

}  // namespace

BigInt ToeplitzSpec::b_at(int n) const {
  if (n < 1) throw InvalidInput("b_n is defined for n >= 1");
  const auto listed = static_cast<int>(b.size());
  if (n <= listed) return BigInt(b[n - 1]);
  return BigInt(b.back()) << (n - listed);
}

void validate(const ToeplitzSpec& spec) {
  if (spec.a1 < 1) throw InvalidInput("toeplitz: a1 must be positive");
  if (spec.b.empty()) throw InvalidInput("toeplitz: b schedule is empty");
  for (auto v : spec.b) {
    if (v < 2) throw InvalidInput("toeplitz: every b_n must be >= 2");
  }
  if (spec.depth < 1 || spec.depth > 40) throw InvalidInput("toeplitz: depth must lie in [1, 40]");
}

std::vector<BigInt> derive_periods(std::int64_t a1, std::span<const std::int64_t> b) {
  if (a1 < 1) throw InvalidInput("derive_periods: a1 must be positive");
  std::vector<BigInt> a{BigInt(a1)};
  for (auto bn : b) {
    if (bn < 2) throw InvalidInput("derive_periods: b_n must be >= 2");
    a.push_back(2 * BigInt(bn) * a.back());
  }
  return a;
}

std::vector<BigInt> derive_periods(const ToeplitzSpec& spec) {
  validate(spec);
  std::vector<BigInt> a{BigInt(spec.a1)};
  for (int n = 1; n <= spec.depth; ++n) a.push_back(2 * spec.b_at(n) * a.back());
  return a;
}

IrregularToeplitz::IrregularToeplitz(ToeplitzSpec spec) : spec_(std::move(spec)) {
  periods_ = derive_periods(spec_);
  half_width_.assign(static_cast<std::size_t>(spec_.depth) + 1, 0);
  period_.assign(static_cast<std::size_t>(spec_.depth) + 1, 0);
  for (int n = 1; n <= spec_.depth; ++n) {
    half_width_[n] = to_int64_or_sentinel(periods_[n - 1]);
    period_[n] = to_int64_or_sentinel(periods_[n]);
  }
}

bool IrregularToeplitz::in_block(std::int64_t k, int n) const {
  if (n < 1 || n > spec_.depth) throw DepthExceeded(fmt::format("level {} is not materialized", n));
  const std::int64_t hw = half_width_[n];
  const std::int64_t p = period_[n];
  if (p < 0) {
    // a_{n+1} > 2^63 > 2|k|, so the centred residue of k is k itself
    return hw < 0 || (k >= -hw && k <= hw);
  }
  std::int64_t r = k % p;
  if (r < 0) r += p;
  return r <= hw || r >= p - hw;
}

int IrregularToeplitz::level_of(std::int64_t k) const {
  if (k > kMaxPosition || k < -kMaxPosition) {
    throw DepthExceeded(fmt::format("position {} outside the supported range", k));
  }
  for (int n = 1; n <= spec_.depth; ++n) {
    if (in_block(k, n)) return n;
  }
  throw DepthExceeded(fmt::format("position {} is not covered by levels 1..{}", k, spec_.depth));
}

int IrregularToeplitz::symbol(std::int64_t k) const { return level_of(k) % 2 == 1 ? 0 : 1; }

std::string IrregularToeplitz::describe() const { return "toeplitz(" + slowent::describe(spec_) + ")"; }

int regular_symbol_at(std::int64_t k) {
  if (k == 0) return 0;
  const auto u = static_cast<std::uint64_t>(k < 0 ? -k : k);
  const int t = __builtin_ctzll(u);
  return t % 2 == 0 ? 1 : 0;
}

int level_of(const IrregularToeplitz& seq, std::int64_t k) { return seq.level_of(k); }
int symbol_at(const IrregularToeplitz& seq, std::int64_t k) { return seq.symbol(k); }

Word window(const SymbolSequence& seq, std::int64_t m, std::int64_t radius) {
  if (radius < 0) throw InvalidInput("window: negative radius");
  Word w(static_cast<std::size_t>(2 * radius + 1));
  seq.fill(m - radius, w);
  return w;
}

BigInt periodic_residue_count(const ToeplitzSpec& spec, int n) {
  validate(spec);
  if (n < 0 || n > spec.depth) throw InvalidInput(fmt::format("periodic_density: level {} outside 0..depth", n));
  // c counts residues of B_{i-1} modulo a_i. B_{i-1} is a_i-periodic, so it
  // fills 2 b_i copies of itself modulo a_{i+1} and meets the window
  // {-a_i..a_i} of A_i in 2c positions, plus the position -a_i == 0 once 0 in B_{i-1}.
  BigInt c = 0;
  BigInt a = spec.a1;
  for (int i = 1; i <= n; ++i) {
    const BigInt b = spec.b_at(i);
    const BigInt overlap = 2 * c + (i >= 2 ? 1 : 0);
    c = 2 * b * c + (2 * a + 1) - overlap;
    a = 2 * b * a;
  }
  return c;
}

Rational periodic_density(const ToeplitzSpec& spec, int n) {
  const BigInt count = periodic_residue_count(spec, n);
  if (n == 0) return Rational(0);
  const auto a = derive_periods(spec);
  return Rational(count, a[n]);
}

PeriodicityReport verify_periodic_structure(const IrregularToeplitz& seq, int n, std::int64_t probe_range) {
  PeriodicityReport report;
  report.level = n;
  report.probe_range = probe_range;
  if (n == 0) {
    report.passed = true;
    return report;
  }
  if (n < 0 || n + 2 > seq.depth()) {
    throw InvalidInput(fmt::format("verify_periodic_structure: level {} needs depth >= {}", n, n + 2));
  }
  if (probe_range < 0 || probe_range > kMaxPosition / 4) throw InvalidInput("verify_periodic_structure: bad probe range");

  const auto& a = seq.periods();
  if (a[n] > BigInt(kMaxPosition)) throw DepthExceeded("verify_periodic_structure: period exceeds position range");
  const auto period = static_cast<std::int64_t>(a[n]);  // a_{n+1}

  // levels above n + 1 are never needed, so positions outside B_depth are fine
  auto low_level = [&](std::int64_t k) {
    for (int j = 1; j <= n + 1; ++j) {
      if (seq.in_block(k, j)) return j;
    }
    return n + 2;
  };
  auto try_witness = [&](std::int64_t k) {
    const auto reach = static_cast<std::int64_t>(4 * seq.spec().b_at(n + 1));
    const int s = seq.symbol(k);
    for (std::int64_t l = 1; l <= reach && !report.aperiodic_witness; ++l) {
      for (std::int64_t sign : {1, -1}) {
        try {
          if (seq.symbol(k + sign * l * period) != s) {
            report.aperiodic_witness = std::make_pair(k, sign * l);
            break;
          }
        } catch (const DepthExceeded&) {
        }
      }
    }
  };
  for (std::int64_t k = -probe_range; k <= probe_range; ++k) {
    const int lev = low_level(k);
    if (lev <= n) {
      ++report.checked_positions;
      const int s = seq.symbol(k);
      for (std::int64_t l = -4; l <= 4; ++l) {
        if (l != 0 && seq.symbol(k + l * period) != s) {
          report.violations.push_back(k);
          break;
        }
      }
    } else if (lev == n + 1 && !report.aperiodic_witness) {
      try_witness(k);
    }
  }
  // the probe window may hold no level n + 1 position at all
  for (std::int64_t k = probe_range + 1; k <= period && !report.aperiodic_witness; ++k) {
    if (low_level(k) == n + 1) try_witness(k);
  }
  report.passed = report.violations.empty() && report.aperiodic_witness.has_value();
  return report;
}

IrregularityCertificate irregularity_certificate(const ToeplitzSpec& spec) {
  validate(spec);
  if (spec.depth < 2) throw InvalidInput("irregularity_certificate: depth must be >= 2");
  IrregularityCertificate cert;
  const auto a = derive_periods(spec);
  Rational sum = 0;
  bool dominated = true;
  for (int n = 1; n <= spec.depth; ++n) {
    sum += Rational(2 * a[n - 1] + 1, a[n]);
    cert.partial_sums.push_back(sum);
    cert.densities.push_back(periodic_density(spec, n));
    if (cert.densities.back() > sum) dominated = false;
  }
  // (2a_i + 1)/a_{i+1} = 1/b_i + 1/a_{i+1}. Past the listed prefix b doubles,
  // and a_{i+1} >= 4 a_i bounds the second part geometrically.
  const int last_listed = std::max(spec.depth, static_cast<int>(spec.b.size()));
  Rational tail = 0;
  for (int i = spec.depth + 1; i <= last_listed; ++i) tail += Rational(BigInt(1), spec.b_at(i));
  tail += Rational(BigInt(1), spec.b_at(last_listed));
  const BigInt a_next = 2 * spec.b_at(spec.depth + 1) * a.back();  // a_{depth+2}
  tail += Rational(BigInt(4), 3 * a_next);
  cert.tail_bound = tail;
  cert.limit_bound = sum + tail;
  cert.verdict = (dominated && cert.limit_bound < 1) ? Verdict::Irregular : Verdict::Inconclusive;
  return cert;
}

std::string to_string(Verdict v) { return v == Verdict::Irregular ? "irregular" : "inconclusive"; }

double ones_frequency(const SymbolSequence& seq, std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw InvalidInput("ones_frequency: empty range");
  std::int64_t ones = 0;
  for (std::int64_t k = lo; k <= hi; ++k) ones += seq.symbol(k);
  return static_cast<double>(ones) / static_cast<double>(hi - lo + 1);
}

void write_sequence(std::ostream& os, const SymbolSequence& seq, std::int64_t lo, std::int64_t hi) {
  os << "# " << seq.describe() << " range " << lo << ".." << hi << '\n';
  for (std::int64_t k = lo; k <= hi; ++k) os << k << ' ' << seq.symbol(k) << '\n';
}

void write_density_csv(std::ostream& os, const ToeplitzSpec& spec) {
  os << "n,numerator,denominator\n";
  for (int n = 1; n <= spec.depth; ++n) {
    const Rational d = periodic_density(spec, n);
    os << n << ',' << numerator(d) << ',' << denominator(d) << '\n';
  }
}

std::string describe(const ToeplitzSpec& spec) {
  std::string b;
  for (std::size_t i = 0; i < spec.b.size(); ++i) {
    if (i) b += ':';
    b += std::to_string(spec.b[i]);
  }
  return fmt::format("a1={} b={} depth={}", spec.a1, b, spec.depth);
}

}  // namespace slowent
