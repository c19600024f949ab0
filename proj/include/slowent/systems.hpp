#pragma once

// Phase spaces, base metrics and one-step maps.
//
// Four systems are supported: an irrational circle rotation, the skew product
// f(x,y) = (tau(x), y + beta(x) + rho) on I x T whose interval factor drifts
// slowly through a ladder of plateaus, the torus map (x,y) -> (x, x+y) and the
// left shift on a symbolic sequence. All maps are pure; nothing here holds
// mutable state.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace slowent {

// (sqrt(5) - 1) / 2 at full double precision.
inline constexpr double kGoldenRho = 0.61803398874989484820;

inline constexpr int kMinTruncationRadius = 8;
// Beyond this radius the dyadic sums in the symbolic metrics stop being exact
// in double precision.
inline constexpr int kMaxTruncationRadius = 37;

// A bi-infinite 0/1 sequence evaluated on demand.
class SymbolSequence {
 public:
  virtual ~SymbolSequence() = default;

  virtual int symbol(std::int64_t k) const = 0;
  virtual std::string describe() const = 0;

  // out[j] = symbol(first + j)
  virtual void fill(std::int64_t first, std::span<std::uint8_t> out) const;
};

// Rotation coding: 1 iff (x0 + k*rho) mod 1 lies in [1 - rho, 1).
int sturmian_symbol(double rho, double x0, std::int64_t k);

class SturmianSequence final : public SymbolSequence {
 public:
  SturmianSequence(double rho, double x0);
  int symbol(std::int64_t k) const override;
  std::string describe() const override;

 private:
  double rho_;
  double x0_;
};

class ConstantSequence final : public SymbolSequence {
 public:
  explicit ConstantSequence(int value) : value_(value != 0 ? 1 : 0) {}
  int symbol(std::int64_t) const override { return value_; }
  std::string describe() const override;

 private:
  int value_;
};

struct IntervalCirclePoint {
  double x = 0.0;  // in [0,1]
  double y = 0.0;  // circle coordinate in [0,1)
};

struct TorusPoint {
  double x = 0.0;
  double y = 0.0;
};

struct CirclePoint {
  double y = 0.0;
};

// sigma^offset(omega) for the sequence omega behind `source`.
struct ShiftPoint {
  std::shared_ptr<const SymbolSequence> source;
  std::int64_t offset = 0;
};

using PhasePoint = std::variant<IntervalCirclePoint, TorusPoint, CirclePoint, ShiftPoint>;

struct CircleRotation {
  double rho = kGoldenRho;
};

struct SkewProduct {
  double rho = kGoldenRho;
  double eps = 1.0 / 16.0;  // beta vanishes on [1 - eps, 1]
  int plateau_depth = 20;   // plateaus I_3 .. I_{plateau_depth} are materialized
};

struct TorusSkew {};

struct ShiftOnSubshift {
  std::shared_ptr<const SymbolSequence> source;
  int truncation_radius = 16;
};

using SystemSpec = std::variant<CircleRotation, SkewProduct, TorusSkew, ShiftOnSubshift>;

// Throws InvalidInput when construction parameters violate their ranges.
void validate(const SystemSpec& spec);
std::string system_name(const SystemSpec& spec);

// y mod 1 in [0,1).
double wrap_unit(double y);
// Canonical distance on R/Z.
double circle_distance(double a, double b);

// Displacement of the interval diffeomorphism tau = id + alpha. Constant
// 2^-(3n+4) on I_n = [2^-n, 3*2^-(n+1)] for 3 <= n <= plateau_depth, C^1 with
// |alpha'| < 1, zero exactly at 0 and 1.
double alpha(double x, int plateau_depth);
double tau(double x, int plateau_depth);
// Identity on [0, 7/8], zero on [1 - eps, 1], C^1 Hermite bridge in between
// that rises to 1 == 0 on the circle.
double beta(double x, double eps);

// Plateau I_n bounds, n >= 3.
double plateau_lower(int n);
double plateau_upper(int n);
double plateau_value(int n);

PhasePoint step(const SystemSpec& spec, const PhasePoint& p);
std::vector<PhasePoint> orbit(const SystemSpec& spec, const PhasePoint& p, std::int64_t n);

// Max metric on I x T and T^2, circle metric on T, truncated dyadic metric on
// shift points (radius K, truncation error at most 2^-(K-1)).
double base_distance(const SystemSpec& spec, const PhasePoint& p, const PhasePoint& q);

// Throws KindMismatch unless p lives in the phase space of spec.
void require_kind(const SystemSpec& spec, const PhasePoint& p);

bool is_symbolic(const SystemSpec& spec);

}  // namespace slowent
