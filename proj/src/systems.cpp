#include "slowent/systems.hpp"

#include <cmath>
#include <fmt/format.h>

#include "slowent/errors.hpp"

namespace slowent {

namespace {

// Cubic smoothstep 3t^2 - 2t^3: C^1, zero slope at both ends, peak slope 1.5.
double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require_unit_interval(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError(fmt::format("{}: argument {} outside [0,1]", what, x));
  }
}

}  // namespace

void SymbolSequence::fill(std::int64_t first, std::span<std::uint8_t> out) const {
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = static_cast<std::uint8_t>(symbol(first + static_cast<std::int64_t>(j)));
  }
}

int sturmian_symbol(double rho, double x0, std::int64_t k) {
  const double v = wrap_unit(x0 + static_cast<double>(k) * rho);
  return v >= 1.0 - rho ? 1 : 0;
}

SturmianSequence::SturmianSequence(double rho, double x0) : rho_(rho), x0_(x0) {
  if (!(rho > 0.0 && rho < 1.0) || !(x0 >= 0.0 && x0 < 1.0)) {
    throw InvalidInput("sturmian: rho must lie in (0,1) and x0 in [0,1)");
  }
}

int SturmianSequence::symbol(std::int64_t k) const { return sturmian_symbol(rho_, x0_, k); }

std::string SturmianSequence::describe() const {
  return fmt::format("sturmian(rho={:.17g} x0={:.17g})", rho_, x0_);
}

std::string ConstantSequence::describe() const { return fmt::format("constant({})", value_); }

double wrap_unit(double y) {
  double r = y - std::floor(y);
  // y slightly below an integer rounds to exactly 1.0
  if (r >= 1.0) r = 0.0;
  return r;
}

double circle_distance(double a, double b) {
  const double d = std::fabs(a - b);
  const double r = d - std::floor(d);
  return std::min(r, 1.0 - r);
}

double plateau_lower(int n) { return std::ldexp(1.0, -n); }
double plateau_upper(int n) { return 3.0 * std::ldexp(1.0, -(n + 1)); }
double plateau_value(int n) { return std::ldexp(1.0, -(3 * n + 4)); }

double alpha(double x, int plateau_depth) {
  require_unit_interval(x, "alpha");
  if (x == 0.0 || x == 1.0) return 0.0;

  if (x >= 0.5) {
    return 0.125 * (1.0 - smoothstep((x - 0.5) / 0.5));
  }
  if (x >= plateau_upper(3)) {
    const double lo = plateau_upper(3);
    const double v3 = plateau_value(3);
    return v3 + (0.125 - v3) * smoothstep((x - lo) / (0.5 - lo));
  }

  // x in [2^-n, 2^-(n-1)) with n >= 3
  int e = 0;
  std::frexp(x, &e);
  const int n = 1 - e;
  if (n > plateau_depth) {
    const double lo = plateau_lower(plateau_depth);
    return plateau_value(plateau_depth) * smoothstep(x / lo);
  }
  if (x <= plateau_upper(n)) return plateau_value(n);
  // gap between I_n and I_{n-1}
  const double lo = plateau_upper(n);
  const double width = std::ldexp(1.0, -(n + 1));
  const double vn = plateau_value(n);
  const double vprev = plateau_value(n - 1);
  return vn + (vprev - vn) * smoothstep((x - lo) / width);
}

double tau(double x, int plateau_depth) {
  const double t = x + alpha(x, plateau_depth);
  return t > 1.0 ? 1.0 : t;
}

double beta(double x, double eps) {
  require_unit_interval(x, "beta");
  if (x <= 0.875) return x;
  const double hi = 1.0 - eps;
  if (x >= hi) return 0.0;
  // Hermite cubic: value 7/8 slope 1 at 7/8, value 1 slope 0 at 1 - eps
  const double h = hi - 0.875;
  const double t = (x - 0.875) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const double h10 = t3 - 2.0 * t2 + t;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  return wrap_unit(h00 * 0.875 + h10 * h + h01 * 1.0);
}

void validate(const SystemSpec& spec) {
  std::visit(overloaded{
                 [](const CircleRotation& s) {
                   if (!std::isfinite(s.rho)) throw InvalidInput("rotation: rho must be finite");
                 },
                 [](const SkewProduct& s) {
                   if (!std::isfinite(s.rho)) throw InvalidInput("skew: rho must be finite");
                   if (!(s.eps > 0.0 && s.eps < 0.125)) {
                     throw InvalidInput("skew: eps must lie in (0, 1/8)");
                   }
                   if (s.plateau_depth < 3 || s.plateau_depth > 60) {
                     throw InvalidInput("skew: plateau depth must lie in [3, 60]");
                   }
                 },
                 [](const TorusSkew&) {},
                 [](const ShiftOnSubshift& s) {
                   if (!s.source) throw InvalidInput("shift: missing symbol source");
                   if (s.truncation_radius < kMinTruncationRadius ||
                       s.truncation_radius > kMaxTruncationRadius) {
                     throw InvalidInput(fmt::format("shift: truncation radius must lie in [{}, {}]",
                                                    kMinTruncationRadius, kMaxTruncationRadius));
                   }
                 },
             },
             spec);
}

std::string system_name(const SystemSpec& spec) {
  return std::visit(overloaded{
                        [](const CircleRotation&) { return std::string("rotation"); },
                        [](const SkewProduct&) { return std::string("skew"); },
                        [](const TorusSkew&) { return std::string("torus"); },
                        [](const ShiftOnSubshift& s) {
                          return "shift:" + (s.source ? s.source->describe() : std::string("?"));
                        },
                    },
                    spec);
}

bool is_symbolic(const SystemSpec& spec) { return std::holds_alternative<ShiftOnSubshift>(spec); }

void require_kind(const SystemSpec& spec, const PhasePoint& p) {
  const bool ok = std::visit(overloaded{
                                 [&](const CircleRotation&) { return std::holds_alternative<CirclePoint>(p); },
                                 [&](const SkewProduct&) { return std::holds_alternative<IntervalCirclePoint>(p); },
                                 [&](const TorusSkew&) { return std::holds_alternative<TorusPoint>(p); },
                                 [&](const ShiftOnSubshift&) {
                                   return std::holds_alternative<ShiftPoint>(p) &&
                                          std::get<ShiftPoint>(p).source != nullptr;
                                 },
                             },
                             spec);
  if (!ok) {
    throw KindMismatch(fmt::format("point does not belong to the phase space of {}", system_name(spec)));
  }
}

PhasePoint step(const SystemSpec& spec, const PhasePoint& p) {
  require_kind(spec, p);
  return std::visit(overloaded{
                        [&](const CircleRotation& s) -> PhasePoint {
                          return CirclePoint{wrap_unit(std::get<CirclePoint>(p).y + s.rho)};
                        },
                        [&](const SkewProduct& s) -> PhasePoint {
                          const auto& q = std::get<IntervalCirclePoint>(p);
                          return IntervalCirclePoint{tau(q.x, s.plateau_depth),
                                                     wrap_unit(q.y + beta(q.x, s.eps) + s.rho)};
                        },
                        [&](const TorusSkew&) -> PhasePoint {
                          const auto& q = std::get<TorusPoint>(p);
                          return TorusPoint{q.x, wrap_unit(q.x + q.y)};
                        },
                        [&](const ShiftOnSubshift&) -> PhasePoint {
                          const auto& q = std::get<ShiftPoint>(p);
                          return ShiftPoint{q.source, q.offset + 1};
                        },
                    },
                    spec);
}

std::vector<PhasePoint> orbit(const SystemSpec& spec, const PhasePoint& p, std::int64_t n) {
  if (n < 0) throw InvalidInput("orbit: negative length");
  require_kind(spec, p);
  std::vector<PhasePoint> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  out.push_back(p);
  for (std::int64_t i = 0; i < n; ++i) out.push_back(step(spec, out.back()));
  return out;
}

double base_distance(const SystemSpec& spec, const PhasePoint& p, const PhasePoint& q) {
  require_kind(spec, p);
  require_kind(spec, q);
  return std::visit(overloaded{
                        [&](const CircleRotation&) {
                          return circle_distance(std::get<CirclePoint>(p).y, std::get<CirclePoint>(q).y);
                        },
                        [&](const SkewProduct&) {
                          const auto& a = std::get<IntervalCirclePoint>(p);
                          const auto& b = std::get<IntervalCirclePoint>(q);
                          return std::max(std::fabs(a.x - b.x), circle_distance(a.y, b.y));
                        },
                        [&](const TorusSkew&) {
                          const auto& a = std::get<TorusPoint>(p);
                          const auto& b = std::get<TorusPoint>(q);
                          return std::max(circle_distance(a.x, b.x), circle_distance(a.y, b.y));
                        },
                        [&](const ShiftOnSubshift& s) {
                          const auto& a = std::get<ShiftPoint>(p);
                          const auto& b = std::get<ShiftPoint>(q);
                          const int radius = s.truncation_radius;
                          // dyadic terms: the sum is exact in any order
                          double d = 0.0;
                          for (int k = -radius; k <= radius; ++k) {
                            if (a.source->symbol(a.offset + k) != b.source->symbol(b.offset + k)) {
                              d += std::ldexp(1.0, -std::abs(k));
                            }
                          }
                          return d;
                        },
                    },
                    spec);
}

}  // namespace slowent
