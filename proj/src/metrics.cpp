#include "slowent/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "slowent/errors.hpp"

namespace slowent {

namespace {

void require_horizon(std::int64_t n) {
  if (n < 1) throw InvalidInput(fmt::format("horizon must be >= 1, got {}", n));
}

// Calls visit(i, d_i) for i = 0..n-1 until it returns false.
template <class Visit>
void walk_distances(const SystemSpec& spec, const PhasePoint& p, const PhasePoint& q, std::int64_t n,
                    Visit&& visit) {
  require_kind(spec, p);
  require_kind(spec, q);
  if (const auto* shift = std::get_if<ShiftOnSubshift>(&spec)) {
    const ShiftKernel kernel(shift->truncation_radius, n);
    const auto wa = shift_window(std::get<ShiftPoint>(p), kernel);
    const auto wb = shift_window(std::get<ShiftPoint>(q), kernel);
    std::vector<double> d(static_cast<std::size_t>(n));
    kernel.step_distances(wa.data(), wb.data(), d);
    for (std::int64_t i = 0; i < n; ++i) {
      if (!visit(i, d[static_cast<std::size_t>(i)])) return;
    }
    return;
  }
  PhasePoint a = p;
  PhasePoint b = q;
  for (std::int64_t i = 0; i < n; ++i) {
    if (!visit(i, base_distance(spec, a, b))) return;
    if (i + 1 < n) {
      a = step(spec, a);
      b = step(spec, b);
    }
  }
}

}  // namespace

std::vector<double> step_distances(const SystemSpec& spec, const PhasePoint& p, const PhasePoint& q,
                                   std::int64_t n) {
  require_horizon(n);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  walk_distances(spec, p, q, n, [&](std::int64_t, double d) {
    out.push_back(d);
    return true;
  });
  return out;
}

double bowen_distance(const SystemSpec& spec, const PhasePoint& p, const PhasePoint& q, std::int64_t n) {
  require_horizon(n);
  double best = 0.0;
  walk_distances(spec, p, q, n, [&](std::int64_t, double d) {
    best = std::max(best, d);
    return true;
  });
  return best;
}

bool bowen_separated(const SystemSpec& spec, const PhasePoint& p, const PhasePoint& q, std::int64_t n,
                     double delta) {
  require_horizon(n);
  if (const auto* shift = std::get_if<ShiftOnSubshift>(&spec)) {
    require_kind(spec, p);
    require_kind(spec, q);
    const ShiftKernel kernel(shift->truncation_radius, n);
    const auto wa = shift_window(std::get<ShiftPoint>(p), kernel);
    const auto wb = shift_window(std::get<ShiftPoint>(q), kernel);
    return kernel.bowen_at_least(wa.data(), wb.data(), delta);
  }
  bool hit = false;
  walk_distances(spec, p, q, n, [&](std::int64_t, double d) {
    hit = d >= delta;
    return !hit;
  });
  return hit;
}

double hamming_distance(const SystemSpec& spec, const PhasePoint& p, const PhasePoint& q, std::int64_t n) {
  require_horizon(n);
  if (const auto* shift = std::get_if<ShiftOnSubshift>(&spec)) {
    require_kind(spec, p);
    require_kind(spec, q);
    const ShiftKernel kernel(shift->truncation_radius, n);
    const auto wa = shift_window(std::get<ShiftPoint>(p), kernel);
    const auto wb = shift_window(std::get<ShiftPoint>(q), kernel);
    return kernel.hamming(wa.data(), wb.data());
  }
  double sum = 0.0;
  double best = 0.0;
  walk_distances(spec, p, q, n, [&](std::int64_t, double d) {
    sum += d;
    best = std::max(best, d);
    return true;
  });
  // rounding in the sum can push the mean an ulp past the largest term
  return std::min(sum / static_cast<double>(n), best);
}

std::int64_t mismatch_count(const SystemSpec& spec, const PhasePoint& p, const PhasePoint& q, double delta,
                            std::int64_t n) {
  require_horizon(n);
  if (!(delta > 0.0)) throw InvalidInput("mismatch_count: delta must be positive");
  std::int64_t count = 0;
  walk_distances(spec, p, q, n, [&](std::int64_t, double d) {
    if (d >= delta) ++count;
    return true;
  });
  return count;
}

std::vector<std::int64_t> frequency_checkpoints(std::int64_t n, int count) {
  if (n < 4) throw InvalidInput("frequency checkpoints need a horizon >= 4");
  if (count < 2) throw InvalidInput("frequency checkpoints need at least 2 checkpoints");
  const double lo = static_cast<double>(n) / 4.0;
  std::vector<std::int64_t> out;
  for (int j = 0; j < count; ++j) {
    const double m = lo * std::pow(4.0, static_cast<double>(j) / (count - 1));
    auto v = static_cast<std::int64_t>(std::llround(m));
    v = std::clamp<std::int64_t>(v, std::max<std::int64_t>(1, (n + 3) / 4), n);
    if (out.empty() || out.back() != v) out.push_back(v);
  }
  out.back() = n;
  return out;
}

FrequencyEstimate frequency_from_distances(std::span<const double> distances, double delta, int checkpoint_count) {
  if (!(delta > 0.0)) throw InvalidInput("separation frequency: delta must be positive");
  const auto n = static_cast<std::int64_t>(distances.size());
  FrequencyEstimate est;
  est.horizon = n;
  const auto marks = frequency_checkpoints(n, checkpoint_count);
  std::int64_t count = 0;
  std::size_t next = 0;
  for (std::int64_t i = 0; i < n && next < marks.size(); ++i) {
    if (distances[static_cast<std::size_t>(i)] >= delta) ++count;
    if (i + 1 == marks[next]) {
      const double ratio = static_cast<double>(count) / static_cast<double>(marks[next]);
      est.checkpoints.emplace_back(marks[next], ratio);
      est.value = std::max(est.value, ratio);
      ++next;
    }
  }
  return est;
}

FrequencyEstimate separation_frequency_estimate(const SystemSpec& spec, const PhasePoint& p, const PhasePoint& q,
                                                double delta, std::int64_t n, int checkpoint_count) {
  frequency_checkpoints(n, checkpoint_count);
  const auto d = step_distances(spec, p, q, n);
  return frequency_from_distances(d, delta, checkpoint_count);
}

double word_distance(std::span<const std::uint8_t> u, std::span<const std::uint8_t> v) {
  if (u.size() != v.size()) {
    throw InvalidInput(fmt::format("word_distance: lengths {} and {} differ", u.size(), v.size()));
  }
  if (u.size() % 2 == 0) throw InvalidInput("word_distance: words must have odd length 2n+1");
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < u.size(); ++i) mismatches += (u[i] != v[i]);
  return static_cast<double>(mismatches) / static_cast<double>(u.size());
}

ShiftKernel::ShiftKernel(int radius, std::int64_t n) : radius_(radius), n_(n) {
  if (radius < 0 || radius > kMaxTruncationRadius) throw InvalidInput("shift kernel: bad truncation radius");
  require_horizon(n);
  const std::size_t len = window_length();
  weights_.assign(len, 0.0);
  // w_p = sum over steps i < n with |p - K - i| <= K of 2^-|p-K-i|
  for (std::size_t p = 0; p < len; ++p) {
    const auto pos = static_cast<std::int64_t>(p) - radius_;
    const std::int64_t i_lo = std::max<std::int64_t>(0, pos - radius_);
    const std::int64_t i_hi = std::min<std::int64_t>(n_ - 1, pos + radius_);
    double w = 0.0;
    for (std::int64_t i = i_lo; i <= i_hi; ++i) w += std::ldexp(1.0, -static_cast<int>(std::llabs(pos - i)));
    weights_[p] = w;
  }
  interior_weight_ = 3.0 - std::ldexp(1.0, 1 - radius_);
  if (n_ > 2 * radius_) {
    interior_begin_ = static_cast<std::size_t>(2 * radius_);
    interior_end_ = static_cast<std::size_t>(n_);
  }
}

void ShiftKernel::step_distances(const std::uint8_t* a, const std::uint8_t* b, std::span<double> out) const {
  const int K = radius_;
  const double tail = std::ldexp(1.0, -K);
  auto z = [&](std::int64_t p) -> double { return a[p] != b[p] ? 1.0 : 0.0; };
  // left part L_i = sum_{k=0..K} 2^-k z[i+K-k], right part R_i = sum_{k=1..K} 2^-k z[i+K+k]
  double left = 0.0;
  double right = 0.0;
  for (int k = 0; k <= K; ++k) left += std::ldexp(z(K - k), -k);
  for (int k = 1; k <= K; ++k) right += std::ldexp(z(K + k), -k);
  for (std::int64_t i = 0; i < n_; ++i) {
    out[static_cast<std::size_t>(i)] = left + right;
    if (i + 1 == n_) break;
    left = z(i + 1 + K) + 0.5 * (left - tail * z(i));
    right = 2.0 * (right - 0.5 * z(i + K + 1)) + tail * z(i + 2 * K + 1);
  }
}

double ShiftKernel::bowen(const std::uint8_t* a, const std::uint8_t* b) const {
  std::vector<double> d(static_cast<std::size_t>(n_));
  step_distances(a, b, d);
  return *std::max_element(d.begin(), d.end());
}

bool ShiftKernel::interior_differs(const std::uint8_t* a, const std::uint8_t* b) const {
  return std::memcmp(a + radius_, b + radius_, static_cast<std::size_t>(n_)) != 0;
}

bool ShiftKernel::bowen_at_least(const std::uint8_t* a, const std::uint8_t* b, double delta) const {
  if (delta <= 1.0 && interior_differs(a, b)) return true;
  return bowen(a, b) >= delta;
}

double ShiftKernel::hamming_sum(const std::uint8_t* a, const std::uint8_t* b) const {
  const std::size_t len = window_length();
  double sum = 0.0;
  for (std::size_t p = 0; p < interior_begin_; ++p) sum += (a[p] != b[p]) ? weights_[p] : 0.0;
  std::int64_t mid = 0;
  for (std::size_t p = interior_begin_; p < interior_end_; ++p) mid += (a[p] != b[p]);
  sum += interior_weight_ * static_cast<double>(mid);
  for (std::size_t p = std::max(interior_end_, interior_begin_); p < len; ++p) {
    sum += (a[p] != b[p]) ? weights_[p] : 0.0;
  }
  return sum;
}

double ShiftKernel::hamming(const std::uint8_t* a, const std::uint8_t* b) const {
  return hamming_sum(a, b) / static_cast<double>(n_);
}

std::vector<std::uint8_t> shift_window(const ShiftPoint& p, const ShiftKernel& kernel) {
  std::vector<std::uint8_t> w(kernel.window_length());
  p.source->fill(p.offset - kernel.radius(), w);
  return w;
}

}  // namespace slowent
