#include "slowent/estimation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "slowent/errors.hpp"
#include "slowent/parallel.hpp"

namespace slowent {

namespace {

void require_samples(std::span<const Sample> samples) {
  if (samples.size() < 3) throw InvalidInput("growth fits need at least 3 samples");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(samples[i].n > 0.0) || !std::isfinite(samples[i].n)) throw InvalidInput("sample abscissa must be positive");
    if (!(samples[i].count >= 1.0)) throw InvalidInput("sample counts must be >= 1");
    if (i > 0 && !(samples[i].n > samples[i - 1].n)) throw InvalidInput("sample abscissae must increase strictly");
  }
}

}  // namespace

GrowthEstimate fit_power_law(std::span<const Sample> samples) {
  require_samples(samples);
  const auto m = static_cast<double>(samples.size());
  double mx = 0.0;
  double my = 0.0;
  for (const auto& s : samples) {
    mx += std::log(s.n);
    my += std::log(s.count);
  }
  mx /= m;
  my /= m;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const auto& s : samples) {
    const double dx = std::log(s.n) - mx;
    const double dy = std::log(s.count) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  GrowthEstimate g;
  g.slope = sxy / sxx;
  g.intercept = my - g.slope * mx;
  if (syy == 0.0) {
    g.slope = 0.0;
    g.intercept = my;
    g.r_squared = 1.0;
  } else {
    g.r_squared = std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  }
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    const double run = std::log(samples[i + 1].n) - std::log(samples[i].n);
    const double rise = std::log(samples[i + 1].count) - std::log(samples[i].count);
    g.local_slopes.emplace_back(samples[i].n, rise / run);
  }
  g.window = {samples.front().n, samples.back().n};
  return g;
}

std::string to_string(Quantity q) { return q == Quantity::Pow ? "pow" : "mod"; }

Quantity parse_quantity(const std::string& text) {
  if (text == "pow") return Quantity::Pow;
  if (text == "mod") return Quantity::Mod;
  throw InvalidInput(fmt::format("unknown quantity '{}'", text));
}

std::vector<std::int64_t> dyadic_schedule(int lo, int hi) {
  if (lo < 0 || hi > 40 || lo > hi) throw InvalidInput(fmt::format("bad dyadic schedule 2^{}..2^{}", lo, hi));
  std::vector<std::int64_t> out;
  for (int k = lo; k <= hi; ++k) out.push_back(std::int64_t{1} << k);
  return out;
}

std::vector<Sample> samples_of(const std::vector<SeparationResult>& results) {
  std::vector<Sample> out;
  out.reserve(results.size());
  for (const auto& r : results) out.push_back({static_cast<double>(r.n), static_cast<double>(r.count)});
  return out;
}

EntropyEstimate entropy_estimate(const SystemSpec& spec, Quantity quantity, const std::vector<double>& deltas,
                                 const std::vector<std::int64_t>& ns, const CandidateSet& candidates,
                                 unsigned threads, Method method) {
  if (deltas.empty() || ns.empty()) throw InvalidInput("entropy estimate needs nonempty schedules");
  EntropyEstimate out;
  out.quantity = quantity;
  out.results.resize(deltas.size() * ns.size());
  parallel_for(out.results.size(), threads, [&](std::size_t job) {
    const double delta = deltas[job / ns.size()];
    const std::int64_t n = ns[job % ns.size()];
    out.results[job] = quantity == Quantity::Pow ? bowen_separation_number(spec, n, delta, candidates, method)
                                                 : hamming_separation_number(spec, n, delta, candidates, method);
  });
  out.aggregate = -std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < deltas.size(); ++d) {
    const std::vector<SeparationResult> row(out.results.begin() + static_cast<std::ptrdiff_t>(d * ns.size()),
                                            out.results.begin() + static_cast<std::ptrdiff_t>((d + 1) * ns.size()));
    const auto samples = samples_of(row);
    auto g = fit_power_law(samples);
    g.delta_schedule = {deltas[d]};
    out.aggregate = std::max(out.aggregate, g.slope);
    out.per_delta.push_back(std::move(g));
  }
  return out;
}

EntropyEstimate witness_entropy_estimate(const SkewProduct& spec, int k_lo, int k_hi) {
  if (k_hi - k_lo < 2) throw InvalidInput("witness estimate needs at least 3 blocks");
  EntropyEstimate out;
  out.quantity = Quantity::Mod;
  for (int k = k_lo; k <= k_hi; ++k) {
    const auto report = counterexample_witness_set(k, spec);
    SeparationResult r;
    r.system = system_name(SystemSpec{spec});
    r.kind = SeparationKind::Hamming;
    r.method = Method::Witness;
    r.delta = 0.25;
    r.n = report.horizon;
    r.count = report.passed ? report.points.size() : 1;
    r.provenance = {fmt::format("plateau-witness-{}", k), 0, report.points.size()};
    if (report.passed) {
      for (std::size_t j = 0; j < report.points.size(); ++j) r.members.push_back(j);
    } else {
      r.members = {0};
    }
    out.results.push_back(std::move(r));
  }
  auto g = fit_power_law(samples_of(out.results));
  g.delta_schedule = {0.25};
  out.aggregate = g.slope;
  out.per_delta.push_back(std::move(g));
  return out;
}

AmorphicEstimate amorphic_estimate(const SystemSpec& spec, double delta, const std::vector<double>& nus,
                                   const CandidateSet& candidates, std::int64_t horizon, unsigned threads,
                                   Method method) {
  if (nus.size() < 3) throw InvalidInput("amorphic estimate needs at least 3 values of nu");
  for (std::size_t i = 0; i < nus.size(); ++i) {
    if (!(nus[i] > 0.0 && nus[i] < 1.0)) throw InvalidInput("nu values must lie in (0,1)");
    if (i > 0 && !(nus[i] < nus[i - 1])) throw InvalidInput("nu schedule must decrease");
  }
  AmorphicEstimate out;
  out.results = asymptotic_separation_numbers(spec, delta, nus, candidates, horizon, method, threads);
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < nus.size(); ++i) {
    samples.push_back({1.0 / nus[i], static_cast<double>(out.results[i].count)});
  }
  out.fit = fit_power_law(samples);
  out.fit.delta_schedule = {delta};
  return out;
}

ScaleFamily power_family() {
  return {"power", [](double s, double n) { return std::pow(n, s); }, 0.0, 64.0};
}

ScaleFamily exponential_family() {
  return {"exponential", [](double s, double n) { return std::exp(s * n); }, 0.0, 16.0};
}

ScaleEntropy scale_entropy(std::span<const Sample> samples, const ScaleFamily& family,
                           std::optional<std::pair<double, double>> window) {
  require_samples(samples);
  if (!family.a) throw InvalidInput("scale family without evaluator");
  std::pair<double, double> w;
  if (window) {
    w = *window;
  } else {
    w = {samples[samples.size() / 2].n, samples.back().n};
  }
  ScaleEntropy out;
  for (const auto& smp : samples) {
    if (smp.n < w.first || smp.n > w.second) continue;
    double lo = family.s_min;
    double hi = family.s_max;
    if (family.a(lo, smp.n) > smp.count || family.a(hi, smp.n) < smp.count) {
      throw SearchExhausted(fmt::format("{} family cannot reach count {} at n = {} for s in [{}, {}]", family.name,
                                        smp.count, smp.n, lo, hi));
    }
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (family.a(mid, smp.n) < smp.count) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    out.solutions.emplace_back(smp.n, 0.5 * (lo + hi));
  }
  if (out.solutions.empty()) throw InvalidInput("scale entropy window holds no samples");
  out.upper = out.solutions.front().second;
  out.lower = out.upper;
  for (const auto& [n, s] : out.solutions) {
    out.upper = std::max(out.upper, s);
    out.lower = std::min(out.lower, s);
  }
  return out;
}

double exponential_rate(std::span<const Sample> samples) {
  require_samples(samples);
  const double cutoff = samples.back().n / 4.0;
  double best = 0.0;
  for (const auto& s : samples) {
    if (s.n >= cutoff) best = std::max(best, std::log(s.count) / s.n);
  }
  return best;
}

}  // namespace slowent
