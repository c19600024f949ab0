#include "slowent/separation.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "slowent/errors.hpp"
#include "slowent/metrics.hpp"
#include "slowent/parallel.hpp"
#include "slowent/random.hpp"
#include "slowent/toeplitz.hpp"

namespace slowent {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require_delta(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidInput(fmt::format("delta must be positive, got {}", delta));
}

void require_horizon(std::int64_t n) {
  if (n < 1) throw InvalidInput(fmt::format("horizon must be >= 1, got {}", n));
}

// ---------------------------------------------------------------- planar systems

struct Planar {
  double x = 0.0;
  double y = 0.0;
};

Planar to_planar(const PhasePoint& p) {
  return std::visit(overloaded{
                        [](const IntervalCirclePoint& q) { return Planar{q.x, q.y}; },
                        [](const TorusPoint& q) { return Planar{q.x, q.y}; },
                        [](const CirclePoint& q) { return Planar{0.0, q.y}; },
                        [](const ShiftPoint&) -> Planar { throw KindMismatch("shift point in a planar system"); },
                    },
                    p);
}

// Orbits of a fixed candidate list for one of the three continuous systems.
// Step and Dist mirror step() and base_distance() operation for operation.
template <class Step, class Dist>
class PlanarEngine {
 public:
  static constexpr std::size_t kCacheBudget = std::size_t{1} << 23;

  PlanarEngine(Step stepf, Dist distf, const std::vector<PhasePoint>& points, std::int64_t n, bool cache)
      : step_(stepf), dist_(distf), n_(n) {
    start_.reserve(points.size());
    for (const auto& p : points) start_.push_back(to_planar(p));
    const auto len = static_cast<std::size_t>(n);
    if (cache && start_.size() * len <= kCacheBudget) {
      cache_.resize(start_.size() * len);
      for (std::size_t p = 0; p < start_.size(); ++p) {
        Planar s = start_[p];
        for (std::size_t i = 0; i < len; ++i) {
          cache_[p * len + i] = s;
          if (i + 1 < len) s = step_(s);
        }
      }
    }
  }

  // Smallest i < n with d_i >= delta, or -1.
  std::int64_t first_hit(std::size_t a, std::size_t b, double delta) const {
    Planar u = start_[a];
    Planar v = start_[b];
    for (std::int64_t i = 0; i < n_; ++i) {
      if (dist_(u, v) >= delta) return i;
      if (i + 1 < n_) {
        u = step_(u);
        v = step_(v);
      }
    }
    return -1;
  }

  double bowen(std::size_t a, std::size_t b) const {
    double best = 0.0;
    visit(a, b, [&](double d) { best = std::max(best, d); });
    return best;
  }

  double hamming(std::size_t a, std::size_t b) const {
    double sum = 0.0;
    double best = 0.0;
    visit(a, b, [&](double d) {
      sum += d;
      best = std::max(best, d);
    });
    return std::min(sum / static_cast<double>(n_), best);
  }

  void distances(std::size_t a, std::size_t b, std::vector<double>& out) const {
    out.clear();
    visit(a, b, [&](double d) { out.push_back(d); });
  }

 private:
  template <class F>
  void visit(std::size_t a, std::size_t b, F&& f) const {
    const auto len = static_cast<std::size_t>(n_);
    if (!cache_.empty()) {
      const Planar* u = cache_.data() + a * len;
      const Planar* v = cache_.data() + b * len;
      for (std::size_t i = 0; i < len; ++i) f(dist_(u[i], v[i]));
      return;
    }
    Planar u = start_[a];
    Planar v = start_[b];
    for (std::size_t i = 0; i < len; ++i) {
      f(dist_(u, v));
      if (i + 1 < len) {
        u = step_(u);
        v = step_(v);
      }
    }
  }

  Step step_;
  Dist dist_;
  std::int64_t n_;
  std::vector<Planar> start_;
  std::vector<Planar> cache_;
};

// Calls body(engine) with a PlanarEngine for the given continuous system.
template <class Body>
void with_planar_engine(const SystemSpec& spec, const std::vector<PhasePoint>& points, std::int64_t n, bool cache,
                        Body&& body) {
  std::visit(overloaded{
                 [&](const CircleRotation& s) {
                   const double rho = s.rho;
                   auto stepf = [rho](Planar p) { return Planar{0.0, wrap_unit(p.y + rho)}; };
                   auto distf = [](Planar a, Planar b) { return circle_distance(a.y, b.y); };
                   body(PlanarEngine(stepf, distf, points, n, cache));
                 },
                 [&](const SkewProduct& s) {
                   const SkewProduct sp = s;
                   auto stepf = [sp](Planar p) {
                     return Planar{tau(p.x, sp.plateau_depth), wrap_unit(p.y + beta(p.x, sp.eps) + sp.rho)};
                   };
                   auto distf = [](Planar a, Planar b) {
                     return std::max(std::fabs(a.x - b.x), circle_distance(a.y, b.y));
                   };
                   body(PlanarEngine(stepf, distf, points, n, cache));
                 },
                 [&](const TorusSkew&) {
                   auto stepf = [](Planar p) { return Planar{p.x, wrap_unit(p.x + p.y)}; };
                   auto distf = [](Planar a, Planar b) {
                     return std::max(circle_distance(a.x, b.x), circle_distance(a.y, b.y));
                   };
                   body(PlanarEngine(stepf, distf, points, n, cache));
                 },
                 [&](const ShiftOnSubshift&) { throw KindMismatch("symbolic system has no planar engine"); },
             },
             spec);
}

// ---------------------------------------------------------------- symbolic windows

constexpr std::uint64_t kHashMod = (std::uint64_t{1} << 61) - 1;
constexpr std::uint64_t kHashBase = 1000003;

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b) {
  const __uint128_t p = static_cast<__uint128_t>(a) * b;
  std::uint64_t r = static_cast<std::uint64_t>(p & kHashMod) + static_cast<std::uint64_t>(p >> 61);
  if (r >= kHashMod) r -= kHashMod;
  return r;
}

// Equal-length symbol windows, read in merged runs so that overlapping
// windows share storage. Each window also gets polynomial hashes of its full
// extent and of a fixed sub-range.
class WindowBank {
 public:
  struct Request {
    const SymbolSequence* source;
    std::int64_t first;
  };

  WindowBank(const std::vector<Request>& requests, std::size_t length) : length_(length) {
    std::vector<std::size_t> order(requests.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (requests[a].source != requests[b].source) return std::less<>()(requests[a].source, requests[b].source);
      return requests[a].first < requests[b].first;
    });
    start_.assign(requests.size(), 0);
    std::size_t k = 0;
    while (k < order.size()) {
      const SymbolSequence* src = requests[order[k]].source;
      const std::int64_t run_first = requests[order[k]].first;
      std::int64_t run_end = run_first + static_cast<std::int64_t>(length_);
      std::size_t m = k;
      const std::size_t base = storage_.size();
      while (m < order.size() && requests[order[m]].source == src && requests[order[m]].first <= run_end) {
        run_end = std::max(run_end, requests[order[m]].first + static_cast<std::int64_t>(length_));
        start_[order[m]] = base + static_cast<std::size_t>(requests[order[m]].first - run_first);
        ++m;
      }
      storage_.resize(base + static_cast<std::size_t>(run_end - run_first));
      src->fill(run_first, std::span<std::uint8_t>(storage_.data() + base, storage_.size() - base));
      k = m;
    }
  }

  std::size_t size() const { return start_.size(); }
  std::size_t length() const { return length_; }
  const std::uint8_t* operator[](std::size_t i) const { return storage_.data() + start_[i]; }

  void build_hashes() {
    prefix_.assign(storage_.size() + 1, 0);
    for (std::size_t i = 0; i < storage_.size(); ++i) {
      prefix_[i + 1] = (mulmod(prefix_[i], kHashBase) + storage_[i] + 1) % kHashMod;
    }
  }

  // hash of window i restricted to [skip, skip + len)
  std::uint64_t hash(std::size_t i, std::size_t skip, std::size_t len) const {
    const std::size_t l = start_[i] + skip;
    const std::size_t r = l + len;
    const std::uint64_t sub = mulmod(prefix_[l], power(len));
    return (prefix_[r] + kHashMod - sub) % kHashMod;
  }

 private:
  std::uint64_t power(std::size_t e) const {
    auto it = powers_.find(e);
    if (it != powers_.end()) return it->second;
    std::uint64_t result = 1;
    std::uint64_t b = kHashBase;
    for (std::size_t k = e; k > 0; k >>= 1) {
      if (k & 1) result = mulmod(result, b);
      b = mulmod(b, b);
    }
    powers_.emplace(e, result);
    return result;
  }

  std::size_t length_;
  std::vector<std::uint8_t> storage_;
  std::vector<std::size_t> start_;
  std::vector<std::uint64_t> prefix_;
  mutable std::unordered_map<std::size_t, std::uint64_t> powers_;
};

// Index-order greedy over windows. A window equal to an earlier one is
// rejected outright: the earlier copy was either kept (distance 0) or
// rejected by a kept window that rejects this copy too. When interiors are
// supplied, windows whose interiors differ are taken as separated without
// calling the predicate.
template <class Separated>
std::vector<std::size_t> greedy_windows(WindowBank& bank, Separated&& separated,
                                        std::optional<std::pair<std::size_t, std::size_t>> interior) {
  bank.build_hashes();
  const std::size_t len = bank.length();
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> seen;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    auto& same = seen[bank.hash(i, 0, len)];
    const bool duplicate = std::any_of(same.begin(), same.end(), [&](std::size_t j) {
      return std::memcmp(bank[i], bank[j], len) == 0;
    });
    if (duplicate) continue;
    same.push_back(i);

    if (interior) {
      const auto [skip, ilen] = *interior;
      auto& bucket = buckets[bank.hash(i, skip, ilen)];
      bool ok = true;
      for (auto it = bucket.rbegin(); it != bucket.rend(); ++it) {
        if (std::memcmp(bank[*it] + skip, bank[i] + skip, ilen) != 0) continue;
        if (!separated(*it, i)) {
          ok = false;
          break;
        }
      }
      if (ok) {
        kept.push_back(i);
        bucket.push_back(i);
      }
      continue;
    }

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

WindowBank shift_bank(const ShiftOnSubshift& shift, const CandidateSet& candidates, const ShiftKernel& kernel) {
  std::vector<WindowBank::Request> requests;
  requests.reserve(candidates.points.size());
  for (const auto& p : candidates.points) {
    const auto* sp = std::get_if<ShiftPoint>(&p);
    if (sp == nullptr) throw KindMismatch("candidate is not a shift point");
    if (!sp->source) throw InvalidInput("shift point without a source");
    requests.push_back({sp->source.get(), sp->offset - shift.truncation_radius});
  }
  return WindowBank(requests, kernel.window_length());
}

std::size_t mismatches(const std::uint8_t* a, const std::uint8_t* b, std::size_t len) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < len; ++i) count += static_cast<std::size_t>(a[i] != b[i]);
  return count;
}

// ---------------------------------------------------------------- result assembly

template <class Pair>
DistanceMatrix fill_matrix(std::size_t count, unsigned threads, Pair&& pair) {
  DistanceMatrix m(count);
  std::vector<std::vector<double>> rows(count);
  parallel_for(count, threads, [&](std::size_t i) {
    rows[i].resize(count, 0.0);
    for (std::size_t j = i + 1; j < count; ++j) rows[i][j] = pair(i, j);
  });
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = i + 1; j < count; ++j) m.set(i, j, rows[i][j]);
  }
  return m;
}

SeparationResult make_result(std::string system, SeparationKind kind, Method method, double delta, std::int64_t n,
                             std::vector<std::size_t> members, const Provenance& provenance) {
  SeparationResult r;
  r.system = std::move(system);
  r.kind = kind;
  r.method = method;
  r.delta = delta;
  r.n = n;
  r.count = members.size();
  r.members = std::move(members);
  r.provenance = provenance;
  return r;
}

std::vector<std::size_t> solve(const DistanceMatrix& m, double threshold, Method method) {
  if (method == Method::Exact) return exact_max_separated(m, threshold).members;
  return greedy_separated(m, threshold);
}

void require_supported(Method method) {
  if (method == Method::Witness) throw InvalidInput("witness method applies to the plateau construction only");
}

void require_candidates(const SystemSpec& spec, const CandidateSet& candidates) {
  validate(spec);
  for (const auto& p : candidates.points) require_kind(spec, p);
}

// ---------------------------------------------------------------- exact solver

class CliqueSearch {
 public:
  CliqueSearch(std::vector<std::uint64_t> adjacency, std::vector<std::size_t> incumbent)
      : adj_(std::move(adjacency)), best_(std::move(incumbent)) {}

  std::vector<std::size_t> run() {
    const std::size_t n = adj_.size();
    const std::uint64_t all = n == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1);
    std::vector<std::size_t> current;
    expand(current, all);
    std::sort(best_.begin(), best_.end());
    return best_;
  }

 private:
  void expand(std::vector<std::size_t>& current, std::uint64_t candidates) {
    // sequential greedy colouring gives the bound
    std::vector<std::pair<std::size_t, std::size_t>> ordered;  // (vertex, colour)
    std::uint64_t uncoloured = candidates;
    std::size_t colour = 0;
    while (uncoloured != 0) {
      ++colour;
      std::uint64_t q = uncoloured;
      while (q != 0) {
        const auto v = static_cast<std::size_t>(std::countr_zero(q));
        q &= ~(std::uint64_t{1} << v);
        uncoloured &= ~(std::uint64_t{1} << v);
        q &= ~adj_[v];
        ordered.emplace_back(v, colour);
      }
    }
    for (auto it = ordered.rbegin(); it != ordered.rend(); ++it) {
      const auto [v, c] = *it;
      if (current.size() + c <= best_.size()) return;
      current.push_back(v);
      const std::uint64_t next = candidates & adj_[v];
      if (next == 0) {
        if (current.size() > best_.size()) best_ = current;
      } else {
        expand(current, next);
      }
      current.pop_back();
      candidates &= ~(std::uint64_t{1} << v);
    }
  }

  std::vector<std::uint64_t> adj_;
  std::vector<std::size_t> best_;
};

}  // namespace

// ---------------------------------------------------------------- matrices

DistanceMatrix::DistanceMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

DistanceMatrix::DistanceMatrix(const std::vector<std::vector<double>>& rows) : n_(rows.size()) {
  data_.reserve(n_ * n_);
  for (const auto& row : rows) {
    if (row.size() != n_) throw InvalidInput("distance matrix must be square");
    data_.insert(data_.end(), row.begin(), row.end());
  }
  validate();
}

void DistanceMatrix::set(std::size_t i, std::size_t j, double value) {
  if (i >= n_ || j >= n_) throw InvalidInput("distance matrix index out of range");
  data_[i * n_ + j] = value;
  data_[j * n_ + i] = value;
}

void DistanceMatrix::validate() const {
  for (std::size_t i = 0; i < n_; ++i) {
    if ((*this)(i, i) != 0.0) throw InvalidInput(fmt::format("distance matrix: nonzero diagonal at {}", i));
    for (std::size_t j = 0; j < n_; ++j) {
      const double v = (*this)(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        throw InvalidInput(fmt::format("distance matrix: bad entry {} at ({}, {})", v, i, j));
      }
      if (v != (*this)(j, i)) throw InvalidInput(fmt::format("distance matrix: asymmetric at ({}, {})", i, j));
    }
  }
}

std::vector<std::size_t> greedy_separated(const DistanceMatrix& distances, double delta) {
  require_delta(delta);
  distances.validate();
  return greedy_select(distances.size(), [&](std::size_t j, std::size_t i) { return distances(j, i) >= delta; });
}

ExactSelection exact_max_separated(const DistanceMatrix& distances, double delta, std::size_t limit) {
  require_delta(delta);
  const std::size_t n = distances.size();
  if (n > limit || n > 64) {
    throw SizeLimitExceeded(fmt::format("exact solver limited to {} points, got {}", std::min<std::size_t>(limit, 64), n));
  }
  distances.validate();
  if (n == 0) return {};
  std::vector<std::uint64_t> adj(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && distances(i, j) >= delta) adj[i] |= std::uint64_t{1} << j;
    }
  }
  CliqueSearch search(std::move(adj), greedy_separated(distances, delta));
  ExactSelection out;
  out.members = search.run();
  out.count = out.members.size();
  return out;
}

// ---------------------------------------------------------------- names

std::string to_string(SeparationKind kind) {
  switch (kind) {
    case SeparationKind::Bowen: return "bowen";
    case SeparationKind::Hamming: return "hamming";
    case SeparationKind::Asymptotic: return "asymptotic";
    case SeparationKind::Subword: return "subword";
  }
  return "unknown";
}

std::string to_string(Method method) {
  switch (method) {
    case Method::Greedy: return "greedy";
    case Method::Exact: return "exact";
    case Method::Witness: return "witness";
  }
  return "unknown";
}

Method parse_method(const std::string& text) {
  if (text == "greedy") return Method::Greedy;
  if (text == "exact") return Method::Exact;
  if (text == "witness") return Method::Witness;
  throw InvalidInput(fmt::format("unknown method '{}'", text));
}

// ---------------------------------------------------------------- samplers

CandidateSet circle_grid(std::size_t count) {
  CandidateSet set;
  for (std::size_t j = 0; j < count; ++j) set.points.emplace_back(CirclePoint{static_cast<double>(j) / count});
  set.provenance = {"circle-grid", 0, count};
  return set;
}

CandidateSet torus_x_grid(std::size_t count, double y) {
  CandidateSet set;
  const double wy = wrap_unit(y);
  for (std::size_t j = 0; j < count; ++j) set.points.emplace_back(TorusPoint{static_cast<double>(j) / count, wy});
  set.provenance = {"torus-x-grid", 0, count};
  return set;
}

CandidateSet torus_grid(std::size_t nx, std::size_t ny) {
  CandidateSet set;
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      set.points.emplace_back(TorusPoint{static_cast<double>(i) / nx, static_cast<double>(j) / ny});
    }
  }
  set.provenance = {"torus-grid", 0, nx * ny};
  return set;
}

CandidateSet interval_circle_grid(std::size_t nx, std::size_t ny) {
  CandidateSet set;
  for (std::size_t i = 0; i < nx; ++i) {
    const double x = (static_cast<double>(i) + 0.5) / nx;
    for (std::size_t j = 0; j < ny; ++j) {
      set.points.emplace_back(IntervalCirclePoint{x, static_cast<double>(j) / ny});
    }
  }
  set.provenance = {"interval-circle-grid", 0, nx * ny};
  return set;
}

CandidateSet shift_points(std::shared_ptr<const SymbolSequence> source, const CenterSet& centers) {
  if (!source) throw InvalidInput("shift_points: missing source");
  CandidateSet set;
  set.points.reserve(centers.centers.size());
  for (auto m : centers.centers) set.points.emplace_back(ShiftPoint{source, m});
  set.provenance = centers.provenance;
  return set;
}

CenterSet progression_centers(std::int64_t start, std::int64_t step, std::size_t count) {
  if (step == 0 && count > 1) throw InvalidInput("progression step must be nonzero");
  CenterSet set;
  for (std::size_t j = 0; j < count; ++j) set.centers.push_back(start + static_cast<std::int64_t>(j) * step);
  set.provenance = {"progression", 0, count};
  return set;
}

CenterSet random_centers(std::int64_t lo, std::int64_t hi, std::size_t count, std::uint64_t seed) {
  if (hi < lo) throw InvalidInput("random_centers: empty range");
  const auto span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
  if (span < count - 1 && count > 0) throw InvalidInput("random_centers: range holds fewer than count positions");
  Rng rng(seed);
  std::unordered_set<std::int64_t> seen;
  CenterSet set;
  while (set.centers.size() < count) {
    const auto m = rng.uniform_int(lo, hi);
    if (seen.insert(m).second) set.centers.push_back(m);
  }
  set.provenance = {"random-centers", seed, count};
  return set;
}

CandidateSet default_candidates(const SystemSpec& spec, std::size_t count, std::uint64_t seed) {
  validate(spec);
  if (count == 0) throw InvalidInput("candidate count must be positive");
  return std::visit(overloaded{
                        [&](const CircleRotation&) { return circle_grid(count); },
                        [&](const SkewProduct&) {
                          const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count))));
                          return interval_circle_grid(side, std::max<std::size_t>(1, count / side));
                        },
                        [&](const TorusSkew&) { return torus_x_grid(count); },
                        [&](const ShiftOnSubshift& s) {
                          std::int64_t reach = std::int64_t{1} << 40;
                          if (const auto* t = dynamic_cast<const IrregularToeplitz*>(s.source.get())) {
                            const BigInt& a = t->periods()[static_cast<std::size_t>(t->depth()) - 1];
                            if (a < BigInt(reach) * 2) reach = static_cast<std::int64_t>(a / 2);
                          }
                          return shift_points(s.source, random_centers(-reach, reach, count, seed));
                        },
                    },
                    spec);
}

// ---------------------------------------------------------------- separation numbers

SeparationResult bowen_separation_number(const SystemSpec& spec, std::int64_t n, double delta,
                                         const CandidateSet& candidates, Method method, unsigned threads) {
  require_horizon(n);
  require_delta(delta);
  require_supported(method);
  require_candidates(spec, candidates);
  const std::size_t count = candidates.points.size();
  std::vector<std::size_t> members;

  if (const auto* shift = std::get_if<ShiftOnSubshift>(&spec)) {
    const ShiftKernel kernel(shift->truncation_radius, n);
    WindowBank bank = shift_bank(*shift, candidates, kernel);
    if (method == Method::Exact) {
      members = solve(fill_matrix(count, threads, [&](std::size_t i, std::size_t j) { return kernel.bowen(bank[i], bank[j]); }),
                      delta, method);
    } else {
      auto sep = [&](std::size_t j, std::size_t i) { return kernel.bowen_at_least(bank[j], bank[i], delta); };
      std::optional<std::pair<std::size_t, std::size_t>> interior;
      if (delta <= 1.0) interior = std::make_pair(static_cast<std::size_t>(kernel.radius()), static_cast<std::size_t>(n));
      members = greedy_windows(bank, sep, interior);
    }
  } else {
    with_planar_engine(spec, candidates.points, n, method == Method::Exact, [&](const auto& engine) {
      if (method == Method::Exact) {
        members = solve(fill_matrix(count, threads, [&](std::size_t i, std::size_t j) { return engine.bowen(i, j); }),
                        delta, method);
      } else {
        members = greedy_select(count, [&](std::size_t j, std::size_t i) { return engine.first_hit(j, i, delta) >= 0; });
      }
    });
  }
  return make_result(system_name(spec), SeparationKind::Bowen, method, delta, n, std::move(members),
                     candidates.provenance);
}

SeparationResult hamming_separation_number(const SystemSpec& spec, std::int64_t n, double delta,
                                           const CandidateSet& candidates, Method method, unsigned threads) {
  require_horizon(n);
  require_delta(delta);
  require_supported(method);
  require_candidates(spec, candidates);
  const std::size_t count = candidates.points.size();
  std::vector<std::size_t> members;

  if (const auto* shift = std::get_if<ShiftOnSubshift>(&spec)) {
    const ShiftKernel kernel(shift->truncation_radius, n);
    WindowBank bank = shift_bank(*shift, candidates, kernel);
    if (method == Method::Exact) {
      members = solve(fill_matrix(count, threads, [&](std::size_t i, std::size_t j) { return kernel.hamming(bank[i], bank[j]); }),
                      delta, method);
    } else {
      auto sep = [&](std::size_t j, std::size_t i) { return kernel.hamming(bank[j], bank[i]) >= delta; };
      members = greedy_windows(bank, sep, std::nullopt);
    }
  } else {
    with_planar_engine(spec, candidates.points, n, true, [&](const auto& engine) {
      if (method == Method::Exact) {
        members = solve(fill_matrix(count, threads, [&](std::size_t i, std::size_t j) { return engine.hamming(i, j); }),
                        delta, method);
      } else {
        members = greedy_select(count, [&](std::size_t j, std::size_t i) { return engine.hamming(j, i) >= delta; });
      }
    });
  }
  return make_result(system_name(spec), SeparationKind::Hamming, method, delta, n, std::move(members),
                     candidates.provenance);
}

std::vector<SeparationResult> asymptotic_separation_numbers(const SystemSpec& spec, double delta,
                                                           const std::vector<double>& nus,
                                                           const CandidateSet& candidates, std::int64_t horizon,
                                                           Method method, unsigned threads) {
  require_delta(delta);
  for (double nu : nus) {
    if (!(nu > 0.0 && nu <= 1.0)) throw InvalidInput(fmt::format("nu must lie in (0,1], got {}", nu));
  }
  if (horizon < 4) throw InvalidInput("asymptotic separation needs horizon >= 4");
  require_supported(method);
  require_candidates(spec, candidates);
  const std::size_t count = candidates.points.size();
  std::vector<std::vector<std::size_t>> members(nus.size());

  std::optional<ShiftKernel> kernel;
  std::optional<WindowBank> bank;

  auto run = [&](auto&& freq) {
    if (method == Method::Exact) {
      const auto m = fill_matrix(count, threads, freq);
      for (std::size_t v = 0; v < nus.size(); ++v) members[v] = solve(m, nus[v], method);
      return;
    }
    // pair (i < j) stored at j(j-1)/2 + i; NaN marks pairs not evaluated yet
    const std::size_t pairs = count * (count - 1) / 2;
    const bool memo = nus.size() > 1 && pairs <= (std::size_t{1} << 23);
    std::vector<double> seen(memo ? pairs : 0, std::numeric_limits<double>::quiet_NaN());
    auto lookup = [&](std::size_t i, std::size_t j) {
      if (!memo) return freq(i, j);
      if (i > j) std::swap(i, j);
      double& slot = seen[j * (j - 1) / 2 + i];
      if (std::isnan(slot)) slot = freq(i, j);
      return slot;
    };
    for (std::size_t v = 0; v < nus.size(); ++v) {
      members[v] = greedy_select(count, [&](std::size_t j, std::size_t i) { return lookup(j, i) >= nus[v]; });
    }
  };

  if (const auto* shift = std::get_if<ShiftOnSubshift>(&spec)) {
    kernel.emplace(shift->truncation_radius, horizon);
    bank.emplace(shift_bank(*shift, candidates, *kernel));
    run([&](std::size_t i, std::size_t j) {
      thread_local std::vector<double> d;
      d.resize(static_cast<std::size_t>(horizon));
      kernel->step_distances((*bank)[i], (*bank)[j], d);
      return frequency_from_distances(d, delta).value;
    });
  } else {
    with_planar_engine(spec, candidates.points, horizon, true, [&](const auto& engine) {
      run([&](std::size_t i, std::size_t j) {
        thread_local std::vector<double> d;
        engine.distances(i, j, d);
        return frequency_from_distances(d, delta).value;
      });
    });
  }
  std::vector<SeparationResult> out;
  for (std::size_t v = 0; v < nus.size(); ++v) {
    auto r = make_result(system_name(spec), SeparationKind::Asymptotic, method, delta, horizon, std::move(members[v]),
                         candidates.provenance);
    r.nu = nus[v];
    out.push_back(std::move(r));
  }
  return out;
}

SeparationResult asymptotic_separation_number(const SystemSpec& spec, double delta, double nu,
                                              const CandidateSet& candidates, std::int64_t horizon, Method method,
                                              unsigned threads) {
  return asymptotic_separation_numbers(spec, delta, {nu}, candidates, horizon, method, threads).front();
}

SeparationResult subword_separation_number(const SymbolSequence& source, std::int64_t n, double delta,
                                           const CenterSet& centers, Method method) {
  if (n < 0) throw InvalidInput("subword radius must be >= 0");
  require_delta(delta);
  require_supported(method);
  const auto len = static_cast<std::size_t>(2 * n + 1);
  std::vector<WindowBank::Request> requests;
  requests.reserve(centers.centers.size());
  for (auto m : centers.centers) requests.push_back({&source, m - n});
  WindowBank bank(requests, len);
  const double total = static_cast<double>(len);
  auto dist = [&](std::size_t i, std::size_t j) { return static_cast<double>(mismatches(bank[i], bank[j], len)) / total; };

  std::vector<std::size_t> members;
  if (method == Method::Exact) {
    members = solve(fill_matrix(bank.size(), 1, dist), delta, method);
  } else {
    members = greedy_windows(bank, [&](std::size_t j, std::size_t i) { return dist(j, i) >= delta; }, std::nullopt);
  }
  return make_result("subword:" + source.describe(), SeparationKind::Subword, method, delta, n, std::move(members),
                     centers.provenance);
}

// ---------------------------------------------------------------- plateau witnesses

WitnessReport counterexample_witness_set(int n_block, const SkewProduct& spec, double tolerance) {
  validate(SystemSpec{spec});
  if (n_block < 3 || n_block > 9) throw InvalidInput(fmt::format("n_block must lie in [3, 9], got {}", n_block));
  if (n_block > spec.plateau_depth) throw InvalidInput("n_block exceeds the plateau depth");

  WitnessReport report;
  report.n_block = n_block;
  const std::size_t count = std::size_t{1} << n_block;
  report.horizon = std::int64_t{1} << (2 * n_block + 2);
  const double lo = plateau_lower(n_block);
  const double hi = plateau_upper(n_block);
  const double spacing = std::ldexp(1.0, -(2 * n_block + 2));

  std::vector<double> xs(count);
  std::vector<double> ys(count, 0.0);
  for (std::size_t j = 0; j < count; ++j) {
    xs[j] = lo + static_cast<double>(j) * spacing;
    report.points.emplace_back(IntervalCirclePoint{xs[j], 0.0});
  }

  report.pair_count = count * (count - 1) / 2;
  std::vector<double> sums(report.pair_count, 0.0);
  auto check_plateau = [&](std::int64_t k) {
    if (report.plateau_exit) return;
    for (std::size_t j = 0; j < count; ++j) {
      if (xs[j] < lo || xs[j] > hi) {
        report.plateau_exit = std::make_pair(k, j);
        return;
      }
    }
  };

  for (std::int64_t k = 0; k < report.horizon; ++k) {
    check_plateau(k);
    std::size_t idx = 0;
    for (std::size_t a = 0; a < count; ++a) {
      const double xa = xs[a];
      const double ya = ys[a];
      for (std::size_t b = a + 1; b < count; ++b, ++idx) {
        sums[idx] += std::max(std::fabs(xa - xs[b]), circle_distance(ya, ys[b]));
      }
    }
    for (std::size_t j = 0; j < count; ++j) {
      const double x = xs[j];
      ys[j] = wrap_unit(ys[j] + beta(x, spec.eps) + spec.rho);
      xs[j] = tau(x, spec.plateau_depth);
    }
  }
  check_plateau(report.horizon);
  report.orbits_in_plateau = !report.plateau_exit.has_value();

  report.min_distance = count > 1 ? 1.0 : 0.0;
  std::size_t idx = 0;
  for (std::size_t a = 0; a < count; ++a) {
    for (std::size_t b = a + 1; b < count; ++b, ++idx) {
      const double d = sums[idx] / static_cast<double>(report.horizon);
      if (d < report.min_distance) report.min_distance = d;
      if (d < 0.25 - tolerance && !report.offending_pair) report.offending_pair = std::make_pair(a, b);
    }
  }
  report.passed = report.orbits_in_plateau && !report.offending_pair;
  return report;
}

BowenTransfer sep_to_bowen_witness(const SystemSpec& spec, double delta, double nu,
                                   const std::vector<PhasePoint>& witness, std::int64_t horizon) {
  require_delta(delta);
  if (!(nu > 0.0 && nu <= 1.0)) throw InvalidInput(fmt::format("nu must lie in (0,1], got {}", nu));
  require_horizon(horizon);
  validate(spec);
  for (const auto& p : witness) require_kind(spec, p);

  BowenTransfer out;
  out.n = 1;
  for (std::size_t a = 0; a < witness.size(); ++a) {
    for (std::size_t b = a + 1; b < witness.size(); ++b) {
      const auto d = step_distances(spec, witness[a], witness[b], horizon);
      const auto hit = std::find_if(d.begin(), d.end(), [&](double v) { return v >= delta; });
      if (hit == d.end()) {
        throw SearchExhausted(fmt::format("witness pair ({}, {}) never reaches distance {} within {} steps", a, b,
                                          delta, horizon));
      }
      out.n = std::max<std::int64_t>(out.n, (hit - d.begin()) + 1);
    }
  }
  out.min_distance = witness.size() > 1 ? std::numeric_limits<double>::infinity() : 0.0;
  for (std::size_t a = 0; a < witness.size(); ++a) {
    for (std::size_t b = a + 1; b < witness.size(); ++b) {
      out.min_distance = std::min(out.min_distance, bowen_distance(spec, witness[a], witness[b], out.n));
    }
  }
  out.check = witness.size() < 2 || out.min_distance >= delta;
  return out;
}

// ---------------------------------------------------------------- csv

void write_results_header(std::ostream& os) {
  os << "system,kind,method,delta,nu,n,count,seed,sampler,candidate_count\n";
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_result_row(std::ostream& os, const SeparationResult& r) {
  const std::string nu = std::isnan(r.nu) ? std::string() : fmt::format("{}", r.nu);
  fmt::print(os, "{},{},{},{},{},{},{},{},{},{}\n", csv_field(r.system), to_string(r.kind), to_string(r.method), r.delta, nu, r.n,
             r.count, r.provenance.seed, csv_field(r.provenance.sampler), r.provenance.count);
}

}  // namespace slowent
