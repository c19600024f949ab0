#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include "slowent/errors.hpp"
#include "slowent/metrics.hpp"
#include "slowent/separation.hpp"
#include "slowent/toeplitz.hpp"

using namespace slowent;

namespace {

DistanceMatrix line_matrix(const std::vector<double>& xs) {
  DistanceMatrix m(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = i + 1; j < xs.size(); ++j) m.set(i, j, std::abs(xs[i] - xs[j]));
  return m;
}

DistanceMatrix random_planar_matrix(std::size_t n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<double, double>> pts(n);
  for (auto& p : pts) p = {u(gen), u(gen)};
  DistanceMatrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      m.set(i, j, std::hypot(pts[i].first - pts[j].first, pts[i].second - pts[j].second));
  return m;
}

std::size_t exhaustive_max(const DistanceMatrix& m, double delta) {
  const std::size_t n = m.size();
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const auto size = static_cast<std::size_t>(__builtin_popcount(mask));
    if (size <= best) continue;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i)
      for (std::size_t j = i + 1; j < n && ok; ++j)
        if ((mask >> i & 1u) && (mask >> j & 1u) && m(i, j) < delta) ok = false;
    if (ok) best = size;
  }
  return best;
}

template <class Dist>
DistanceMatrix matrix_of(const CandidateSet& c, Dist&& dist) {
  DistanceMatrix m(c.points.size());
  for (std::size_t i = 0; i < c.points.size(); ++i)
    for (std::size_t j = i + 1; j < c.points.size(); ++j) m.set(i, j, dist(c.points[i], c.points[j]));
  return m;
}

bool pairwise_at_least(const SystemSpec& spec, const CandidateSet& c, const std::vector<std::size_t>& members,
                       std::int64_t n, double delta) {
  for (std::size_t a = 0; a < members.size(); ++a)
    for (std::size_t b = a + 1; b < members.size(); ++b)
      if (bowen_distance(spec, c.points[members[a]], c.points[members[b]], n) < delta) return false;
  return true;
}

const ToeplitzSpec kExample{2, {4, 8, 16}, 4};

}  // namespace

TEST_CASE("greedy examples") {
  const DistanceMatrix two({{0, .5}, {.5, 0}});
  CHECK(greedy_separated(two, 0.3) == std::vector<std::size_t>{0, 1});
  CHECK(greedy_separated(two, 0.6) == std::vector<std::size_t>{0});
  CHECK(greedy_separated(line_matrix({0, 0.25, 0.5}), 0.3) == std::vector<std::size_t>{0, 2});
  CHECK(greedy_separated(DistanceMatrix(0), 0.3).empty());
}

TEST_CASE("greedy result is maximal") {
  std::mt19937_64 gen(17);
  for (int t = 0; t < 50; ++t) {
    const auto m = random_planar_matrix(40, gen);
    const auto kept = greedy_separated(m, 0.2);
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (std::find(kept.begin(), kept.end(), i) != kept.end()) continue;
      bool blocked = false;
      for (auto k : kept) blocked |= m(i, k) < 0.2;
      REQUIRE(blocked);
    }
  }
}

TEST_CASE("malformed matrices") {
  CHECK_THROWS_AS(DistanceMatrix({{0, 1}, {2, 0}}), InvalidInput);
  CHECK_THROWS_AS(DistanceMatrix({{1, 0}, {0, 0}}), InvalidInput);
  CHECK_THROWS_AS(DistanceMatrix({{0, 1}, {1}}), InvalidInput);
  CHECK_THROWS_AS(DistanceMatrix({{0, -1}, {-1, 0}}), InvalidInput);
  CHECK_THROWS_AS(DistanceMatrix({{0, NAN}, {NAN, 0}}), InvalidInput);
  CHECK_THROWS_AS(greedy_separated(DistanceMatrix(2), 0.0), InvalidInput);
}

TEST_CASE("exact examples") {
  const DistanceMatrix two({{0, .5}, {.5, 0}});
  CHECK(exact_max_separated(two, 0.3).count == 2);
  const DistanceMatrix tri({{0, .2, .2}, {.2, 0, .2}, {.2, .2, 0}});
  CHECK(exact_max_separated(tri, 0.3).count == 1);
  // greedy keeps {0, 2}; the optimum here is {1, 2, 3}
  const auto line = line_matrix({0.45, 0.0, 0.6, 1.2});
  CHECK(greedy_separated(line, 0.5).size() == 2);
  const auto ex = exact_max_separated(line, 0.5);
  CHECK(ex.count == 3);
  CHECK(ex.members == std::vector<std::size_t>{1, 2, 3});

  std::mt19937_64 gen(2);
  CHECK_THROWS_AS(exact_max_separated(random_planar_matrix(65, gen), 0.1), SizeLimitExceeded);
  CHECK_THROWS_AS(exact_max_separated(random_planar_matrix(20, gen), 0.1, 10), SizeLimitExceeded);
}

TEST_CASE("exact solver agrees with exhaustive search") {
  std::mt19937_64 gen(99);
  std::uniform_int_distribution<std::size_t> size(1, 15);
  std::uniform_real_distribution<double> d(0.05, 0.6);
  for (int t = 0; t < 100; ++t) {
    const auto m = random_planar_matrix(size(gen), gen);
    const double delta = d(gen);
    const auto ex = exact_max_separated(m, delta);
    REQUIRE(ex.count == exhaustive_max(m, delta));
    REQUIRE(ex.members.size() == ex.count);
    for (std::size_t a = 0; a < ex.members.size(); ++a)
      for (std::size_t b = a + 1; b < ex.members.size(); ++b) REQUIRE(m(ex.members[a], ex.members[b]) >= delta);
  }
}

TEST_CASE("packing sandwich and monotonicity in delta") {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 40; ++t) {
    const auto m = random_planar_matrix(48, gen);
    std::size_t prev = m.size() + 1;
    for (double delta : {0.08, 0.12, 0.18, 0.25, 0.35}) {
      const auto greedy = greedy_separated(m, delta).size();
      const auto exact = exact_max_separated(m, delta).count;
      const auto coarse = exact_max_separated(m, 2 * delta).count;
      REQUIRE(coarse <= greedy);
      REQUIRE(greedy <= exact);
      REQUIRE(exact <= prev);
      prev = exact;
    }
  }
}

TEST_CASE("rotation packing") {
  const CircleRotation rot;
  const auto grid = circle_grid(64);
  for (std::int64_t n : {1, 8, 100}) {
    CHECK(bowen_separation_number(rot, n, 0.25, grid).count == 4);
    CHECK(hamming_separation_number(rot, n, 0.25, grid).count == 4);
  }
  const auto exact = bowen_separation_number(rot, 5, 0.25, grid, Method::Exact);
  CHECK(exact.count == 4);
  CHECK(exact.method == Method::Exact);
  CHECK(asymptotic_separation_number(rot, 0.25, 0.5, grid, 256).count == 4);
}

TEST_CASE("n = 1 is a plain packing") {
  const SkewProduct skew;
  const auto cands = interval_circle_grid(6, 6);
  const auto m = matrix_of(cands, [&](const PhasePoint& p, const PhasePoint& q) { return base_distance(skew, p, q); });
  for (double delta : {0.1, 0.2, 0.3}) {
    CHECK(bowen_separation_number(skew, 1, delta, cands).members == greedy_separated(m, delta));
    CHECK(bowen_separation_number(skew, 1, delta, cands, Method::Exact).count == exact_max_separated(m, delta).count);
  }
}

TEST_CASE("planar engines agree with the reference metrics") {
  const SystemSpec specs[] = {CircleRotation{}, SkewProduct{}, TorusSkew{}};
  const CandidateSet sets[] = {circle_grid(30), interval_circle_grid(6, 5), torus_grid(6, 5)};
  for (int s = 0; s < 3; ++s) {
    const auto& spec = specs[s];
    const auto& cands = sets[s];
    for (std::int64_t n : {1, 7, 64}) {
      const auto bm =
          matrix_of(cands, [&](const PhasePoint& p, const PhasePoint& q) { return bowen_distance(spec, p, q, n); });
      const auto hm =
          matrix_of(cands, [&](const PhasePoint& p, const PhasePoint& q) { return hamming_distance(spec, p, q, n); });
      for (double delta : {0.05, 0.2, 0.4}) {
        REQUIRE(bowen_separation_number(spec, n, delta, cands).members == greedy_separated(bm, delta));
        REQUIRE(hamming_separation_number(spec, n, delta, cands).members == greedy_separated(hm, delta));
        REQUIRE(bowen_separation_number(spec, n, delta, cands, Method::Exact).count ==
                exact_max_separated(bm, delta).count);
      }
    }
  }
}

TEST_CASE("symbolic fast paths agree with plain greedy") {
  const std::shared_ptr<const SymbolSequence> sources[] = {std::make_shared<IrregularToeplitz>(ToeplitzSpec{2, {4}, 7}),
                                                           std::make_shared<RegularToeplitz>(),
                                                           std::make_shared<SturmianSequence>(kGoldenRho, 0.0)};
  for (const auto& src : sources) {
    // clustered centres so that many windows coincide
    auto centers = random_centers(-3000, 3000, 60, 8);
    for (std::size_t i = 0; i < 20; ++i) centers.centers.push_back(centers.centers[i] + 4096);
    const auto cands = shift_points(src, centers);
    for (int K : {8, 12}) {
      const ShiftOnSubshift spec{src, K};
      for (std::int64_t n : {1, 4, 16, 33}) {
        const auto bm =
            matrix_of(cands, [&](const PhasePoint& p, const PhasePoint& q) { return bowen_distance(spec, p, q, n); });
        const auto hm =
            matrix_of(cands, [&](const PhasePoint& p, const PhasePoint& q) { return hamming_distance(spec, p, q, n); });
        for (double delta : {0.3, 0.75, 1.0, 1.25, 2.0}) {
          REQUIRE(bowen_separation_number(spec, n, delta, cands).members == greedy_separated(bm, delta));
          REQUIRE(hamming_separation_number(spec, n, delta, cands).members == greedy_separated(hm, delta));
        }
      }
    }
  }
}

TEST_CASE("hamming witnesses transfer to bowen") {
  std::mt19937_64 gen(6);
  auto seq = std::make_shared<IrregularToeplitz>(ToeplitzSpec{2, {4}, 7});
  const SystemSpec specs[] = {CircleRotation{}, SkewProduct{}, TorusSkew{}, ShiftOnSubshift{seq, 16}};
  const CandidateSet sets[] = {circle_grid(200), interval_circle_grid(15, 15), torus_grid(15, 15),
                               shift_points(seq, random_centers(-1'000'000, 1'000'000, 300, 3))};
  for (int s = 0; s < 4; ++s) {
    for (std::int64_t n : {4, 32, 128}) {
      for (double delta : {0.1, 0.3}) {
        const auto h = hamming_separation_number(specs[s], n, delta, sets[s]);
        const auto b = bowen_separation_number(specs[s], n, delta, sets[s]);
        CHECK(h.count >= 1);
        CHECK(h.count <= b.count);
        CHECK(pairwise_at_least(specs[s], sets[s], h.members, n, delta));
      }
    }
  }
}

TEST_CASE("bowen counts grow with n on a fixed candidate set") {
  const TorusSkew torus;
  const auto cands = torus_x_grid(40);
  std::size_t prev = 0;
  for (std::int64_t n : {1, 2, 4, 8, 16, 32}) {
    const auto c = bowen_separation_number(torus, n, 0.1, cands, Method::Exact).count;
    CHECK(c >= prev);
    prev = c;
  }
  CHECK(prev == 40);
  std::size_t last = cands.points.size() + 1;
  for (double delta : {0.05, 0.1, 0.2, 0.4}) {
    const auto c = bowen_separation_number(torus, 8, delta, cands, Method::Exact).count;
    CHECK(c <= last);
    last = c;
  }
}

TEST_CASE("asymptotic counts") {
  const TorusSkew torus;
  for (std::size_t k : {4, 8, 16}) CHECK(asymptotic_separation_number(torus, 0.1, 0.1, torus_x_grid(k), 1024).count == k);

  const CircleRotation rot;
  const auto grid = circle_grid(32);
  std::size_t prev = 0;
  for (double nu : {1.0, 0.5, 0.25}) {
    const auto c = asymptotic_separation_number(rot, 0.2, nu, grid, 512).count;
    CHECK(c >= prev);
    prev = c;
  }
  CHECK_THROWS_AS(asymptotic_separation_number(rot, 0.2, 0.0, grid, 512), InvalidInput);
  CHECK_THROWS_AS(asymptotic_separation_number(rot, 0.2, 0.5, grid, 3), InvalidInput);
}

TEST_CASE("skew asymptotic count stays small" * doctest::may_fail()) {
  const SkewProduct skew;
  for (std::size_t side : {4, 8, 16}) {
    const auto c = asymptotic_separation_number(skew, 0.1, 0.1, interval_circle_grid(side, side), 4096);
    MESSAGE("grid " << side << "x" << side << ": " << c.count);
    CHECK(c.count <= 8);
  }
}

TEST_CASE("plateau witness sets") {
  for (int k : {3, 4, 5}) {
    const auto r = counterexample_witness_set(k);
    CHECK(r.passed);
    CHECK(r.points.size() == (std::size_t{1} << k));
    CHECK(r.horizon == (std::int64_t{1} << (2 * k + 2)));
    CHECK(r.pair_count == r.points.size() * (r.points.size() - 1) / 2);
    CHECK(r.orbits_in_plateau);
    CHECK(r.min_distance >= 0.25 - kWitnessTolerance);
    CHECK_FALSE(r.offending_pair.has_value());
    for (std::size_t j = 0; j < r.points.size(); ++j) {
      const auto& p = std::get<IntervalCirclePoint>(r.points[j]);
      CHECK(p.x == std::ldexp(1.0, -k) + static_cast<double>(j) * std::ldexp(1.0, -(2 * k + 2)));
      CHECK(p.y == 0.0);
      CHECK(p.x <= 5.0 * std::ldexp(1.0, -(k + 2)));
    }
  }
  const auto r3 = counterexample_witness_set(3);
  CHECK(r3.pair_count == 28);
  const CandidateSet w{r3.points, {"witness", 0, r3.points.size()}};
  CHECK(hamming_separation_number(SkewProduct{}, 256, 0.25 - kWitnessTolerance, w).count >= 8);

  CHECK_THROWS_AS(counterexample_witness_set(2), InvalidInput);
  CHECK_THROWS_AS(counterexample_witness_set(10), InvalidInput);
  // a plateau ladder that stops at I_4 cannot host the n = 5 block
  CHECK_THROWS_AS(counterexample_witness_set(5, SkewProduct{kGoldenRho, 1.0 / 16.0, 4}), InvalidInput);
}

TEST_CASE("subword separation") {
  const IrregularToeplitz seq(kExample);
  const CenterSet two{{0, 3}, {"manual", 0, 2}};
  const auto r = subword_separation_number(seq, 1, 0.3, two);
  CHECK(r.count == 2);
  CHECK(r.kind == SeparationKind::Subword);
  // omega_4 lies in C_2, so the second word is (0,1,1) and D = 2/3
  CHECK(window(seq, 0, 1) == Word{0, 0, 0});
  CHECK(window(seq, 3, 1) == Word{0, 1, 1});
  CHECK(subword_separation_number(seq, 1, 0.66, two).count == 2);
  CHECK(subword_separation_number(seq, 1, 0.67, two).count == 1);

  const auto many = progression_centers(-500, 7, 150);
  CHECK(subword_separation_number(seq, 6, 1.01, many).count == 1);
  const ConstantSequence zero(0);
  CHECK(subword_separation_number(zero, 6, 0.01, many).count == 1);

  for (double delta : {0.05, 0.2, 0.5}) {
    DistanceMatrix m(many.centers.size());
    for (std::size_t i = 0; i < m.size(); ++i)
      for (std::size_t j = i + 1; j < m.size(); ++j)
        m.set(i, j, word_distance(window(seq, many.centers[i], 6), window(seq, many.centers[j], 6)));
    CHECK(subword_separation_number(seq, 6, delta, many).members == greedy_separated(m, delta));
  }
  const IrregularToeplitz shallow(ToeplitzSpec{2, {4}, 1});
  CHECK_THROWS_AS(subword_separation_number(shallow, 2, 0.1, two), DepthExceeded);
}

TEST_CASE("transfer from asymptotic to bowen witnesses") {
  const TorusSkew torus;
  std::vector<PhasePoint> w;
  for (int j = 0; j < 8; ++j) w.emplace_back(TorusPoint{j / 64.0, 0.0});
  const auto t = sep_to_bowen_witness(torus, 0.1, 0.1, w, 4096);
  CHECK(t.check);
  CHECK(t.n <= 200);
  CHECK(t.n > 1);
  CHECK(t.min_distance >= 0.1);

  CHECK(sep_to_bowen_witness(torus, 0.1, 0.1, {TorusPoint{0.3, 0.3}}, 16).n == 1);
  const CircleRotation rot;
  const auto pair = sep_to_bowen_witness(rot, 0.2, 0.5, {CirclePoint{0.1}, CirclePoint{0.4}}, 16);
  CHECK(pair.n == 1);
  CHECK(pair.check);
  CHECK_THROWS_AS(sep_to_bowen_witness(rot, 0.2, 0.5, {CirclePoint{0.1}, CirclePoint{0.2}}, 64), SearchExhausted);
}

TEST_CASE("greedy is deterministic across worker counts") {
  auto seq = std::make_shared<IrregularToeplitz>(ToeplitzSpec{2, {4}, 7});
  const SystemSpec specs[] = {SkewProduct{}, TorusSkew{}, ShiftOnSubshift{seq, 16}};
  const CandidateSet sets[] = {interval_circle_grid(20, 20), torus_x_grid(500),
                               shift_points(seq, random_centers(-1'000'000, 1'000'000, 500, 4))};
  for (int s = 0; s < 3; ++s) {
    const auto one = bowen_separation_number(specs[s], 64, 0.2, sets[s], Method::Greedy, 1);
    const auto four = bowen_separation_number(specs[s], 64, 0.2, sets[s], Method::Greedy, 4);
    CHECK(one.members == four.members);
    const auto h1 = hamming_separation_number(specs[s], 64, 0.2, sets[s], Method::Greedy, 1);
    const auto h3 = hamming_separation_number(specs[s], 64, 0.2, sets[s], Method::Greedy, 3);
    CHECK(h1.members == h3.members);
    const auto a1 = asymptotic_separation_number(specs[s], 0.2, 0.25, sets[s], 256, Method::Greedy, 1);
    const auto a2 = asymptotic_separation_number(specs[s], 0.2, 0.25, sets[s], 256, Method::Greedy, 2);
    CHECK(a1.members == a2.members);
  }
}

TEST_CASE("samplers") {
  const auto c1 = random_centers(-100, 100, 50, 42);
  const auto c2 = random_centers(-100, 100, 50, 42);
  CHECK(c1.centers == c2.centers);
  auto sorted = c1.centers;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  CHECK(c1.provenance.seed == 42);
  CHECK(random_centers(0, 9, 10, 1).centers.size() == 10);
  CHECK_THROWS_AS(random_centers(0, 8, 10, 1), InvalidInput);

  CHECK(progression_centers(5, 3, 4).centers == std::vector<std::int64_t>{5, 8, 11, 14});
  CHECK(torus_grid(3, 4).points.size() == 12);
  const auto ic = interval_circle_grid(4, 2);
  CHECK(std::get<IntervalCirclePoint>(ic.points[0]).x == 0.125);

  auto seq = std::make_shared<IrregularToeplitz>(ToeplitzSpec{2, {4}, 3});
  const auto d = default_candidates(ShiftOnSubshift{seq, 16}, 100, 9);
  for (const auto& p : d.points) CHECK(std::abs(std::get<ShiftPoint>(p).offset) <= 128);
  CHECK(default_candidates(TorusSkew{}, 64, 1).points.size() == 64);
  CHECK_THROWS_AS(default_candidates(TorusSkew{}, 0, 1), InvalidInput);
  CHECK_THROWS_AS(bowen_separation_number(TorusSkew{}, 4, 0.1, circle_grid(4)), KindMismatch);
}

TEST_CASE("result rows") {
  SeparationResult r;
  r.system = "toeplitz(a1=2 b=4 depth=7)";
  r.kind = SeparationKind::Hamming;
  r.delta = 0.25;
  r.n = 64;
  r.count = 12;
  r.provenance = {"random-centers", 3, 1000};
  std::ostringstream os;
  write_results_header(os);
  write_result_row(os, r);
  r.system = "a,b";
  r.nu = 0.125;
  r.kind = SeparationKind::Asymptotic;
  write_result_row(os, r);
  CHECK(os.str() ==
        "system,kind,method,delta,nu,n,count,seed,sampler,candidate_count\n"
        "toeplitz(a1=2 b=4 depth=7),hamming,greedy,0.25,,64,12,3,random-centers,1000\n"
        "\"a,b\",asymptotic,greedy,0.25,0.125,64,12,3,random-centers,1000\n");
  CHECK(parse_method("exact") == Method::Exact);
  CHECK_THROWS_AS(parse_method("best"), InvalidInput);
}
