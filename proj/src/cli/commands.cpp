#include "slowent/cli/commands.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "slowent/errors.hpp"
#include "slowent/estimation.hpp"
#include "slowent/metrics.hpp"
#include "slowent/random.hpp"
#include "slowent/separation.hpp"
#include "slowent/toeplitz.hpp"

namespace slowent::cli {

namespace fs = std::filesystem;

namespace {

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", tmp.string()));
    out << content;
    if (!out) throw std::runtime_error(fmt::format("write failed for {}", tmp.string()));
  }
  fs::rename(tmp, path);
}

std::string estimate_row(const std::string& system, const std::string& quantity, double delta,
                         const GrowthEstimate& g) {
  return fmt::format("{},{},{},{},{},{},{},{}\n", system, quantity, delta, g.slope, g.intercept, g.r_squared,
                     g.window.first, g.window.second);
}

std::string kind_for_quantity(const std::string& quantity) {
  if (quantity == "pow") return "bowen";
  if (quantity == "mod") return "hamming";
  return "asymptotic";
}

// Splits one CSV line, honouring double quotes.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

std::string gp_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "''";
    else out += c;
  }
  return out + "'";
}

// ---------------------------------------------------------------- verify targets

std::vector<Check> verify_counterexample(const VerifyParams& p) {
  if (p.block_lo < 3 || p.block_hi > 9 || p.block_lo > p.block_hi) {
    throw ConfigError("blocks must satisfy 3 <= lo <= hi <= 9");
  }
  std::vector<Check> checks;
  std::vector<Sample> samples;
  for (int k = p.block_lo; k <= p.block_hi; ++k) {
    const auto r = counterexample_witness_set(k);
    std::string detail = fmt::format("{} points, horizon {}, min mean distance {:.9f}, plateau {}", r.points.size(),
                                     r.horizon, r.min_distance, r.orbits_in_plateau ? "kept" : "left");
    if (r.offending_pair) detail += fmt::format(", offending pair ({}, {})", r.offending_pair->first, r.offending_pair->second);
    checks.push_back({fmt::format("block {}", k), r.passed, detail});
    samples.push_back({static_cast<double>(r.horizon), r.passed ? static_cast<double>(r.points.size()) : 1.0});
  }
  if (samples.size() >= 3) {
    const auto g = fit_power_law(samples);
    checks.push_back({"growth slope >= 0.45", g.slope >= 0.45, fmt::format("slope {:.4f}", g.slope)});
  }
  return checks;
}

std::vector<Check> verify_toeplitz_irregular(const VerifyParams& p) {
  if (p.depth < 3 || p.depth > 12) throw ConfigError("depth must lie in [3, 12]");
  const ToeplitzSpec spec{2, {4}, p.depth};
  IrregularToeplitz seq(spec);
  std::vector<Check> checks;
  const auto periods = derive_periods(spec);
  for (int n = 1; n <= p.depth; ++n) {
    const Rational d = periodic_density(spec, n);
    std::string detail = fmt::format("{}/{}", numerator(d).str(), denominator(d).str());
    bool ok = true;
    const BigInt& period = periods[static_cast<std::size_t>(n)];
    if (period <= BigInt(1) << 22) {
      const auto a = static_cast<std::int64_t>(period);
      std::int64_t hits = 0;
      for (std::int64_t r = 0; r < a; ++r) {
        for (int j = 1; j <= n; ++j) {
          if (seq.in_block(r, j)) {
            ++hits;
            break;
          }
        }
      }
      ok = Rational(hits, a) == d;
      detail += fmt::format(" (residue count {}/{})", hits, a);
    }
    checks.push_back({fmt::format("density B_{}", n), ok, detail});
  }
  const auto cert = irregularity_certificate(spec);
  Rational worst = 0;
  for (const auto& s : cert.partial_sums) worst = std::max(worst, s);
  checks.push_back({"partial sums < 0.6", worst < Rational(3, 5),
                    fmt::format("max {:.6f}", static_cast<double>(worst))});
  checks.push_back({"irregularity verdict", cert.verdict == Verdict::Irregular,
                    fmt::format("{} (limit bound {:.6f})", to_string(cert.verdict), static_cast<double>(cert.limit_bound))});
  for (int n = 1; n <= p.depth - 2; ++n) {
    const auto r = verify_periodic_structure(seq, n, 10000);
    std::string detail = fmt::format("{} positions, {} violations", r.checked_positions, r.violations.size());
    if (r.aperiodic_witness) detail += fmt::format(", C_{} witness k={}", n + 1, r.aperiodic_witness->first);
    checks.push_back({fmt::format("periodic structure level {}", n), r.passed, detail});
  }
  return checks;
}

std::vector<Check> verify_toeplitz_regular(const VerifyParams& p) {
  if (p.log2_n_max < 8 || p.log2_n_max > 16) throw ConfigError("n-max must lie in 2^8..2^16");
  auto source = std::make_shared<RegularToeplitz>();
  const SystemSpec spec = ShiftOnSubshift{source, 16};
  const auto reach = std::int64_t{1} << 40;
  const auto candidates =
      shift_points(source, random_centers(-reach, reach, p.centers, derive_seed(p.seed, "verify/toeplitz-regular")));
  const auto ns = dyadic_schedule(6, p.log2_n_max);
  const auto est = entropy_estimate(spec, Quantity::Mod, {0.1, 0.2}, ns, candidates, p.threads);
  std::vector<Check> checks;
  for (std::size_t d = 0; d < est.per_delta.size(); ++d) {
    std::string counts;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      counts += (i ? " " : "") + std::to_string(est.results[d * ns.size() + i].count);
    }
    const double slope = est.per_delta[d].slope;
    checks.push_back({fmt::format("slope <= 0.1 at delta {}", est.per_delta[d].delta_schedule.front()), slope <= 0.1,
                      fmt::format("slope {:.4f}, counts {}", slope, counts)});
  }
  return checks;
}

std::vector<Check> verify_inequalities(const VerifyParams& p) {
  if (p.pairs == 0) throw ConfigError("pairs must be positive");
  struct Entry {
    std::string name;
    SystemSpec spec;
  };
  auto toeplitz = std::make_shared<IrregularToeplitz>(ToeplitzSpec{2, {4}, 7});
  const std::vector<Entry> systems = {
      {"rotation", CircleRotation{}},
      {"skew", SkewProduct{}},
      {"torus", TorusSkew{}},
      {"toeplitz", ShiftOnSubshift{toeplitz, 16}},
      {"regular-toeplitz", ShiftOnSubshift{std::make_shared<RegularToeplitz>(), 16}},
      {"sturmian", ShiftOnSubshift{std::make_shared<SturmianSequence>(kGoldenRho, 0.0), 16}},
  };
  const std::int64_t ns[] = {8, 16, 32, 64};
  std::vector<Check> checks;
  for (const auto& entry : systems) {
    Rng rng(derive_seed(p.seed, "verify/inequalities/" + entry.name));
    std::size_t transfer_bad = 0;
    std::size_t word_bad = 0;
    std::size_t corrected_bad = 0;
    const auto* shift = std::get_if<ShiftOnSubshift>(&entry.spec);
    for (std::size_t k = 0; k < p.pairs; ++k) {
      const std::int64_t n = ns[k % 4];
      PhasePoint a;
      PhasePoint b;
      if (shift) {
        const auto m = rng.uniform_int(-(std::int64_t{1} << 20), std::int64_t{1} << 20);
        const auto m2 = (k % 2 == 0) ? m + rng.uniform_int(1, 3 * n) : rng.uniform_int(-(std::int64_t{1} << 20), std::int64_t{1} << 20);
        a = ShiftPoint{shift->source, m};
        b = ShiftPoint{shift->source, m2};
      } else if (std::holds_alternative<CircleRotation>(entry.spec)) {
        a = CirclePoint{rng.uniform01()};
        b = CirclePoint{rng.uniform01()};
      } else if (std::holds_alternative<SkewProduct>(entry.spec)) {
        a = IntervalCirclePoint{rng.uniform01(), rng.uniform01()};
        b = IntervalCirclePoint{rng.uniform01(), rng.uniform01()};
      } else {
        a = TorusPoint{rng.uniform01(), rng.uniform01()};
        b = TorusPoint{rng.uniform01(), rng.uniform01()};
      }
      const double dh = hamming_distance(entry.spec, a, b, n);
      const double db = bowen_distance(entry.spec, a, b, n);
      if (!(dh <= db)) ++transfer_bad;
      if (shift) {
        const auto& pa = std::get<ShiftPoint>(a);
        const auto& pb = std::get<ShiftPoint>(b);
        const double D = word_distance(window(*pa.source, pa.offset, 2 * n), window(*pb.source, pb.offset, 2 * n));
        const double bound = 9.0 * D + std::ldexp(1.0, -static_cast<int>(n - 1)) +
                             std::ldexp(1.0, -shift->truncation_radius + 2);
        if (!(dh <= bound)) ++word_bad;
        const double corrected = 3.0 * static_cast<double>(4 * n + 1) / static_cast<double>(n) * D +
                                 std::ldexp(1.0, -static_cast<int>(n - 1)) +
                                 std::ldexp(1.0, -shift->truncation_radius + 2);
        if (!(dh <= corrected)) ++corrected_bad;
      }
    }
    checks.push_back({fmt::format("{}: hamming <= bowen", entry.name), transfer_bad == 0,
                      fmt::format("{} pairs, {} violations", p.pairs, transfer_bad)});
    if (shift) {
      checks.push_back({fmt::format("{}: hamming <= 9 D_2n + tail", entry.name), word_bad == 0,
                        fmt::format("{} pairs, {} violations", p.pairs, word_bad)});
      checks.push_back({fmt::format("{}: hamming <= 3(4n+1)/n D_2n + tail", entry.name), corrected_bad == 0,
                        fmt::format("{} pairs, {} violations", p.pairs, corrected_bad)});
    }
  }
  return checks;
}

std::vector<Check> verify_star_to_bowen(const VerifyParams& p) {
  const SystemSpec spec = TorusSkew{};
  const std::int64_t horizon = 1024;
  std::vector<Check> checks;
  for (int k = 1; k <= 6; ++k) {
    for (double nu : {0.5, 0.1}) {
      const auto candidates = torus_x_grid(std::size_t{1} << k);
      const auto r = asymptotic_separation_number(spec, 0.1, nu, candidates, horizon, Method::Greedy, p.threads);
      std::vector<PhasePoint> witness;
      for (auto i : r.members) witness.push_back(candidates.points[i]);
      const auto t = sep_to_bowen_witness(spec, 0.1, nu, witness, 2 * horizon);
      const bool ok = r.count >= (std::size_t{1} << k) && t.check && t.n <= 2 * horizon;
      checks.push_back({fmt::format("{} distinct x, nu {}", 1 << k, nu), ok,
                        fmt::format("S* = {}, separated under d_n at n = {} (min {:.4f})", r.count, t.n, t.min_distance)});
    }
  }
  return checks;
}

}  // namespace

// ---------------------------------------------------------------- analyze

RunManifest run_analyze(const ExperimentConfig& config, std::ostream& log) {
  validate(config);
  const auto started = std::chrono::steady_clock::now();
  const SystemSpec spec = make_system(config);
  const std::string system = system_name(spec);
  const Method method = parse_method(config.method);
  RunManifest manifest;
  manifest.config = config;

  std::vector<SeparationResult> results;
  std::string estimates = std::string(kEstimatesHeader) + "\n";

  if (config.quantity == "amorphic") {
    const auto candidates = make_candidates(config, spec);
    for (double delta : config.deltas) {
      const auto est = amorphic_estimate(spec, delta, config.nus, candidates, config.horizon, config.threads, method);
      results.insert(results.end(), est.results.begin(), est.results.end());
      estimates += estimate_row(system, config.quantity, delta, est.fit);
      fmt::print(log, "{} amorphic delta={} slope={:.4f}\n", system, delta, est.fit.slope);
    }
  } else if (config.witness) {
    const auto est = witness_entropy_estimate(std::get<SkewProduct>(spec), config.witness_lo, config.witness_hi);
    results = est.results;
    for (const auto& g : est.per_delta) estimates += estimate_row(system, config.quantity, g.delta_schedule.front(), g);
    for (const auto& r : est.results) manifest.checks.emplace_back(fmt::format("witness n={}", r.n), r.count > 1);
    fmt::print(log, "{} mod (witness) slope={:.4f}\n", system, est.aggregate);
  } else {
    const auto candidates = make_candidates(config, spec);
    std::vector<std::int64_t> ns;
    for (std::int64_t n = config.n_min; n <= config.n_max; n *= 2) ns.push_back(n);
    const auto est = entropy_estimate(spec, parse_quantity(config.quantity), config.deltas, ns, candidates,
                                      config.threads, method);
    results = est.results;
    for (const auto& g : est.per_delta) {
      estimates += estimate_row(system, config.quantity, g.delta_schedule.front(), g);
      fmt::print(log, "{} {} delta={} slope={:.4f}\n", system, config.quantity, g.delta_schedule.front(), g.slope);
    }
    fmt::print(log, "{} {} aggregate slope={:.4f}\n", system, config.quantity, est.aggregate);
  }

  const fs::path dir(config.out);
  fs::create_directories(dir);
  std::ostringstream rows;
  write_results_header(rows);
  for (const auto& r : results) write_result_row(rows, r);
  write_file_atomic(dir / "results.csv", rows.str());
  write_file_atomic(dir / "estimates.csv", estimates);
  emit_plot_script(dir / "estimates.csv");
  manifest.files = {"results.csv", "estimates.csv", "plot.gp", "manifest.txt"};
  manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_manifest(manifest, dir);
  fmt::print(log, "finished in {:.3f} s\n", manifest.wall_seconds);
  return manifest;
}

void write_manifest(const RunManifest& m, const fs::path& dir) {
  std::string text;
  text += fmt::format("tool_version = {}\n", m.tool_version);
  for (const auto& f : m.files) text += fmt::format("file = {}\n", f);
  for (const auto& [name, ok] : m.checks) text += fmt::format("check = {}: {}\n", name, ok ? "pass" : "fail");
  text += "\n# configuration (threads omitted: outputs do not depend on it)\n";
  std::istringstream config_text(to_text(m.config));
  for (std::string line; std::getline(config_text, line);) {
    if (line.rfind("threads =", 0) != 0) text += line + "\n";
  }
  write_file_atomic(dir / "manifest.txt", text);
}

// ---------------------------------------------------------------- verify

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

VerifyReport run_verify(const std::string& target, const VerifyParams& params) {
  VerifyReport report;
  report.target = target;
  if (target == "counterexample") {
    report.checks = verify_counterexample(params);
  } else if (target == "toeplitz-irregular") {
    report.checks = verify_toeplitz_irregular(params);
  } else if (target == "toeplitz-regular") {
    report.checks = verify_toeplitz_regular(params);
  } else if (target == "inequalities") {
    report.checks = verify_inequalities(params);
  } else if (target == "star-to-bowen") {
    report.checks = verify_star_to_bowen(params);
  } else {
    throw ConfigError(fmt::format("unknown verify target '{}'", target));
  }
  return report;
}

void print_report(std::ostream& os, const VerifyReport& report) {
  std::size_t width = 0;
  for (const auto& c : report.checks) width = std::max(width, c.name.size());
  fmt::print(os, "verify {}\n", report.target);
  for (const auto& c : report.checks) {
    fmt::print(os, "  {:<{}}  {}  {}\n", c.name, width, c.passed ? "PASS" : "FAIL", c.detail);
  }
  fmt::print(os, "{}\n", report.passed() ? "all checks passed" : "some checks FAILED");
}

// ---------------------------------------------------------------- toeplitz

std::pair<std::int64_t, std::int64_t> parse_range(std::string_view text) {
  const auto dots = text.find("..");
  if (dots == std::string_view::npos) throw ConfigError(fmt::format("range '{}' must look like lo..hi", text));
  auto number = [&](std::string_view s) {
    std::int64_t v = 0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc() || ptr != end) throw ConfigError(fmt::format("bad range bound '{}'", s));
    return v;
  };
  return {number(text.substr(0, dots)), number(text.substr(dots + 2))};
}

void run_toeplitz(const ToeplitzOptions& options, std::ostream& out) {
  std::unique_ptr<SymbolSequence> seq;
  std::optional<ToeplitzSpec> spec;
  if (options.regular) {
    seq = std::make_unique<RegularToeplitz>();
  } else {
    spec = ToeplitzSpec{options.a1, options.b, options.depth};
    try {
      validate(*spec);
    } catch (const InvalidInput& e) {
      throw ConfigError(e.what());
    }
    seq = std::make_unique<IrregularToeplitz>(*spec);
  }
  std::ostringstream text;
  if (options.range) {
    write_sequence(text, *seq, options.range->first, options.range->second);
  }
  if (spec) {
    text << "# exact densities of B_n\n";
    write_density_csv(text, *spec);
  }
  out << text.str();
  if (options.export_path) write_file_atomic(*options.export_path, text.str());
}

// ---------------------------------------------------------------- plot

fs::path emit_plot_script(const fs::path& estimates_csv, std::optional<fs::path> output) {
  std::ifstream in(estimates_csv);
  if (!in) throw ConfigError(fmt::format("cannot read estimates CSV {}", estimates_csv.string()));
  const fs::path script = output ? *output : estimates_csv.parent_path() / "plot.gp";
  fs::path script_dir = script.parent_path();
  if (script_dir.empty()) script_dir = ".";
  const fs::path csv_dir = estimates_csv.parent_path().empty() ? fs::path(".") : estimates_csv.parent_path();
  const fs::path results_rel = fs::relative(csv_dir / "results.csv", script_dir);
  const fs::path estimates_rel = fs::relative(estimates_csv, script_dir);

  struct Row {
    std::string system;
    std::string quantity;
    std::string delta;
    double slope;
    double intercept;
  };
  std::vector<Row> rows;
  std::string line;
  bool header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (!header) {
      if (line.rfind(kEstimatesHeader, 0) != 0) throw ConfigError("estimates CSV has an unexpected header");
      header = true;
      continue;
    }
    if (fields.size() != 8) throw ConfigError(fmt::format("estimates CSV line {}: expected 8 fields", line_no));
    try {
      rows.push_back({fields[0], fields[1], fields[2], std::stod(fields[3]), std::stod(fields[4])});
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("estimates CSV line {}: non-numeric fit values", line_no));
    }
  }

  std::string gp;
  gp += "# gnuplot script for log-log separation counts with fitted power laws\n";
  gp += fmt::format("# estimates: {}\n# counts: {}\n", estimates_rel.string(), results_rel.string());
  gp += "set datafile separator ','\n";
  gp += "set terminal pdfcairo size 6in,4in\n";
  gp += "set output 'plots.pdf'\n";
  gp += "set logscale xy\nset key left top\n";

  if (rows.empty()) {
    gp += fmt::format("# warning: {} holds no estimates; the plot below is empty\n", estimates_rel.string());
    gp += "set title 'no estimates'\nplot NaN notitle\n";
  }

  std::vector<std::pair<std::string, std::string>> pages;
  std::map<std::pair<std::string, std::string>, std::vector<const Row*>> grouped;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.system, r.quantity);
    if (grouped[key].empty()) pages.push_back(key);
    grouped[key].push_back(&r);
  }
  for (const auto& key : pages) {
    const auto& [system, quantity] = key;
    const bool amorphic = quantity == "amorphic";
    gp += fmt::format("\n# page: {} / {}\n", system, quantity);
    gp += fmt::format("set title {}\n", gp_quote(system + " (" + quantity + ")"));
    gp += fmt::format("set xlabel '{}'\nset ylabel 'separated points'\n", amorphic ? "1/nu" : "n");
    std::string cmd = "plot ";
    const auto& series = grouped[key];
    for (std::size_t i = 0; i < series.size(); ++i) {
      const Row& r = *series[i];
      const std::string x = amorphic ? "1/$5" : "$6";
      cmd += fmt::format(
          "{}{} using ((strcol(1) eq {} && strcol(2) eq '{}' && abs($4 - {}) < 1e-12) ? {} : 1/0):7 with points "
          "title 'delta {}', \\\n     exp({}) * x**({}) with lines title 'fit delta {} slope {:.3f}'",
          i ? ", \\\n     " : "", gp_quote(results_rel.string()), gp_quote(system), kind_for_quantity(quantity),
          r.delta, x, r.delta, r.intercept, r.slope, r.delta, r.slope);
    }
    gp += cmd + "\n";
  }
  write_file_atomic(script, gp);
  return script;
}

}  // namespace slowent::cli
