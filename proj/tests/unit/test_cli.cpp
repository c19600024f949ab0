#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "slowent/cli/commands.hpp"
#include "slowent/cli/config.hpp"
#include "slowent/errors.hpp"

using namespace slowent;
using namespace slowent::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / fs::path("slowent-cli-" + std::to_string(::getpid()) + "-" +
                                                std::to_string(counter()++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

int run_tool(const std::string& args) {
  const std::string cmd = std::string(SLOWENT_TOOL) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig c;
  c.system = "toeplitz";
  c.quantity = "pow";
  c.deltas = {0.5, 0.2};
  c.n_min = 16;
  c.n_max = 128;
  c.candidates = 400;
  c.out = out.string();
  return c;
}

}  // namespace

TEST_CASE("config text round trip") {
  ExperimentConfig c;
  c.system = "skew";
  c.rho = 0.1 + 0.2;  // not a short decimal
  c.eps = 1.0 / 48.0;
  c.b = {4, 8, 32};
  c.deltas = {0.3, 1.0 / 3.0};
  c.nus = {0.5, 0.2, 0.05};
  c.seed = 18446744073709551615ull;
  c.witness = true;
  c.out = "some dir/out";
  const auto text = to_text(c);
  const auto back = parse_config(text);
  CHECK(to_text(back) == text);
  CHECK(back.rho == c.rho);
  CHECK(back.eps == c.eps);
  CHECK(back.deltas == c.deltas);
  CHECK(back.b == c.b);
  CHECK(back.seed == c.seed);
  CHECK(back.witness);
  CHECK(back.out == "some dir/out");
  CHECK(to_text(parse_config(to_text(ExperimentConfig{}))) == to_text(ExperimentConfig{}));
}

TEST_CASE("config parsing") {
  const auto c = parse_config(
      "# comment\n"
      "[system]\n"
      "system = torus   # trailing\n"
      "\n"
      "[analysis]\n"
      "deltas = 0.1, 0.05\n"
      "n_max = 2048\r\n");
  CHECK(c.system == "torus");
  CHECK(c.deltas == std::vector<double>{0.1, 0.05});
  CHECK(c.n_max == 2048);
  CHECK(c.n_min == 16);

  CHECK_THROWS_AS(parse_config("[system]\ncolour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[bogus]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("system = torus\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[analysis]\nn_min = sixteen\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[analysis]\nn_min\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[analysis\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[analysis]\nwitness = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[system]\nrho = 0.5x\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/slowent.cfg"), ConfigError);

  ExperimentConfig s;
  set_field(s, "analysis.n_min", "32");
  set_field(s, "candidates", "77");
  CHECK(s.n_min == 32);
  CHECK(s.candidates == 77);
  CHECK_THROWS_AS(set_field(s, "run.n_min", "32"), ConfigError);
  CHECK_THROWS_AS(set_field(s, "nothing", "1"), ConfigError);
}

TEST_CASE("config validation") {
  auto bad = [](auto mutate) {
    ExperimentConfig c;
    mutate(c);
    return c;
  };
  CHECK_NOTHROW(validate(ExperimentConfig{}));
  CHECK_THROWS_AS(validate(bad([](auto& c) { c.system = "pendulum"; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](auto& c) { c.quantity = "top"; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](auto& c) { c.n_min = 24; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](auto& c) { c.n_max = 32; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](auto& c) { c.deltas = {}; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](auto& c) { c.witness = true; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](auto& c) {
                    c.quantity = "amorphic";
                    c.nus = {0.1, 0.2, 0.05};
                  })),
                  ConfigError);
  CHECK_THROWS_AS(validate(bad([](auto& c) { c.method = "exact"; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](auto& c) { c.eps = 0.2; c.system = "skew"; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](auto& c) { c.system = "toeplitz"; c.b = {1}; })), ConfigError);
  CHECK_THROWS_AS(validate(bad([](auto& c) { c.sampler = "progression"; })), ConfigError);
}

TEST_CASE("candidates follow the derived seed") {
  ExperimentConfig c;
  c.system = "toeplitz";
  c.candidates = 50;
  const auto spec = make_system(c);
  const auto a = make_candidates(c, spec);
  const auto b = make_candidates(c, spec);
  REQUIRE(a.points.size() == 50);
  for (std::size_t i = 0; i < 50; ++i)
    CHECK(std::get<ShiftPoint>(a.points[i]).offset == std::get<ShiftPoint>(b.points[i]).offset);
  c.seed = 2;
  const auto other = make_candidates(c, spec);
  bool differs = false;
  for (std::size_t i = 0; i < 50; ++i)
    differs |= std::get<ShiftPoint>(a.points[i]).offset != std::get<ShiftPoint>(other.points[i]).offset;
  CHECK(differs);

  c.sampler = "progression";
  const auto prog = make_candidates(c, spec);
  CHECK(std::get<ShiftPoint>(prog.points[0]).offset == -25);
  CHECK(std::get<ShiftPoint>(prog.points[49]).offset == 24);
}

TEST_CASE("ranges") {
  CHECK(parse_range("-5..5") == std::pair<std::int64_t, std::int64_t>{-5, 5});
  CHECK(parse_range("3..1") == std::pair<std::int64_t, std::int64_t>{3, 1});
  CHECK_THROWS_AS(parse_range("3-5"), ConfigError);
  CHECK_THROWS_AS(parse_range("a..5"), ConfigError);
  CHECK_THROWS_AS(parse_range("..5"), ConfigError);
}

TEST_CASE("toeplitz command output") {
  ToeplitzOptions o;
  o.b = {4, 8, 16};
  o.depth = 4;
  o.range = parse_range("-5..5");
  std::ostringstream out;
  run_toeplitz(o, out);
  const auto text = out.str();
  CHECK(text.find("\n0 0\n") != std::string::npos);
  CHECK(text.find("\n3 1\n") != std::string::npos);
  CHECK(text.find("1,5,16\n2,51,128\n") != std::string::npos);

  ToeplitzOptions r;
  r.regular = true;
  r.range = parse_range("1..8");
  std::ostringstream reg;
  run_toeplitz(r, reg);
  CHECK(reg.str() == "# regular-toeplitz range 1..8\n1 1\n2 0\n3 1\n4 1\n5 1\n6 0\n7 1\n8 0\n");

  r.range = parse_range("5..4");
  std::ostringstream empty;
  run_toeplitz(r, empty);
  CHECK(empty.str() == "# regular-toeplitz range 5..4\n");

  TempDir tmp;
  r.range = parse_range("1..3");
  r.export_path = tmp.path / "seq.txt";
  std::ostringstream sink;
  run_toeplitz(r, sink);
  CHECK(slurp(tmp.path / "seq.txt") == sink.str());

  ToeplitzOptions shallow;
  shallow.depth = 1;
  shallow.range = parse_range("0..5");
  std::ostringstream lost;
  CHECK_THROWS_AS(run_toeplitz(shallow, lost), DepthExceeded);
}

TEST_CASE("plot scripts") {
  TempDir tmp;
  const auto csv = tmp.path / "estimates.csv";

  spit(csv, std::string(kEstimatesHeader) +
                "\nrotation,pow,0.25,0.01,1.3,0.5,16,1024\nrotation,pow,0.1,0.02,2.2,0.6,16,1024\n");
  const auto script = emit_plot_script(csv);
  CHECK(script == tmp.path / "plot.gp");
  const auto gp = slurp(script);
  CHECK(gp.find("'results.csv'") != std::string::npos);
  CHECK(gp.find(tmp.path.string()) == std::string::npos);
  CHECK(gp.find("title 'delta 0.25'") != std::string::npos);
  CHECK(gp.find("title 'delta 0.1'") != std::string::npos);
  CHECK(count_of(gp, "# page:") == 1);

  spit(csv, std::string(kEstimatesHeader) + "\n");
  const auto empty = slurp(emit_plot_script(csv));
  CHECK(empty.find("# warning") != std::string::npos);
  CHECK(empty.find("plot NaN") != std::string::npos);
  CHECK(count_of(empty, "# page:") == 0);

  spit(csv, std::string(kEstimatesHeader) +
                "\nrotation,pow,0.25,0.01,1.3,0.5,16,1024\ntorus,pow,0.1,0.98,2.2,0.99,16,4096\n");
  fs::create_directories(tmp.path / "scripts");
  const auto two = slurp(emit_plot_script(csv, tmp.path / "scripts" / "two.gp"));
  CHECK(count_of(two, "# page:") == 2);
  CHECK(two.find("'../results.csv'") != std::string::npos);

  CHECK_THROWS_AS(emit_plot_script(tmp.path / "missing.csv"), ConfigError);
  spit(csv, "a,b,c\n1,2,3\n");
  CHECK_THROWS_AS(emit_plot_script(csv), ConfigError);
  spit(csv, std::string(kEstimatesHeader) + "\nrotation,pow,0.25\n");
  CHECK_THROWS_AS(emit_plot_script(csv), ConfigError);
}

TEST_CASE("analyze writes schema-valid, thread-independent outputs") {
  TempDir tmp;
  auto c1 = small_config(tmp.path / "one");
  auto c3 = small_config(tmp.path / "three");
  c3.threads = 3;
  std::ostringstream log;
  const auto m = run_analyze(c1, log);
  run_analyze(c3, log);

  for (const auto& f : m.files) CHECK(fs::exists(tmp.path / "one" / f));
  const auto manifest = slurp(tmp.path / "one" / "manifest.txt");
  CHECK(manifest.find("tool_version = 0.3.0") != std::string::npos);
  for (const auto& f : m.files) CHECK(manifest.find("file = " + f) != std::string::npos);

  for (const char* f : {"results.csv", "estimates.csv", "plot.gp", "manifest.txt"}) {
    // the output directory name is the only legitimate difference
    auto a = slurp(tmp.path / "one" / f);
    auto b = slurp(tmp.path / "three" / f);
    const auto strip = [&](std::string s, const std::string& dir) {
      for (auto pos = s.find(dir); pos != std::string::npos; pos = s.find(dir)) s.erase(pos, dir.size());
      return s;
    };
    CHECK(strip(a, c1.out) == strip(b, c3.out));
  }

  std::istringstream rows(slurp(tmp.path / "one" / "results.csv"));
  std::string line;
  std::getline(rows, line);
  CHECK(line == "system,kind,method,delta,nu,n,count,seed,sampler,candidate_count");
  std::size_t n_rows = 0;
  while (std::getline(rows, line)) {
    ++n_rows;
    CHECK(count_of(line, ",") == 9);
    CHECK(line.find(",bowen,greedy,") != std::string::npos);
  }
  CHECK(n_rows == 2 * 4);

  std::istringstream est(slurp(tmp.path / "one" / "estimates.csv"));
  std::getline(est, line);
  CHECK(line == kEstimatesHeader);
  std::size_t n_est = 0;
  while (std::getline(est, line)) {
    ++n_est;
    CHECK(count_of(line, ",") == 7);
  }
  CHECK(n_est == 2);

  // rerun into the same directory: identical bytes
  const auto first = slurp(tmp.path / "one" / "results.csv");
  run_analyze(c1, log);
  CHECK(slurp(tmp.path / "one" / "results.csv") == first);
}

TEST_CASE("analyze variants") {
  TempDir tmp;
  std::ostringstream log;

  ExperimentConfig w;
  w.system = "skew";
  w.quantity = "mod";
  w.witness = true;
  w.witness_lo = 3;
  w.witness_hi = 5;
  w.out = (tmp.path / "w").string();
  const auto m = run_analyze(w, log);
  CHECK(m.checks.size() == 3);
  for (const auto& [name, ok] : m.checks) CHECK(ok);
  CHECK(slurp(tmp.path / "w" / "results.csv").find(",witness,") != std::string::npos);

  ExperimentConfig a;
  a.system = "rotation";
  a.quantity = "amorphic";
  a.deltas = {0.25};
  a.candidates = 64;
  a.horizon = 512;
  a.out = (tmp.path / "a").string();
  run_analyze(a, log);
  const auto rows = slurp(tmp.path / "a" / "results.csv");
  CHECK(count_of(rows, ",asymptotic,") == 4);
  CHECK(rows.find(",0.03125,512,4,") != std::string::npos);
}

TEST_CASE("exit codes") {
  TempDir tmp;
  const std::string out = " --out " + (tmp.path / "o").string();
  CHECK(run_tool("--version") == kExitOk);
  CHECK(run_tool("toeplitz --regular --print 1..8") == kExitOk);
  CHECK(run_tool("verify counterexample --blocks 3..4") == kExitOk);
  CHECK(run_tool("analyze --system rotation --n-max 64 --candidates 32" + out) == kExitOk);
  CHECK(run_tool("verify inequalities --pairs 1000") == kExitVerifyFailed);
  CHECK(run_tool("verify nothing") == kExitConfig);
  CHECK(run_tool("analyze --system pendulum" + out) == kExitConfig);
  CHECK(run_tool("analyze --set run.threads=zero" + out) == kExitConfig);
  CHECK(run_tool("plot " + (tmp.path / "none.csv").string()) == kExitConfig);
  CHECK(run_tool("frobnicate") == kExitConfig);
  spit(tmp.path / "file", "x");
  CHECK(run_tool("analyze --system rotation --n-max 64 --candidates 32 --out " + (tmp.path / "file" / "sub").string()) ==
        kExitCompute);
  CHECK(run_tool("toeplitz --depth 1 --print 0..5") == kExitDepth);
}
