#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "slowent/cli/config.hpp"

namespace slowent::cli {

inline constexpr const char* kToolVersion = "0.3.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,
  kExitConfig = 2,
  kExitCompute = 3,
  kExitDepth = 4,
};

struct RunManifest {
  ExperimentConfig config;
  std::string tool_version = kToolVersion;
  double wall_seconds = 0.0;
  std::vector<std::string> files;  // relative to the output directory
  std::vector<std::pair<std::string, bool>> checks;
};

// Runs the configured estimate and writes results.csv, estimates.csv,
// plot.gp and manifest.txt into config.out.
RunManifest run_analyze(const ExperimentConfig& config, std::ostream& log);

// key = value text; written to a temporary file and renamed into place.
void write_manifest(const RunManifest& manifest, const std::filesystem::path& dir);

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::string target;
  std::vector<Check> checks;
  bool passed() const;
};

struct VerifyParams {
  int block_lo = 3;
  int block_hi = 6;
  int depth = 4;
  std::size_t pairs = 1000;
  std::uint64_t seed = 7;
  int log2_n_max = 11;
  std::size_t centers = 1000;
  unsigned threads = 1;
};

inline const std::vector<std::string> kVerifyTargets = {"counterexample", "toeplitz-irregular", "toeplitz-regular",
                                                        "inequalities", "star-to-bowen"};

VerifyReport run_verify(const std::string& target, const VerifyParams& params);
void print_report(std::ostream& os, const VerifyReport& report);

struct ToeplitzOptions {
  std::int64_t a1 = 2;
  std::vector<std::int64_t> b = {4};
  int depth = 6;
  bool regular = false;
  std::optional<std::pair<std::int64_t, std::int64_t>> range;
  std::optional<std::filesystem::path> export_path;
};

// Symbol dump over the range followed by the exact density table (irregular only).
void run_toeplitz(const ToeplitzOptions& options, std::ostream& out);

// "lo..hi"; lo > hi denotes the empty range.
std::pair<std::int64_t, std::int64_t> parse_range(std::string_view text);

// Writes a gnuplot script next to the estimates CSV (or at `output`) and returns its path.
std::filesystem::path emit_plot_script(const std::filesystem::path& estimates_csv,
                                       std::optional<std::filesystem::path> output = std::nullopt);

inline constexpr const char* kEstimatesHeader = "system,quantity,delta,slope,intercept,r_squared,n_min,n_max";

}  // namespace slowent::cli
