#pragma once

// Experiment configuration: flat "key = value" text with [section] headers.
// Unknown keys and sections are rejected; omitted keys keep their defaults.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "slowent/errors.hpp"
#include "slowent/separation.hpp"
#include "slowent/systems.hpp"

namespace slowent::cli {

class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

struct ExperimentConfig {
  // [system]
  std::string system = "rotation";  // rotation | skew | torus | toeplitz | regular-toeplitz | sturmian
  double rho = kGoldenRho;
  double eps = 1.0 / 16.0;
  int plateau_depth = 20;
  std::int64_t a1 = 2;
  std::vector<std::int64_t> b = {4};
  int depth = 7;
  int truncation_radius = 16;
  double x0 = 0.0;

  // [analysis]
  std::string quantity = "pow";  // pow | mod | amorphic
  std::vector<double> deltas = {0.4, 0.25, 0.15, 0.1};
  std::vector<double> nus = {0.25, 0.125, 0.0625, 0.03125};
  std::int64_t n_min = 16;
  std::int64_t n_max = 1024;
  std::int64_t horizon = 4096;  // amorphic estimates
  bool witness = false;         // skew + mod: use the plateau witness sets
  int witness_lo = 3;
  int witness_hi = 7;

  // [sampling]
  std::string sampler = "default";  // default | grid | progression | random
  std::size_t candidates = 1024;
  std::uint64_t seed = 1;
  std::string method = "greedy";
  std::size_t exact_limit = kExactLimit;

  // [run]
  std::string out = "out";
  unsigned threads = 1;
};

std::string to_text(const ExperimentConfig& config);
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Sets one field from its "section.key" or bare "key" name.
void set_field(ExperimentConfig& config, std::string_view key, std::string_view value);

void validate(const ExperimentConfig& config);

SystemSpec make_system(const ExperimentConfig& config);
CandidateSet make_candidates(const ExperimentConfig& config, const SystemSpec& spec);

}  // namespace slowent::cli
