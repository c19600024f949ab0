#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>

#include "slowent/cli/commands.hpp"
#include "slowent/cli/config.hpp"
#include "slowent/errors.hpp"

namespace cli = slowent::cli;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    out.push_back(text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-scale slow entropy of zero-entropy dynamical systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cli::kToolVersion);

  std::uint64_t seed = 1;
  std::string out_dir;
  unsigned threads = 1;
  std::string config_path;
  auto* seed_opt = app.add_option("--seed", seed, "Master 64-bit seed")->capture_default_str();
  auto* out_opt = app.add_option("--out", out_dir, "Output directory");
  auto* threads_opt = app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--config", config_path, "Experiment config file")->check(CLI::ExistingFile);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Estimate growth exponents and write results");
  analyze->fallthrough();
  std::vector<std::pair<std::string, std::string>> overrides;
  auto add_override = [&](const std::string& flag, const std::string& key, const std::string& help) {
    analyze->add_option_function<std::string>(
        flag, [&overrides, key](const std::string& v) { overrides.emplace_back(key, v); }, help);
  };
  add_override("--system", "system", "rotation | skew | torus | toeplitz | regular-toeplitz | sturmian");
  add_override("--quantity", "quantity", "pow | mod | amorphic");
  add_override("--delta", "deltas", "Comma-separated delta schedule");
  add_override("--nu", "nus", "Comma-separated decreasing nu schedule");
  add_override("--n-min", "n_min", "Smallest horizon (power of two)");
  add_override("--n-max", "n_max", "Largest horizon (power of two)");
  add_override("--horizon", "horizon", "Horizon for amorphic estimates");
  add_override("--candidates", "candidates", "Number of candidate points");
  add_override("--sampler", "sampler", "default | grid | progression | random");
  add_override("--method", "method", "greedy | exact");
  add_override("--depth", "depth", "Toeplitz depth");
  bool witness = false;
  analyze->add_flag("--witness", witness, "Use the plateau witness sets (skew, mod)");
  std::string witness_blocks;
  analyze->add_option("--blocks", witness_blocks, "Witness blocks lo..hi");
  std::vector<std::string> sets;
  analyze->add_option("--set", sets, "Raw override section.key=value");

  // verify
  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  verify->fallthrough();
  std::string target;
  verify->add_option("target", target, "Suite to run")->required()->check(CLI::IsMember(cli::kVerifyTargets));
  std::string blocks;
  cli::VerifyParams params;
  verify->add_option("--blocks", blocks, "Witness blocks lo..hi (counterexample)");
  verify->add_option("--depth", params.depth, "Toeplitz depth (toeplitz-irregular)");
  verify->add_option("--pairs", params.pairs, "Random pairs per system (inequalities)");
  verify->add_option("--log2-n-max", params.log2_n_max, "Largest horizon exponent (toeplitz-regular)");
  verify->add_option("--centers", params.centers, "Random centers (toeplitz-regular)");

  // toeplitz
  auto* toeplitz = app.add_subcommand("toeplitz", "Print a Toeplitz sequence and its density table");
  toeplitz->fallthrough();
  cli::ToeplitzOptions topts;
  std::string b_list;
  std::string print_range;
  std::string export_path;
  toeplitz->add_option("--a1", topts.a1, "Base half-width a_1");
  toeplitz->add_option("--b", b_list, "Comma-separated b_n prefix");
  toeplitz->add_option("--depth", topts.depth, "Number of block levels");
  toeplitz->add_option("--print", print_range, "Positions lo..hi to print");
  toeplitz->add_flag("--regular", topts.regular, "Use the trailing-zeros sequence");
  toeplitz->add_option("--export", export_path, "Also write the output to this file");

  // plot
  auto* plot = app.add_subcommand("plot", "Emit a gnuplot script for an estimates CSV");
  plot->fallthrough();
  std::string estimates_csv;
  std::string plot_output;
  plot->add_option("estimates", estimates_csv, "estimates.csv")->required();
  plot->add_option("--output", plot_output, "Script path (default: plot.gp next to the CSV)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitConfig;
  }

  try {
    if (analyze->parsed()) {
      cli::ExperimentConfig config = config_path.empty() ? cli::ExperimentConfig{} : cli::load_config(config_path);
      for (const auto& [key, value] : overrides) cli::set_field(config, key, value);
      for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw cli::ConfigError(fmt::format("--set expects key=value, got '{}'", s));
        cli::set_field(config, s.substr(0, eq), s.substr(eq + 1));
      }
      if (witness) config.witness = true;
      if (!witness_blocks.empty()) {
        const auto [lo, hi] = cli::parse_range(witness_blocks);
        config.witness_lo = static_cast<int>(lo);
        config.witness_hi = static_cast<int>(hi);
      }
      if (seed_opt->count() > 0) config.seed = seed;
      if (out_opt->count() > 0) config.out = out_dir;
      if (threads_opt->count() > 0) config.threads = threads;
      const auto manifest = cli::run_analyze(config, std::cout);
      std::cout << "wrote " << config.out << "/{results.csv, estimates.csv, plot.gp, manifest.txt}\n";
      (void)manifest;
      return cli::kExitOk;
    }
    if (verify->parsed()) {
      if (!blocks.empty()) {
        const auto [lo, hi] = cli::parse_range(blocks);
        params.block_lo = static_cast<int>(lo);
        params.block_hi = static_cast<int>(hi);
      }
      if (seed_opt->count() > 0) params.seed = seed;
      if (threads_opt->count() > 0) params.threads = threads;
      const auto report = cli::run_verify(target, params);
      cli::print_report(std::cout, report);
      return report.passed() ? cli::kExitOk : cli::kExitVerifyFailed;
    }
    if (toeplitz->parsed()) {
      if (!b_list.empty()) {
        topts.b.clear();
        for (const auto& item : split_list(b_list)) {
          try {
            topts.b.push_back(std::stoll(item));
          } catch (const std::exception&) {
            throw cli::ConfigError(fmt::format("bad --b entry '{}'", item));
          }
        }
      }
      if (!print_range.empty()) topts.range = cli::parse_range(print_range);
      if (!export_path.empty()) topts.export_path = export_path;
      cli::run_toeplitz(topts, std::cout);
      return cli::kExitOk;
    }
    if (plot->parsed()) {
      std::optional<std::filesystem::path> output;
      if (!plot_output.empty()) output = plot_output;
      std::cout << cli::emit_plot_script(estimates_csv, output).string() << '\n';
      return cli::kExitOk;
    }
  } catch (const slowent::DepthExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitDepth;
  } catch (const slowent::InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitCompute;
  }
  return cli::kExitOk;
}
