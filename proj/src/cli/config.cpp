#include "slowent/cli/config.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "slowent/random.hpp"
#include "slowent/toeplitz.hpp"

namespace slowent::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_number(std::string_view text, std::string_view key) {
  text = trim(text);
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError(fmt::format("{}: cannot parse '{}'", key, text));
  }
  return value;
}

std::string format_value(const std::string& v) { return v; }
std::string format_value(double v) { return fmt::format("{:.17g}", v); }
std::string format_value(bool v) { return v ? "true" : "false"; }
template <class T>
  requires std::is_integral_v<T>
std::string format_value(T v) {
  return fmt::format("{}", v);
}
template <class T>
std::string format_value(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ",";
    out += format_value(v[i]);
  }
  return out;
}

void parse_value(std::string_view text, std::string& out, std::string_view) { out = std::string(trim(text)); }
void parse_value(std::string_view text, double& out, std::string_view key) { out = parse_number<double>(text, key); }
void parse_value(std::string_view text, bool& out, std::string_view key) {
  text = trim(text);
  if (text == "true" || text == "1") {
    out = true;
  } else if (text == "false" || text == "0") {
    out = false;
  } else {
    throw ConfigError(fmt::format("{}: expected true or false, got '{}'", key, text));
  }
}
template <class T>
  requires std::is_integral_v<T>
void parse_value(std::string_view text, T& out, std::string_view key) {
  out = parse_number<T>(text, key);
}
template <class T>
void parse_value(std::string_view text, std::vector<T>& out, std::string_view key) {
  out.clear();
  text = trim(text);
  if (text.empty()) return;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = text.find(',', pos);
    T item{};
    parse_value(text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos), item, key);
    out.push_back(item);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

template <class T>
Field field(std::string section, std::string key, T ExperimentConfig::*member) {
  std::string name = key;
  return {std::move(section), std::move(key),
          [member](const ExperimentConfig& c) { return format_value(c.*member); },
          [member, name](ExperimentConfig& c, std::string_view text) { parse_value(text, c.*member, name); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      field("system", "system", &ExperimentConfig::system),
      field("system", "rho", &ExperimentConfig::rho),
      field("system", "eps", &ExperimentConfig::eps),
      field("system", "plateau_depth", &ExperimentConfig::plateau_depth),
      field("system", "a1", &ExperimentConfig::a1),
      field("system", "b", &ExperimentConfig::b),
      field("system", "depth", &ExperimentConfig::depth),
      field("system", "truncation_radius", &ExperimentConfig::truncation_radius),
      field("system", "x0", &ExperimentConfig::x0),
      field("analysis", "quantity", &ExperimentConfig::quantity),
      field("analysis", "deltas", &ExperimentConfig::deltas),
      field("analysis", "nus", &ExperimentConfig::nus),
      field("analysis", "n_min", &ExperimentConfig::n_min),
      field("analysis", "n_max", &ExperimentConfig::n_max),
      field("analysis", "horizon", &ExperimentConfig::horizon),
      field("analysis", "witness", &ExperimentConfig::witness),
      field("analysis", "witness_lo", &ExperimentConfig::witness_lo),
      field("analysis", "witness_hi", &ExperimentConfig::witness_hi),
      field("sampling", "sampler", &ExperimentConfig::sampler),
      field("sampling", "candidates", &ExperimentConfig::candidates),
      field("sampling", "seed", &ExperimentConfig::seed),
      field("sampling", "method", &ExperimentConfig::method),
      field("sampling", "exact_limit", &ExperimentConfig::exact_limit),
      field("run", "out", &ExperimentConfig::out),
      field("run", "threads", &ExperimentConfig::threads),
  };
  return table;
}

const Field& find_field(std::string_view section, std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key && (section.empty() || f.section == section)) return f;
  }
  if (section.empty()) throw ConfigError(fmt::format("unknown config key '{}'", key));
  throw ConfigError(fmt::format("unknown config key '{}' in [{}]", key, section));
}

bool is_power_of_two(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

std::string to_text(const ExperimentConfig& config) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + f.get(config) + "\n";
  }
  return out;
}

void set_field(ExperimentConfig& config, std::string_view key, std::string_view value) {
  std::string_view section;
  if (const auto dot = key.find('.'); dot != std::string_view::npos) {
    section = key.substr(0, dot);
    key = key.substr(dot + 1);
  }
  find_field(section, key).set(config, value);
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(fmt::format("line {}: malformed section header", line_no));
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "system" && section != "analysis" && section != "sampling" && section != "run") {
        throw ConfigError(fmt::format("line {}: unknown section [{}]", line_no, section));
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(fmt::format("line {}: expected key = value", line_no));
    if (section.empty()) throw ConfigError(fmt::format("line {}: key outside any section", line_no));
    find_field(section, trim(line.substr(0, eq))).set(config, line.substr(eq + 1));
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config file {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void validate(const ExperimentConfig& c) {
  static const std::vector<std::string> systems = {"rotation", "skew", "torus", "toeplitz", "regular-toeplitz",
                                                   "sturmian"};
  if (std::find(systems.begin(), systems.end(), c.system) == systems.end()) {
    throw ConfigError(fmt::format("unknown system '{}'", c.system));
  }
  if (c.quantity != "pow" && c.quantity != "mod" && c.quantity != "amorphic") {
    throw ConfigError(fmt::format("unknown quantity '{}'", c.quantity));
  }
  if (c.deltas.empty()) throw ConfigError("deltas must be nonempty");
  for (double d : c.deltas) {
    if (!(d > 0.0)) throw ConfigError("deltas must be positive");
  }
  if (c.quantity == "amorphic") {
    if (c.nus.size() < 3) throw ConfigError("amorphic estimates need at least 3 values of nu");
    for (std::size_t i = 0; i < c.nus.size(); ++i) {
      if (!(c.nus[i] > 0.0 && c.nus[i] < 1.0)) throw ConfigError("nus must lie in (0,1)");
      if (i > 0 && !(c.nus[i] < c.nus[i - 1])) throw ConfigError("nus must decrease");
    }
    if (c.horizon < 4) throw ConfigError("horizon must be >= 4");
  }
  if (!is_power_of_two(c.n_min) || !is_power_of_two(c.n_max) || c.n_min * 4 > c.n_max) {
    throw ConfigError("n_min and n_max must be powers of two with n_max >= 4 n_min");
  }
  if (c.witness && (c.system != "skew" || c.quantity != "mod")) {
    throw ConfigError("witness mode applies to system = skew with quantity = mod");
  }
  if (c.witness && (c.witness_lo < 3 || c.witness_hi > 9 || c.witness_hi - c.witness_lo < 2)) {
    throw ConfigError("witness blocks must satisfy 3 <= witness_lo, witness_lo + 2 <= witness_hi <= 9");
  }
  if (c.sampler != "default" && c.sampler != "grid" && c.sampler != "progression" && c.sampler != "random") {
    throw ConfigError(fmt::format("unknown sampler '{}'", c.sampler));
  }
  const bool symbolic = c.system == "toeplitz" || c.system == "regular-toeplitz" || c.system == "sturmian";
  if ((c.sampler == "progression" || c.sampler == "random") && !symbolic) {
    throw ConfigError(fmt::format("sampler '{}' needs a symbolic system", c.sampler));
  }
  if (c.candidates == 0) throw ConfigError("candidates must be positive");
  if (c.method != "greedy" && c.method != "exact") throw ConfigError(fmt::format("unknown method '{}'", c.method));
  if (c.method == "exact" && c.candidates > c.exact_limit) {
    throw ConfigError(fmt::format("exact method needs candidates <= exact_limit ({})", c.exact_limit));
  }
  if (c.exact_limit == 0 || c.exact_limit > kExactLimit) {
    throw ConfigError(fmt::format("exact_limit must lie in [1, {}]", kExactLimit));
  }
  if (c.threads == 0) throw ConfigError("threads must be >= 1");
  if (c.out.empty()) throw ConfigError("out must be nonempty");
  try {
    validate(make_system(c));
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
}

SystemSpec make_system(const ExperimentConfig& c) {
  try {
    if (c.system == "rotation") return CircleRotation{c.rho};
    if (c.system == "skew") return SkewProduct{c.rho, c.eps, c.plateau_depth};
    if (c.system == "torus") return TorusSkew{};
    if (c.system == "toeplitz") {
      return ShiftOnSubshift{std::make_shared<IrregularToeplitz>(ToeplitzSpec{c.a1, c.b, c.depth}),
                             c.truncation_radius};
    }
    if (c.system == "regular-toeplitz") return ShiftOnSubshift{std::make_shared<RegularToeplitz>(), c.truncation_radius};
    if (c.system == "sturmian") {
      return ShiftOnSubshift{std::make_shared<SturmianSequence>(c.rho, c.x0), c.truncation_radius};
    }
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError(fmt::format("unknown system '{}'", c.system));
}

CandidateSet make_candidates(const ExperimentConfig& c, const SystemSpec& spec) {
  const std::uint64_t seed = derive_seed(c.seed, "candidates/" + c.system);
  const auto* shift = std::get_if<ShiftOnSubshift>(&spec);
  if (c.sampler == "default" || (c.sampler == "grid" && shift == nullptr)) {
    return default_candidates(spec, c.candidates, seed);
  }
  if (shift == nullptr) throw ConfigError(fmt::format("sampler '{}' needs a symbolic system", c.sampler));
  if (c.sampler == "random") return default_candidates(spec, c.candidates, seed);
  const auto half = static_cast<std::int64_t>(c.candidates / 2);
  return shift_points(shift->source, progression_centers(-half, 1, c.candidates));
}

}  // namespace slowent::cli
