#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sparse_saddle/problems.hpp"

namespace sparse_saddle {

/// Raised for malformed or semantically invalid configuration; the CLI maps
/// it to exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class RunMode { fixed_set, adaptive };

struct ExperimentConfig {
  ProblemConfig problem;
  RunMode mode = RunMode::fixed_set;
  int max_degree = 0;   // fixed_set
  int n_target = 0;     // adaptive
  double weight_u = 0.5;
  int validation_samples = 100;
  std::uint64_t seed = 20240701ull;
  double epsilon = 0.0;  // 0 = midpoint of (theta, kappa_min)
  std::size_t fit_lo = 0;  // 0 = automatic window
  std::size_t fit_hi = 0;
  std::string output_directory;
  bool emit_svg = true;
  bool dump_vectors = false;
  std::string raw_text;  // hashed into the summary
};

namespace detail {

struct ConfigLine {
  int number;
  std::string value;
};

inline std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const ConfigLine& line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(line.value, &used);
    if (used != line.value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line.number) + ": field '" + key + "' expects a number, got '" +
                      line.value + "'");
  }
}

inline long parse_int(const std::string& key, const ConfigLine& line) {
  try {
    std::size_t used = 0;
    const long v = std::stol(line.value, &used);
    if (used != line.value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line.number) + ": field '" + key + "' expects an integer, got '" +
                      line.value + "'");
  }
}

inline bool parse_bool(const std::string& key, const ConfigLine& line) {
  if (line.value == "true" || line.value == "1") return true;
  if (line.value == "false" || line.value == "0") return false;
  throw ConfigError("line " + std::to_string(line.number) + ": field '" + key + "' expects true/false, got '" +
                    line.value + "'");
}

inline std::vector<double> parse_double_list(const std::string& key, const ConfigLine& line) {
  std::vector<double> out;
  std::size_t pos = 0;
  const std::string& s = line.value;
  while (pos <= s.size()) {
    std::size_t comma = s.find(',', pos);
    const std::string tok = trim(s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (tok.empty())
      throw ConfigError("line " + std::to_string(line.number) + ": field '" + key + "' has an empty list entry");
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ConfigError("line " + std::to_string(line.number) + ": field '" + key + "' has a malformed entry '" +
                        tok + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace detail

/// Flat dotted-key configuration: one `key = value` per line, `#` comments.
inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  cfg.raw_text = text;

  std::map<std::string, detail::ConfigLine> fields;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
    ++line_no;
    pos = eol == std::string::npos ? text.size() + 1 : eol + 1;

    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value', got '" + line + "'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value', got '" + line + "'");
    if (fields.count(key)) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    fields[key] = {line_no, value};
  }

  auto take = [&fields](const std::string& key) -> const detail::ConfigLine* {
    auto it = fields.find(key);
    return it == fields.end() ? nullptr : &it->second;
  };
  auto require = [&take](const std::string& key) -> const detail::ConfigLine& {
    const detail::ConfigLine* line = take(key);
    if (!line) throw ConfigError("missing required field '" + key + "'");
    return *line;
  };

  const std::string known[] = {
      "problem.kind",     "problem.resolution", "problem.parametrization", "problem.J",
      "problem.sigma",    "problem.amplitude",  "problem.weights",         "problem.kappa0",
      "problem.source",   "problem.force_x",    "problem.force_y",         "run.mode",
      "run.max_degree",   "run.n_target",       "run.weight_u",            "validation.samples",
      "validation.seed",  "analysis.epsilon",   "analysis.fit_lo",         "analysis.fit_hi",
      "output.directory", "output.emit_svg",    "output.dump_vectors"};
  for (const auto& [key, line] : fields) {
    bool ok = false;
    for (const auto& k : known) ok = ok || k == key;
    if (!ok) throw ConfigError("line " + std::to_string(line.number) + ": unknown key '" + key + "'");
  }

  {
    const detail::ConfigLine& kind = require("problem.kind");
    if (kind.value == "diffusion1d")
      cfg.problem.kind = ProblemConfig::Kind::diffusion1d;
    else if (kind.value == "stokes2d")
      cfg.problem.kind = ProblemConfig::Kind::stokes2d;
    else
      throw ConfigError("line " + std::to_string(kind.number) + ": problem.kind must be diffusion1d or stokes2d");
  }
  {
    const long r = detail::parse_int("problem.resolution", require("problem.resolution"));
    if (r < 4 || r > 4096) throw ConfigError("problem.resolution must lie in [4, 4096], got " + std::to_string(r));
    cfg.problem.resolution = static_cast<int>(r);
  }
  {
    const detail::ConfigLine& par = require("problem.parametrization");
    if (par.value == "global")
      cfg.problem.basis = BasisKind::global;
    else if (par.value == "local")
      cfg.problem.basis = BasisKind::local;
    else
      throw ConfigError("line " + std::to_string(par.number) + ": problem.parametrization must be global or local");
  }
  {
    const long j = detail::parse_int("problem.J", require("problem.J"));
    if (j < 0 || j > 256) throw ConfigError("problem.J must lie in [0, 256], got " + std::to_string(j));
    cfg.problem.J = static_cast<int>(j);
  }
  if (const auto* line = take("problem.kappa0")) {
    cfg.problem.kappa0 = detail::parse_double("problem.kappa0", *line);
    if (!(cfg.problem.kappa0 > 0.0)) throw ConfigError("problem.kappa0 must be positive");
  }
  if (cfg.problem.basis == BasisKind::global) {
    if (const auto* line = take("problem.sigma")) {
      cfg.problem.sigma = detail::parse_double("problem.sigma", *line);
      if (!(cfg.problem.sigma > 1.0)) throw ConfigError("problem.sigma must exceed 1");
    }
    if (const auto* line = take("problem.amplitude")) {
      cfg.problem.amplitude = detail::parse_double("problem.amplitude", *line);
      if (!(cfg.problem.amplitude > 0.0)) throw ConfigError("problem.amplitude must be positive");
    }
    if (take("problem.weights")) throw ConfigError("problem.weights applies to the local parametrization only");
  } else {
    const detail::ConfigLine& w = require("problem.weights");
    cfg.problem.weights = detail::parse_double_list("problem.weights", w);
    if (static_cast<int>(cfg.problem.weights.size()) != cfg.problem.J)
      throw ConfigError("line " + std::to_string(w.number) + ": problem.weights must list exactly J = " +
                        std::to_string(cfg.problem.J) + " values, got " +
                        std::to_string(cfg.problem.weights.size()));
  }
  if (const auto* line = take("problem.source")) cfg.problem.source = detail::parse_double("problem.source", *line);
  if (const auto* line = take("problem.force_x")) cfg.problem.force_x = detail::parse_double("problem.force_x", *line);
  if (const auto* line = take("problem.force_y")) cfg.problem.force_y = detail::parse_double("problem.force_y", *line);

  {
    const detail::ConfigLine& mode = require("run.mode");
    if (mode.value == "fixed_set") {
      cfg.mode = RunMode::fixed_set;
      const long d = detail::parse_int("run.max_degree", require("run.max_degree"));
      if (d < 0 || d > 32) throw ConfigError("run.max_degree must lie in [0, 32], got " + std::to_string(d));
      cfg.max_degree = static_cast<int>(d);
    } else if (mode.value == "adaptive") {
      cfg.mode = RunMode::adaptive;
      const long n = detail::parse_int("run.n_target", require("run.n_target"));
      if (n < 1 || n > 100000) throw ConfigError("run.n_target must lie in [1, 100000], got " + std::to_string(n));
      cfg.n_target = static_cast<int>(n);
    } else {
      throw ConfigError("line " + std::to_string(mode.number) + ": run.mode must be fixed_set or adaptive");
    }
  }
  if (const auto* line = take("run.weight_u")) {
    cfg.weight_u = detail::parse_double("run.weight_u", *line);
    if (!(cfg.weight_u >= 0.0 && cfg.weight_u <= 1.0)) throw ConfigError("run.weight_u must lie in [0, 1]");
  }
  if (const auto* line = take("validation.samples")) {
    const long m = detail::parse_int("validation.samples", *line);
    if (m < 1 || m > 100000) throw ConfigError("validation.samples must lie in [1, 100000]");
    cfg.validation_samples = static_cast<int>(m);
  }
  if (const auto* line = take("validation.seed"))
    cfg.seed = static_cast<std::uint64_t>(detail::parse_int("validation.seed", *line));
  if (const auto* line = take("analysis.epsilon")) {
    cfg.epsilon = detail::parse_double("analysis.epsilon", *line);
    if (!(cfg.epsilon > 0.0)) throw ConfigError("analysis.epsilon must be positive");
  }
  if (const auto* line = take("analysis.fit_lo")) {
    const long v = detail::parse_int("analysis.fit_lo", *line);
    if (v < 0) throw ConfigError("analysis.fit_lo must be >= 0");
    cfg.fit_lo = static_cast<std::size_t>(v);
  }
  if (const auto* line = take("analysis.fit_hi")) {
    const long v = detail::parse_int("analysis.fit_hi", *line);
    if (v < 0) throw ConfigError("analysis.fit_hi must be >= 0");
    cfg.fit_hi = static_cast<std::size_t>(v);
  }
  if (cfg.fit_lo > 0 && cfg.fit_hi > 0 && cfg.fit_lo >= cfg.fit_hi)
    throw ConfigError("analysis.fit_lo must be smaller than analysis.fit_hi");

  cfg.output_directory = require("output.directory").value;
  if (const auto* line = take("output.emit_svg")) cfg.emit_svg = detail::parse_bool("output.emit_svg", *line);
  if (const auto* line = take("output.dump_vectors"))
    cfg.dump_vectors = detail::parse_bool("output.dump_vectors", *line);
  return cfg;
}

inline std::uint64_t fnv1a_hash(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace sparse_saddle
