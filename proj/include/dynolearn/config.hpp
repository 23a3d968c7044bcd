#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dynolearn/learnability.hpp"
#include "dynolearn/systems.hpp"

namespace dynolearn {

// One value of the experiment config format: a number (kept as its source
// text so 64-bit integers survive), a string, a boolean or a list.
struct ConfigValue {
  enum class Kind { number, string, boolean, list };
  Kind kind = Kind::string;
  std::string text;  // number or string payload
  bool flag = false;
  std::vector<ConfigValue> items;

  static ConfigValue number(std::string text);
  static ConfigValue string(std::string text);
  static ConfigValue boolean(bool b);
  static ConfigValue list(std::vector<ConfigValue> items);

  double as_double() const;
  std::uint64_t as_u64() const;
  std::size_t as_count() const;
  const std::string& as_string() const;
  bool as_bool() const;
  std::vector<double> as_doubles() const;  // scalar promotes to a one-element list
  std::vector<std::size_t> as_counts() const;
  std::vector<std::string> as_strings() const;
  Matrix as_matrix() const;  // nested lists; a scalar or flat list is one row

  std::string render() const;
  friend bool operator==(const ConfigValue&, const ConfigValue&) = default;
};

ConfigValue parse_config_value(const std::string& text);

// Flat `[section]` / `key = value` document. Keys before any section header
// live in section "experiment". Lines starting with '#' are comments.
class ConfigDocument {
 public:
  static ConfigDocument parse(const std::string& text);

  void set(const std::string& section, const std::string& key, ConfigValue value);
  // "section.key=value" as given on the command line.
  void apply_override(const std::string& assignment);
  bool has(const std::string& section, const std::string& key) const;
  const ConfigValue* find(const std::string& section, const std::string& key) const;
  std::string render() const;

  const std::map<std::string, std::map<std::string, ConfigValue>>& sections() const { return sections_; }

 private:
  std::map<std::string, std::map<std::string, ConfigValue>> sections_;
};

struct ExperimentConfig {
  SystemSpec system = LdsSpec{};
  PredictorConfig predictor;
  OracleKind oracle = OracleKind::kalman;
  HarnessConfig harness;
  std::size_t simulate_horizon = 0;  // 0 = harness horizon
  bool record_latent = true;
  std::vector<double> epsilons{0.05};
  bool epsilon_relative = true;  // scale epsilons by the stationary signal power
  std::vector<std::size_t> m_values{1, 2, 4, 8, 12, 16, 20};
  std::vector<PredictorConfig> baselines;
  std::size_t reference_multiplier = 10;
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  // Defaults: scalar symmetric LDS a=0.9, σ_w=σ_v=0.1, spectral T_w=100 m=15.
  static ExperimentConfig defaults();
};

// Builds a config from a document, filling unspecified keys with defaults.
// Throws ConfigError on syntax or type problems and InvariantViolation /
// ContractViolation when a value breaks a module invariant.
ExperimentConfig build_config(const ConfigDocument& doc);
ConfigDocument to_document(const ExperimentConfig& config);

// Canonical text of a config; parse(render(c)) reproduces c exactly.
std::string render_config(const ExperimentConfig& config);
std::uint64_t config_digest(const ExperimentConfig& config);

// "ar:5", "last_value", "zero", "spectral", ...
PredictorConfig parse_baseline(const std::string& text);
std::string baseline_name(const PredictorConfig& config);

}  // namespace dynolearn
