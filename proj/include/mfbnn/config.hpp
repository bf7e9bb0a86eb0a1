#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfbnn/data.hpp"
#include "mfbnn/pipeline.hpp"

namespace mfbnn {

enum class Profile { Desk, Paper };
enum class RunMode { Mbnn, Single, Active };

Profile parse_profile(const std::string& name);
std::string to_string(Profile p);
RunMode parse_mode(const std::string& name);
std::string to_string(RunMode m);

struct ActiveConfig {
  int max_rounds = 10;
  /// Variance threshold of the stopping rule.
  double threshold = 0.0025;
  bool stop_rule = true;
  /// Points of the uniform candidate grid (per axis: round(candidates^(1/d))).
  Index candidates = 1000;

  void validate() const;
};

/// Where the data come from when `problem = csv`.
struct CsvSource {
  ProblemKind kind = ProblemKind::Regression;
  /// Regression domain; inverse kinds use their fixed domains.
  Domain domain;
  BiFidelityPaths paths;
};

/// Everything a run needs, resolved from profile defaults plus explicit keys.
struct RunConfig {
  /// Generator name, or "csv".
  std::string problem = "fn1d-sinsq";
  Profile profile = Profile::Desk;
  RunMode mode = RunMode::Mbnn;
  std::uint64_t seed = 0;
  std::filesystem::path output = "out";

  GeneratorSpec data;
  /// Set when data.seed was given explicitly; otherwise derived from the master seed.
  std::optional<std::uint64_t> data_seed;
  std::optional<CsvSource> csv;

  std::vector<int> lowfi_hidden = {20, 20};
  std::vector<int> bnn_hidden = {50};
  MapConfig map;
  ViConfig vi;
  std::optional<double> fixed_sigma;
  HmcConfig hmc;
  HmcInit hmc_init = HmcInit::ViMean;
  ActiveConfig active;

  /// Dense evaluation grid, points per axis (used when eval_points == 0).
  Index eval_grid = 1000;
  /// Uniform random test points; 0 selects the grid.
  Index eval_points = 0;

  bool is_csv() const { return csv.has_value(); }
  Generator generator() const;
  ProblemSpec problem_spec() const;
  GeneratorSpec generator_spec() const;
  MbnnConfig mbnn_config() const;
  void validate() const;
};

using KeyValues = std::map<std::string, std::string>;

/// `key = value` lines; '#' starts a comment; blank lines ignored.
/// Duplicate keys and lines without '=' are errors reported with the line number.
KeyValues parse_key_values(const std::string& text, const std::string& origin = "config");
KeyValues read_key_values(const std::filesystem::path& path);

/// Profile and problem defaults first, then every explicit key. Unknown keys are errors.
RunConfig build_run_config(const KeyValues& kv);
/// Defaults for a problem under a profile, with mode-specific settings applied.
RunConfig default_run_config(const std::string& problem, Profile profile, RunMode mode = RunMode::Mbnn);

/// Every resolved key in canonical order; feeding it back to build_run_config reproduces the config.
KeyValues to_key_values(const RunConfig& config);
std::string to_text(const KeyValues& kv);
/// FNV-1a 64 of the canonical text, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace mfbnn
