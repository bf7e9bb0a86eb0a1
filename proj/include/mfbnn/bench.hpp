#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mfbnn/active.hpp"
#include "mfbnn/config.hpp"
#include "mfbnn/pipeline.hpp"

namespace mfbnn {

/// Accuracy of one fitted model against the generator's exact solution.
struct RunMetrics {
  std::string variant;
  Index eval_points = 0;
  std::optional<double> rmse_u;
  std::optional<double> picp_u;
  std::optional<double> rmse_f;
  std::optional<double> picp_f;
  std::vector<LambdaSummary> lambdas;
  double sigma = 0.0;
  double acceptance = 0.0;
  double final_step = 0.0;
};

struct RunOutcome {
  RunMetrics metrics;
  MbnnResult result;
  BiFidelityDataset data;
};

/// Dataset for a run: generated from the config's generator spec, or loaded from CSV.
BiFidelityDataset make_dataset(const RunConfig& config);
/// Evaluation points: the dense grid, or eval_points uniform random points.
Matrix evaluation_points(const RunConfig& config);

/// Runs the full pipeline for a non-active config and writes, under config.output:
/// predictions.csv, predictions_f.csv (inverse), lambdas.csv (inverse), metrics.csv
/// (generator data), samples.bin, lowfi.snap, map_log.csv, vi_log.csv, manifest.json.
RunOutcome run_experiment(const RunConfig& config);

/// Active loop for an active-mode config; writes active.csv, round_<r>/ and manifest.json under config.output.
ActiveState run_active_experiment(const RunConfig& config);

/// Run manifest: resolved config, its hash, seeds, profile, sigma, acceptance, conventions.
void write_manifest(const std::filesystem::path& path, const RunConfig& config, const std::vector<RunMetrics>& runs,
                    const std::vector<ActiveRecord>* history = nullptr);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<RunMetrics>& rows);
void print_metrics(std::ostream& os, const std::vector<RunMetrics>& rows);

const std::vector<std::string>& bench_suites();

/// Config a suite runs with (the multi-fidelity or active variant).
RunConfig bench_config(const std::string& suite, Profile profile, std::uint64_t seed,
                       const std::filesystem::path& output);

struct BenchReport {
  std::string suite;
  std::vector<RunMetrics> rows;
  std::optional<ActiveState> active;
};

/// Reproduction suites fn1d, fn4d, inv1d, inv2d, active-fn and active-inv. The function suites
/// also run the single-fidelity ablation. Unknown names throw ConfigError.
BenchReport run_bench(const std::string& suite, Profile profile, std::uint64_t seed,
                      const std::filesystem::path& output, std::ostream& log);

}  // namespace mfbnn
