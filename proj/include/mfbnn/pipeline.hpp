#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mfbnn/data.hpp"
#include "mfbnn/hmc.hpp"
#include "mfbnn/lowfi_map.hpp"
#include "mfbnn/physics.hpp"
#include "mfbnn/posterior.hpp"
#include "mfbnn/vi.hpp"

namespace mfbnn {

enum class HmcInit { ViMean, PriorDraw };

struct MbnnConfig {
  ProblemSpec problem;
  /// false: single-fidelity ablation (BNN sees x only, LF stage skipped).
  bool multi_fidelity = true;
  /// Hidden widths of the low-fidelity DNN.
  std::vector<int> lowfi_hidden = {20, 20};
  std::vector<int> bnn_hidden = {50};
  MapConfig map;
  ViConfig vi;
  /// When set, VI is skipped and this prior scale is used directly.
  std::optional<double> fixed_sigma;
  HmcConfig hmc;
  HmcInit hmc_init = HmcInit::ViMean;
  std::uint64_t seed = 0;
  /// Artifacts (lowfi.snap, map_log.csv, vi_log.csv, samples.bin) go here when set.
  std::optional<std::filesystem::path> output_dir;
  /// Frozen surrogate from an earlier run; skips MAP training.
  std::optional<LowFiSurrogate> reuse_lowfi;

  void validate() const;
};

struct MbnnResult {
  std::optional<LowFiSurrogate> lowfi;
  std::optional<double> map_final_loss;
  double sigma = 0.0;
  std::optional<ViResult> vi;
  SurrogateComposition composition;
  PosteriorSamples samples;
};

/// Stages in order: MAP fit of the low-fidelity DNN, VI for the
/// prior scale, HMC, (prediction via Predictor). Failures surface as
/// StageError naming "map", "vi" or "hmc".
MbnnResult run_mbnn(const MbnnConfig& config, const BiFidelityDataset& data);

/// Per-point posterior predictive summary over the stored samples
/// (population standard deviation, epistemic only).
struct PredictionTable {
  Matrix x;
  Vector mean;
  Vector std;
  Index samples_used = 0;
};

struct LambdaSummary {
  std::string name;
  double mean = 0.0;
  double std = 0.0;
};

class Predictor {
 public:
  Predictor(ProblemSpec problem, SurrogateComposition composition, PosteriorSamples samples);

  const PosteriorSamples& samples() const { return samples_; }
  const SurrogateComposition& composition() const { return comp_; }
  const ProblemSpec& problem() const { return problem_; }

  PredictionTable predict(const Matrix& xs) const;
  /// Forcing term f~ per sample through the differential operator; inverse problems only.
  PredictionTable predict_f(const Matrix& xs) const;
  std::vector<LambdaSummary> lambdas() const;

 private:
  ProblemSpec problem_;
  SurrogateComposition comp_;
  PosteriorSamples samples_;
};

/// Mean and population standard deviation of each column of `values` (rows are samples).
void column_moments(const Matrix& values, Vector& mean, Vector& std);

/// Columns x (1D) or x1..xd, then mean, std.
void write_prediction_csv(const std::filesystem::path& path, const PredictionTable& table);
/// Columns name, mean, std.
void write_lambda_csv(const std::filesystem::path& path, const std::vector<LambdaSummary>& lambdas);
/// Rows of query points from a CSV whose header names x (1D) or x1..xd.
Matrix read_query_csv(const std::filesystem::path& path);

/// Stable text form of a double for manifests and metric tables.
std::string format_double(double v);

}  // namespace mfbnn
