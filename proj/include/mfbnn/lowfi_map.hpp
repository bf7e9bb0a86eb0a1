#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mfbnn/data.hpp"
#include "mfbnn/mlp.hpp"

namespace mfbnn {

struct MapConfig {
  double learning_rate = 1e-3;
  long steps = 50000;
  /// L2 weight on the network weights. Unset means mean(sigma^2) / N_L of the data.
  std::optional<double> alpha;
  /// Exponential decay lr * decay_factor^(step / steps); off unless set.
  bool decay = false;
  double decay_factor = 0.1;
  /// 0 means full batch.
  Index batch_size = 0;
  long log_every = 100;

  void validate() const;
};

/// Frozen low-fidelity network u_L(x).
class LowFiSurrogate {
 public:
  explicit LowFiSurrogate(MlpParams params);

  const MlpParams& params() const { return params_; }
  const MlpSpec& spec() const { return params_.spec(); }
  Index input_dim() const { return params_.spec().input_dim(); }

  Vector value(const Matrix& xs) const;
  /// Value and coordinate derivatives (order <= 2).
  Jets jets(const Matrix& xs, int order) const;

 private:
  MlpParams params_;
};

struct LossRecord {
  long step;
  double loss;
};

struct MapResult {
  LowFiSurrogate surrogate;
  double alpha;
  double initial_loss;
  double final_loss;
  std::vector<LossRecord> log;
};

/// mean(sigma_i^2) / N, zero for noise-free data.
double default_alpha(const SensorSet& lofi);

/// (1/N) sum |u_L - net(x)|^2 + alpha * |weights|^2 (biases are not penalized).
double map_loss(const MlpParams& params, const SensorSet& lofi, double alpha);

MapResult train_map(const MlpSpec& spec, const SensorSet& lofi, const MapConfig& config, std::uint64_t seed);

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& log);

}  // namespace mfbnn
