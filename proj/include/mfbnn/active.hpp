#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfbnn/config.hpp"
#include "mfbnn/pipeline.hpp"

namespace mfbnn {

/// Index of the largest variance; the smallest index wins ties.
Index acquire(const Vector& variances);

/// True iff the largest variance is below the threshold. An empty set stops (with a warning on stderr).
bool should_stop(const Vector& variances, double threshold);

/// Truth source for new high-fidelity observations.
struct Oracle {
  std::function<double(const Vector&)> u;
  /// Forcing term; required for inverse problems.
  std::function<double(const Vector&)> f;
  double u_noise = 0.01;
  double f_noise = 0.01;
  std::uint64_t seed = 0;

  /// Truth plus N(0, noise^2). The draw depends only on (seed, round, which).
  double observe_u(const Vector& x, int round) const;
  double observe_f(const Vector& x, int round) const;
};

Oracle generator_oracle(Generator g, const GeneratorSpec& spec, std::uint64_t seed);

struct ActiveRecord {
  int round = 0;
  std::uint64_t round_seed = 0;
  Index n_hifi = 0;
  double sigma = 0.0;
  double max_var = 0.0;
  /// Aggregate error (1/N) sqrt(sum residual^2) over the candidate grid.
  double error_u = 0.0;
  std::optional<double> error_f;
  double rmse_u = 0.0;
  std::optional<double> max_var_f;
  std::vector<LambdaSummary> lambdas;
  /// Empty when the round stopped before acquiring.
  std::optional<Vector> x_star;
  std::optional<Vector> x_star_f;
  bool stopped = false;
};

struct ActiveState {
  int round = 0;
  BiFidelityDataset dataset;
  std::vector<ActiveRecord> history;
  std::optional<LowFiSurrogate> lowfi;
  /// Set when the oracle failed; history up to that round is kept.
  std::optional<std::string> error;
};

struct ActiveSetup {
  MbnnConfig mbnn;
  ActiveConfig active;
  /// Uniform candidate grid over the problem domain.
  Matrix candidates;
  /// Per-round CSV written after every round when set; round artifacts go to round_<r>/ next to it.
  std::optional<std::filesystem::path> log_csv;
};

/// Uniform grid with about `count` points: round(count^(1/d)) per axis.
Matrix candidate_grid(const Domain& domain, Index count);

/// Per round: VI, HMC and prediction with the low-fidelity surrogate reused, metrics on the
/// candidate grid, the stopping rule, acquisition of one u point (and one f point for inverse
/// problems) at the variance maximizers, and an oracle query.
ActiveState run_active(const ActiveSetup& setup, const BiFidelityDataset& initial, const Oracle& oracle);

/// Columns round,x_star,max_var,E_u,E_f,k_mean,k_std,x_star_f,n_hifi,rmse_u,sigma,stopped.
void write_active_csv(const std::filesystem::path& path, const std::vector<ActiveRecord>& history, Index dim);

}  // namespace mfbnn
