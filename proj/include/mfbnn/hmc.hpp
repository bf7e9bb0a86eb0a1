#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mfbnn/types.hpp"

namespace mfbnn {

/// Log target density; fills *grad with its gradient when grad is non-null.
using LogDensityFn = std::function<double(const Vector& state, Vector* grad)>;

struct HmcConfig {
  long burn_in = 10000;
  double initial_step = 0.1;
  int leapfrog_steps = 50;
  long samples = 1000;
  double target_accept = 0.75;
  /// Keep every thin-th post-burn-in state.
  long thin = 1;
  /// Per-trajectory step drawn uniformly from step * [1 - jitter, 1 + jitter].
  double step_jitter = 0.0;
  bool adapt = true;
  double min_acceptance = 0.05;
  double max_divergence_fraction = 0.1;

  void validate() const;
};

struct PhasePoint {
  Vector theta;
  Vector momentum;
  double log_density = 0.0;
  Vector grad;
};

struct LeapfrogResult {
  PhasePoint end;
  bool divergent = false;
};

/// n_steps of half-kick / drift / half-kick with identity mass. `start` must
/// carry the log density and gradient at start.theta.
LeapfrogResult leapfrog(const PhasePoint& start, double step, int n_steps, const LogDensityFn& target);
/// Convenience form evaluating the starting gradient itself.
LeapfrogResult leapfrog(const Vector& theta, const Vector& momentum, double step, int n_steps,
                        const LogDensityFn& target);

/// H = -log p(theta) + |p|^2 / 2.
double hamiltonian(const PhasePoint& z);

struct Chain {
  /// One retained state per row.
  Matrix states;
  double acceptance_rate = 0.0;
  double burn_in_acceptance = 0.0;
  double final_step = 0.0;
  long divergences = 0;
  long burn_in_divergences = 0;
};

/// Burn-in with dual-averaging step adaptation (frozen afterwards), then
/// `samples` retained states. Throws NumericalError if post-burn-in acceptance
/// is below min_acceptance or divergences exceed max_divergence_fraction.
Chain sample(const HmcConfig& config, const LogDensityFn& target, const Vector& init, std::uint64_t seed);

/// Posterior draws split into network parameters and unknown PDE constants.
struct PosteriorSamples {
  Matrix thetas;
  Matrix lambdas;
  std::vector<std::string> lambda_names;
  double acceptance_rate = 0.0;
  double final_step = 0.0;
  long divergences = 0;

  Index count() const { return thetas.rows(); }
};

PosteriorSamples split_chain(const Chain& chain, Index n_params, std::vector<std::string> lambda_names);

/// Binary archive of the M states with a JSON header (see docs/formats.md).
/// `extra_json` must be a JSON object and is stored under "extra".
void save_samples(const std::filesystem::path& path, const PosteriorSamples& samples,
                  const std::string& extra_json = "{}");
PosteriorSamples load_samples(const std::filesystem::path& path, std::string* extra_json = nullptr);

}  // namespace mfbnn
