#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "mfbnn/posterior.hpp"

namespace mfbnn {

/// Mean-field Gaussian Q: coordinate i has mean mu_i and stddev softplus(rho_i).
struct VariationalParams {
  Vector mu;
  Vector rho;

  Index dim() const { return mu.size(); }
  Vector stddev() const;
  /// rho giving stddev s.
  static double rho_for(double s);
  /// theta = mu + softplus(rho) * eps.
  Vector draw(const Vector& eps) const;
};

struct ViConfig {
  long steps = 200000;
  double learning_rate = 1e-3;
  /// Exponential decay lr * decay_factor^(step / steps); off unless set.
  bool decay = false;
  double decay_factor = 0.1;
  int n_mc = 1;
  double init_std = 0.05;
  double sigma_init = 1.0;
  bool learn_sigma = true;
  long log_every = 100;
  /// Starting mean; a fresh Xavier draw (zeros for any extra coordinates) when unset.
  std::optional<Vector> init_mean;
  double sigma_min = 1e-3;
  double sigma_max = 1e3;

  void validate() const;
};

/// Objective averaged over the last `log_every` steps.
struct ViTraceRecord {
  long step;
  double objective;
  double sigma;
};

struct ViResult {
  double sigma;
  VariationalParams q;
  std::vector<ViTraceRecord> trace;
};

/// Monte-Carlo estimate of E_Q[log Q - log P(theta) - log P(D | theta)] (the negated ELBO).
double elbo_estimate(const LogJoint& target, const VariationalParams& q, double sigma, int n_mc, std::uint64_t seed);

struct ElboGradient {
  double objective = 0.0;
  Vector d_mu;
  Vector d_rho;
  double d_log_sigma = 0.0;
};

/// Reparameterized single-draw objective and its gradient for the given noise eps.
ElboGradient elbo_gradient(const LogJoint& target, const VariationalParams& q, double log_sigma, const Vector& eps);

/// Adam on (mu, rho, log sigma). Throws NumericalError if sigma leaves [sigma_min, sigma_max].
/// `bnn` supplies the Xavier initial mean when config.init_mean is unset.
ViResult fit_vi(const LogJoint& target, const std::optional<MlpSpec>& bnn, const ViConfig& config,
                std::uint64_t seed);

void write_vi_csv(const std::filesystem::path& path, const std::vector<ViTraceRecord>& trace);

}  // namespace mfbnn
