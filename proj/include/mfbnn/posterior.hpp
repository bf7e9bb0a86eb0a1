#pragma once

#include <string>
#include <vector>

#include "mfbnn/autodiff.hpp"
#include "mfbnn/data.hpp"
#include "mfbnn/mlp.hpp"
#include "mfbnn/physics.hpp"

namespace mfbnn {

/// Zero-mean Gaussian prior with one shared scale sigma:
/// coordinate i has stddev sigma * factor_i when tied, factor_i otherwise.
struct GaussianPrior {
  Vector factor;
  std::vector<bool> tied;

  Index dim() const { return factor.size(); }
  Vector stddev(double sigma) const;
  ad::Var log_density(ad::Var state, ad::Var log_sigma) const;
  double log_density(const Vector& state, double sigma) const;
};

/// BNN prior: weights of layer l ~ N(0, (sigma / sqrt(N_l))^2), biases ~ N(0, 1),
/// unknown PDE constants ~ N(0, 1) independent of sigma.
struct PriorSpec {
  double sigma = 1.0;
  MlpSpec bnn;
  Index n_unknowns = 0;

  double weight_scale(int layer) const;
  double bias_scale(int /*layer*/) const { return 1.0; }
  /// The sigma-tied layout behind these scales (sigma itself is not stored there).
  GaussianPrior layout() const;
};

/// log P(state) + log P(D | state) with a learnable prior scale; the target of VI.
class LogJoint {
 public:
  virtual ~LogJoint() = default;
  virtual Index dim() const = 0;
  virtual ad::Var log_joint(ad::Tape& tape, ad::Var state, ad::Var log_sigma) const = 0;
};

/// Unnormalized log-posterior of the multi-fidelity BNN: the state vector is
/// the flat BNN parameters followed by the unknown PDE constants.
class BnnPosterior final : public LogJoint {
 public:
  BnnPosterior(ProblemSpec problem, SurrogateComposition comp, const BiFidelityDataset& data);

  Index dim() const override { return n_params_ + n_unknowns_; }
  Index param_dim() const { return n_params_; }
  Index unknown_dim() const { return n_unknowns_; }
  const ProblemSpec& problem() const { return problem_; }
  const SurrogateComposition& composition() const { return comp_; }

  PriorSpec prior(double sigma) const { return {sigma, comp_.bnn(), n_unknowns_}; }

  ad::Var log_likelihood(ad::Tape& tape, ad::Var state) const;
  ad::Var log_joint(ad::Tape& tape, ad::Var state, ad::Var log_sigma) const override;

  /// Value and gradient with a fixed prior scale. Throws NumericalError naming
  /// the offending term if anything is non-finite.
  double log_posterior(const Vector& state, double sigma, Vector* grad) const;

 private:
  struct Block {
    CompositionInputs prepared;
    Vector y;
    Vector half_precision;  // 1 / (2 sigma_i^2)
    double log_norm = 0.0;  // -sum 0.5 log(2 pi sigma_i^2)
    bool empty() const { return y.size() == 0; }
  };

  ad::Var block_log_likelihood(ad::Tape& tape, const Block& block, ad::Var prediction) const;

  ProblemSpec problem_;
  SurrogateComposition comp_;
  GaussianPrior prior_layout_;
  Index n_params_;
  Index n_unknowns_;
  Block u_;
  Block f_;
  Block b_;
};

}  // namespace mfbnn
