#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfbnn/autodiff.hpp"
#include "mfbnn/data.hpp"
#include "mfbnn/lowfi_map.hpp"
#include "mfbnn/mlp.hpp"

namespace mfbnn {

enum class ProblemKind { Regression, DiffusionReaction1D, DiffusionReaction2D };

std::string to_string(ProblemKind k);

/// Which operator links u to the f/b sensors, its fixed constants and the unknowns.
///   1D: c_xx * u_xx - (k * c_adv) * u * u_x = f on [0, 1]
///   2D: lambda * (u_xx + u_yy) - k * u^2 = f on [-1, 1]^2
struct ProblemSpec {
  ProblemKind kind = ProblemKind::Regression;
  Domain domain;
  std::vector<std::string> unknowns;
  double c_xx = 0.0;
  double c_adv = 0.0;
  double lambda = 0.0;

  static ProblemSpec regression(Domain domain);
  static ProblemSpec diffusion_reaction_1d();
  static ProblemSpec diffusion_reaction_2d();

  bool is_inverse() const { return kind != ProblemKind::Regression; }
  Index space_dim() const { return domain.dim(); }
  void validate() const;
};

/// u, its gradient and the diagonal of its Hessian at one point.
struct FieldJet {
  double u = 0.0;
  Vector du;
  Vector d2u;
};

/// Operator applied to a field jet (no networks involved).
double residual(const ProblemSpec& problem, const FieldJet& jet, std::span<const double> unknowns);

/// Same operator on tape nodes; u, du[i], d2u[i] are N x 1 and every unknown is 1 x 1.
ad::Var residual(const ProblemSpec& problem, ad::Var u, std::span<const ad::Var> du, std::span<const ad::Var> d2u,
                 std::span<const ad::Var> unknowns);

/// BNN inputs and seeds for a batch of physical points, with the frozen
/// low-fidelity surrogate folded in.
struct CompositionInputs {
  Matrix inputs;
  /// One seed per physical coordinate (empty when order == 0).
  std::vector<InputSeed> seeds;
};

/// u_H(x) = B(x, u_L(x); theta). Without a low-fidelity surrogate the BNN sees x only.
/// Total derivatives include the path through u_L:
///   du_H/dx_i   = dB/dx_i + dB/du_L * du_L/dx_i
///   d2u_H/dx_i2 = z'^T H_B z' + dB/du_L * d2u_L/dx_i2, z' = (e_i, du_L/dx_i)
class SurrogateComposition {
 public:
  SurrogateComposition(std::optional<LowFiSurrogate> lowfi, MlpSpec bnn, Index space_dim);

  /// Picks the BNN width for a given hidden-layer list.
  static MlpSpec bnn_spec(Index space_dim, bool multi_fidelity, const std::vector<int>& hidden);

  bool multi_fidelity() const { return lowfi_.has_value(); }
  const std::optional<LowFiSurrogate>& lowfi() const { return lowfi_; }
  const MlpSpec& bnn() const { return bnn_; }
  Index space_dim() const { return space_dim_; }

  CompositionInputs prepare(const Matrix& xs, int order) const;
  /// Total value and coordinate derivatives of u_H for one parameter vector.
  Jets evaluate(const MlpParams& bnn_params, const Matrix& xs, int order) const;
  Jets evaluate(const MlpParams& bnn_params, const CompositionInputs& prepared, int order) const;

 private:
  std::optional<LowFiSurrogate> lowfi_;
  MlpSpec bnn_;
  Index space_dim_;
};

/// f~ at x for the 1D operator.
double residual_1d(const SurrogateComposition& comp, const MlpParams& bnn_params, double k, double x);
/// f~ at (x, y) for the 2D operator.
double residual_2d(const SurrogateComposition& comp, const MlpParams& bnn_params, double k, double x, double y);
/// Dirichlet value u_H(x_b); throws ConfigError if x_b is not on the domain boundary.
double boundary_value(const SurrogateComposition& comp, const MlpParams& bnn_params, const Domain& domain,
                      const Vector& x_b);

/// f~ at each row of xs (inverse problems only).
Vector residual_batch(const ProblemSpec& problem, const SurrogateComposition& comp, const MlpParams& bnn_params,
                      std::span<const double> unknowns, const CompositionInputs& prepared);

}  // namespace mfbnn
