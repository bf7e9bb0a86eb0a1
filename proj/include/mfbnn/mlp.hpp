#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mfbnn/autodiff.hpp"
#include "mfbnn/types.hpp"

namespace mfbnn {

/// Fully connected tanh network topology: widths [N_0, N_1, ..., N_L, 1].
struct MlpSpec {
  std::vector<int> widths;

  void validate() const;
  int input_dim() const { return widths.front(); }
  int hidden_layers() const { return static_cast<int>(widths.size()) - 2; }
  /// Number of affine maps (hidden layers + output layer).
  int layers() const { return static_cast<int>(widths.size()) - 1; }
  std::string to_string() const;
  static MlpSpec parse(const std::string& text);

  bool operator==(const MlpSpec&) const = default;
};

/// Position of one affine map inside the flat parameter vector.
/// Weights are stored row-major (out x in), followed by the bias (out).
struct LayerSlot {
  Index weight_offset;
  Index out;
  Index in;
  Index bias_offset;
};

std::vector<LayerSlot> layer_layout(const MlpSpec& spec);
Index param_count(const MlpSpec& spec);

class MlpParams {
 public:
  MlpParams(MlpSpec spec, Vector flat);

  const MlpSpec& spec() const { return spec_; }
  const Vector& flat() const { return flat_; }
  Index size() const { return flat_.size(); }

  Eigen::Map<const RowMatrix> weight(int layer) const;
  Eigen::Map<const Vector> bias(int layer) const;
  double weight_norm_squared() const;

  bool operator==(const MlpParams& o) const { return spec_ == o.spec_ && flat_ == o.flat_; }

 private:
  MlpSpec spec_;
  Vector flat_;
  std::vector<LayerSlot> layout_;
};

/// Xavier-uniform weights (U(-a, a), a = sqrt(6 / (fan_in + fan_out))), zero biases.
MlpParams init_params(const MlpSpec& spec, std::uint64_t seed);
/// Xavier-uniform half width for one layer.
double xavier_limit(Index fan_in, Index fan_out);

Vector flatten(const MlpParams& params);
MlpParams unflatten(const MlpSpec& spec, const Vector& flat);

/// Scalar output at a single input point.
double mlp_forward(const MlpParams& params, const Vector& x);
/// Outputs for each row of `inputs` (N x N_0).
Vector mlp_forward_batch(const MlpParams& params, const Matrix& inputs);

/// Directional derivative seed at every input row: the path z(t) through input
/// space has velocity `first` and acceleration `second` (both N x N_0). An
/// empty `second` means zero acceleration. For plain coordinate derivatives
/// `first` is a unit vector per row.
struct InputSeed {
  Matrix first;
  Matrix second;
};

/// Coordinate seed e_i for every row of an N-point batch.
InputSeed coordinate_seed(Index n_points, Index dim, Index coordinate);

/// Network values with first and second directional derivatives along each seed.
struct Jets {
  Vector value;
  std::vector<Vector> d1;
  std::vector<Vector> d2;
};

/// order 0, 1 or 2. Throws ConfigError for anything else.
Jets mlp_jets(const MlpParams& params, const Matrix& inputs, std::span<const InputSeed> seeds, int order);

/// Same computation as mlp_jets recorded on a tape, so that every output is
/// differentiable with respect to the parameters.
struct TapeJets {
  ad::Var value;
  std::vector<ad::Var> d1;
  std::vector<ad::Var> d2;
};

/// Binds weight and bias nodes as slices of a flat parameter node.
struct NetVars {
  std::vector<ad::Var> weights;
  std::vector<ad::Var> biases;
};

NetVars bind_params(ad::Var flat, const MlpSpec& spec, Index offset = 0);
TapeJets mlp_jets(const NetVars& net, const Matrix& inputs, std::span<const InputSeed> seeds, int order);

/// Value, parameter gradient of the value, and coordinate input derivatives at one point.
struct DiffResult {
  double value = 0.0;
  Vector grad_params;
  Vector du_dx;
  Vector d2u_dx2;
};

DiffResult input_derivatives(const MlpParams& params, const Vector& x, int order);

/// Binary parameter snapshot; see docs/formats.md.
void save_snapshot(const std::filesystem::path& path, const MlpParams& params, const std::string& extra_json = "{}");
MlpParams load_snapshot(const std::filesystem::path& path);

}  // namespace mfbnn
