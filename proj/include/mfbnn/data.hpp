#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfbnn/types.hpp"

namespace mfbnn {

/// Axis-aligned box.
struct Domain {
  Vector lower;
  Vector upper;

  Index dim() const { return lower.size(); }
  bool contains(const Vector& x, double tol = 1e-12) const;
  bool on_boundary(const Vector& x, double tol = 1e-9) const;
  /// n equally spaced points per axis (tensor grid), rows are points.
  Matrix grid(Index per_axis) const;
};

/// Noisy scattered observations: one row of `x` per sensor.
struct SensorSet {
  Matrix x;
  Vector y;
  Vector sigma;

  Index size() const { return y.size(); }
  bool empty() const { return y.size() == 0; }
  void append(const Vector& at, double value, double noise);
  static SensorSet with_dim(Index dim);
};

/// Low-fidelity points plus the three high-fidelity sensor classes.
struct BiFidelityDataset {
  Index dim = 0;
  SensorSet lofi;
  SensorSet hifi_u;
  SensorSet hifi_f;
  SensorSet hifi_b;

  static BiFidelityDataset with_dim(Index dim);
  /// Shapes agree, high-fidelity noise scales are > 0, low-fidelity scales >= 0,
  /// and (when a domain is given) every location lies inside it.
  void validate(const Domain* domain = nullptr) const;
  Index hifi_count() const { return hifi_u.size() + hifi_f.size() + hifi_b.size(); }
};

enum class Generator { Fn1dSinSq, Fn1dBias, Fn4d, Inv1d, Inv2d };
/// Stratified: Latin hypercube, one point per stratum along every axis, jittered within it.
enum class Layout { Uniform, Random, Stratified };

Generator parse_generator(const std::string& name);
std::string to_string(Generator g);
Layout parse_layout(const std::string& name);
std::string to_string(Layout l);

struct GeneratorSpec {
  Generator name = Generator::Fn1dSinSq;
  double lofi_noise = 0.0;
  double hifi_noise = 0.01;
  double f_noise = 0.01;
  Index n_lofi = 100;
  Index n_hifi_u = 14;
  Index n_hifi_f = 0;
  /// Boundary u-sensors: total count for 1D problems, count per side for 2D.
  Index n_boundary = 0;
  Layout lofi_layout = Layout::Uniform;
  Layout hifi_layout = Layout::Uniform;
  std::uint64_t seed = 0;
  /// Overrides for the interior high-fidelity locations (rows are points).
  std::optional<Matrix> hifi_u_at;
  std::optional<Matrix> hifi_f_at;

  void validate() const;
};

/// Settings used in the reported experiments for each generator.
GeneratorSpec default_generator_spec(Generator g);

/// Ground truth behind a generator.
struct ExactSolution {
  Domain domain;
  std::function<double(const Vector&)> u_high;
  std::function<double(const Vector&)> u_low;
  /// Forcing term for inverse problems, empty otherwise.
  std::function<double(const Vector&)> f;
  /// True values of the unknown PDE constants.
  std::vector<double> unknowns;
};

ExactSolution exact_solution(Generator g);
BiFidelityDataset generate(const GeneratorSpec& spec);

/// Draws `n` points from the domain with the given layout.
Matrix sample_locations(const Domain& domain, Index n, Layout layout, std::uint64_t seed);

/// Fraction of points with exact in [mean - 2 std, mean + 2 std].
double picp(std::span<const double> exact, std::span<const double> mean, std::span<const double> std);
/// (1/N) * sqrt(sum |exact - pred|^2).
double error_E(std::span<const double> exact, std::span<const double> pred);
double rmse(std::span<const double> exact, std::span<const double> pred);

/// Comma-separated fields with surrounding whitespace trimmed.
std::vector<std::string> split_csv_line(const std::string& line);

/// CSV with header x1..xd,<value_name>,sigma.
void write_sensor_csv(const std::filesystem::path& path, const SensorSet& set, const std::string& value_name);
SensorSet read_sensor_csv(const std::filesystem::path& path, const std::string& value_name);

struct BiFidelityPaths {
  std::filesystem::path lofi;
  std::filesystem::path hifi_u;
  std::optional<std::filesystem::path> hifi_f;
  std::optional<std::filesystem::path> hifi_b;
};

BiFidelityDataset load_bifidelity_csv(const BiFidelityPaths& paths);

}  // namespace mfbnn
