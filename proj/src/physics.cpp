#include "mfbnn/physics.hpp"

#include <cmath>
#include <numbers>

#include "mfbnn/errors.hpp"

namespace mfbnn {

using std::numbers::pi;

std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::Regression: return "regression";
    case ProblemKind::DiffusionReaction1D: return "diffusion-reaction-1d";
    case ProblemKind::DiffusionReaction2D: return "diffusion-reaction-2d";
  }
  return "?";
}

ProblemSpec ProblemSpec::regression(Domain domain) {
  ProblemSpec p;
  p.kind = ProblemKind::Regression;
  p.domain = std::move(domain);
  return p;
}

ProblemSpec ProblemSpec::diffusion_reaction_1d() {
  ProblemSpec p;
  p.kind = ProblemKind::DiffusionReaction1D;
  p.domain = {Vector::Constant(1, 0.0), Vector::Constant(1, 1.0)};
  p.unknowns = {"k"};
  p.c_xx = 1.0 / (192.0 * pi * pi);
  p.c_adv = 1.0 / (24.0 * pi);
  return p;
}

ProblemSpec ProblemSpec::diffusion_reaction_2d() {
  ProblemSpec p;
  p.kind = ProblemKind::DiffusionReaction2D;
  p.domain = {Vector::Constant(2, -1.0), Vector::Constant(2, 1.0)};
  p.unknowns = {"k"};
  p.lambda = 0.01;
  return p;
}

void ProblemSpec::validate() const {
  if (domain.dim() < 1 || domain.upper.size() != domain.dim()) throw ConfigError("problem: invalid domain");
  for (Index i = 0; i < domain.dim(); ++i)
    if (!(domain.upper[i] > domain.lower[i])) throw ConfigError("problem: empty domain");
  if (is_inverse() == unknowns.empty())
    throw ConfigError("problem: unknown list must be nonempty exactly for inverse problems");
  if (kind == ProblemKind::DiffusionReaction1D && domain.dim() != 1) throw ConfigError("problem: 1D operator on a non-1D domain");
  if (kind == ProblemKind::DiffusionReaction2D && domain.dim() != 2) throw ConfigError("problem: 2D operator on a non-2D domain");
}

double residual(const ProblemSpec& problem, const FieldJet& jet, std::span<const double> unknowns) {
  switch (problem.kind) {
    case ProblemKind::DiffusionReaction1D:
      return problem.c_xx * jet.d2u[0] - unknowns[0] * problem.c_adv * jet.u * jet.du[0];
    case ProblemKind::DiffusionReaction2D:
      return problem.lambda * (jet.d2u[0] + jet.d2u[1]) - unknowns[0] * jet.u * jet.u;
    case ProblemKind::Regression:
      break;
  }
  throw ConfigError("residual: regression problems have no differential operator");
}

ad::Var residual(const ProblemSpec& problem, ad::Var u, std::span<const ad::Var> du, std::span<const ad::Var> d2u,
                 std::span<const ad::Var> unknowns) {
  switch (problem.kind) {
    case ProblemKind::DiffusionReaction1D: {
      const ad::Var k = unknowns[0];
      return ad::scale(d2u[0], problem.c_xx) - ad::scalar_mul(k, ad::scale(ad::mul(u, du[0]), problem.c_adv));
    }
    case ProblemKind::DiffusionReaction2D: {
      const ad::Var k = unknowns[0];
      return ad::scale(d2u[0] + d2u[1], problem.lambda) - ad::scalar_mul(k, ad::square(u));
    }
    case ProblemKind::Regression:
      break;
  }
  throw ConfigError("residual: regression problems have no differential operator");
}

SurrogateComposition::SurrogateComposition(std::optional<LowFiSurrogate> lowfi, MlpSpec bnn, Index space_dim)
    : lowfi_(std::move(lowfi)), bnn_(std::move(bnn)), space_dim_(space_dim) {
  bnn_.validate();
  const Index expected = space_dim_ + (lowfi_ ? 1 : 0);
  if (bnn_.input_dim() != expected)
    throw ConfigError("composition: BNN input width " + std::to_string(bnn_.input_dim()) + ", expected " +
                      std::to_string(expected));
  if (lowfi_ && lowfi_->input_dim() != space_dim_)
    throw ConfigError("composition: low-fidelity network input width does not match the domain");
}

MlpSpec SurrogateComposition::bnn_spec(Index space_dim, bool multi_fidelity, const std::vector<int>& hidden) {
  MlpSpec spec;
  spec.widths.push_back(static_cast<int>(space_dim + (multi_fidelity ? 1 : 0)));
  spec.widths.insert(spec.widths.end(), hidden.begin(), hidden.end());
  spec.widths.push_back(1);
  spec.validate();
  return spec;
}

CompositionInputs SurrogateComposition::prepare(const Matrix& xs, int order) const {
  if (xs.cols() != space_dim_) throw ConfigError("composition: point dimension mismatch");
  if (order < 0 || order > 2) throw ConfigError("composition: derivative order must be 0, 1 or 2");
  const Index n = xs.rows();
  const Index w = bnn_.input_dim();
  CompositionInputs out;
  out.inputs.resize(n, w);
  out.inputs.leftCols(space_dim_) = xs;
  Jets lo;
  if (lowfi_) {
    lo = lowfi_->jets(xs, order);
    out.inputs.col(space_dim_) = lo.value;
  }
  if (order >= 1) {
    for (Index i = 0; i < space_dim_; ++i) {
      InputSeed s = coordinate_seed(n, w, i);
      if (lowfi_) {
        s.first.col(space_dim_) = lo.d1[i];
        if (order == 2) {
          s.second = Matrix::Zero(n, w);
          s.second.col(space_dim_) = lo.d2[i];
        }
      }
      out.seeds.push_back(std::move(s));
    }
  }
  return out;
}

Jets SurrogateComposition::evaluate(const MlpParams& bnn_params, const Matrix& xs, int order) const {
  return evaluate(bnn_params, prepare(xs, order), order);
}

Jets SurrogateComposition::evaluate(const MlpParams& bnn_params, const CompositionInputs& prepared, int order) const {
  if (!(bnn_params.spec() == bnn_)) throw ConfigError("composition: parameter spec does not match the BNN");
  return mlp_jets(bnn_params, prepared.inputs, prepared.seeds, order);
}

namespace {

FieldJet jet_at(const Jets& j, Index row) {
  FieldJet f;
  f.u = j.value[row];
  f.du.resize(static_cast<Index>(j.d1.size()));
  f.d2u.resize(static_cast<Index>(j.d2.size()));
  for (std::size_t i = 0; i < j.d1.size(); ++i) f.du[static_cast<Index>(i)] = j.d1[i][row];
  for (std::size_t i = 0; i < j.d2.size(); ++i) f.d2u[static_cast<Index>(i)] = j.d2[i][row];
  return f;
}

}  // namespace

double residual_1d(const SurrogateComposition& comp, const MlpParams& bnn_params, double k, double x) {
  const ProblemSpec p = ProblemSpec::diffusion_reaction_1d();
  if (comp.space_dim() != 1) throw ConfigError("residual_1d: composition is not one-dimensional");
  const Jets j = comp.evaluate(bnn_params, Matrix::Constant(1, 1, x), 2);
  const double ks[] = {k};
  return residual(p, jet_at(j, 0), ks);
}

double residual_2d(const SurrogateComposition& comp, const MlpParams& bnn_params, double k, double x, double y) {
  const ProblemSpec p = ProblemSpec::diffusion_reaction_2d();
  if (comp.space_dim() != 2) throw ConfigError("residual_2d: composition is not two-dimensional");
  Matrix xs(1, 2);
  xs << x, y;
  const Jets j = comp.evaluate(bnn_params, xs, 2);
  const double ks[] = {k};
  return residual(p, jet_at(j, 0), ks);
}

double boundary_value(const SurrogateComposition& comp, const MlpParams& bnn_params, const Domain& domain,
                      const Vector& x_b) {
  if (!domain.on_boundary(x_b)) throw ConfigError("boundary_value: point is not on the domain boundary");
  return comp.evaluate(bnn_params, x_b.transpose(), 0).value[0];
}

Vector residual_batch(const ProblemSpec& problem, const SurrogateComposition& comp, const MlpParams& bnn_params,
                      std::span<const double> unknowns, const CompositionInputs& prepared) {
  const Jets j = comp.evaluate(bnn_params, prepared, 2);
  Vector out(j.value.size());
  for (Index r = 0; r < out.size(); ++r) out[r] = residual(problem, jet_at(j, r), unknowns);
  return out;
}

}  // namespace mfbnn
