#include "mfbnn/posterior.hpp"

#include <cmath>
#include <numbers>

#include "mfbnn/errors.hpp"

namespace mfbnn {

namespace {
const double kLog2Pi = std::log(2.0 * std::numbers::pi);
}

Vector GaussianPrior::stddev(double sigma) const {
  Vector s = factor;
  for (Index i = 0; i < dim(); ++i)
    if (tied[static_cast<std::size_t>(i)]) s[i] *= sigma;
  return s;
}

ad::Var GaussianPrior::log_density(ad::Var state, ad::Var log_sigma) const {
  ad::Tape& t = state.tape();
  if (state.rows() != dim() || state.cols() != 1) throw ConfigError("prior: state has the wrong length");
  // tied:   -log sigma - log a_i - theta_i^2 / (2 sigma^2 a_i^2)
  // untied: -log a_i - theta_i^2 / (2 a_i^2)
  Vector inv_tied = Vector::Zero(dim());
  Vector inv_free = Vector::Zero(dim());
  double constant = -0.5 * kLog2Pi * static_cast<double>(dim());
  Index n_tied = 0;
  for (Index i = 0; i < dim(); ++i) {
    const double a2 = factor[i] * factor[i];
    constant -= std::log(factor[i]);
    if (tied[static_cast<std::size_t>(i)]) {
      inv_tied[i] = 0.5 / a2;
      ++n_tied;
    } else {
      inv_free[i] = 0.5 / a2;
    }
  }
  const ad::Var sq = ad::square(state);
  ad::Var out = ad::add_scalar(-ad::sum(ad::mul(sq, t.constant(inv_free))), constant);
  if (n_tied > 0) {
    const ad::Var tied_quad = ad::sum(ad::mul(sq, t.constant(inv_tied)));
    const ad::Var inv_sigma2 = ad::exp(ad::scale(log_sigma, -2.0));
    out = out - ad::mul(inv_sigma2, tied_quad) - ad::scale(log_sigma, static_cast<double>(n_tied));
  }
  return out;
}

double GaussianPrior::log_density(const Vector& state, double sigma) const {
  const Vector s = stddev(sigma);
  return -0.5 * kLog2Pi * static_cast<double>(dim()) - s.array().log().sum() -
         0.5 * (state.array() / s.array()).square().sum();
}

double PriorSpec::weight_scale(int layer) const {
  return sigma / std::sqrt(static_cast<double>(bnn.widths.at(static_cast<std::size_t>(layer))));
}

GaussianPrior PriorSpec::layout() const {
  const auto slots = layer_layout(bnn);
  const Index n = param_count(bnn);
  GaussianPrior p;
  p.factor = Vector::Ones(n + n_unknowns);
  p.tied.assign(static_cast<std::size_t>(n + n_unknowns), false);
  for (std::size_t l = 0; l < slots.size(); ++l) {
    const LayerSlot& s = slots[l];
    const double a = 1.0 / std::sqrt(static_cast<double>(s.in));
    for (Index i = 0; i < s.in * s.out; ++i) {
      p.factor[s.weight_offset + i] = a;
      p.tied[static_cast<std::size_t>(s.weight_offset + i)] = true;
    }
  }
  return p;
}

BnnPosterior::BnnPosterior(ProblemSpec problem, SurrogateComposition comp, const BiFidelityDataset& data)
    : problem_(std::move(problem)), comp_(std::move(comp)) {
  problem_.validate();
  data.validate();
  if (data.dim != problem_.space_dim()) throw ConfigError("posterior: dataset dimension does not match the problem");
  if (comp_.space_dim() != problem_.space_dim()) throw ConfigError("posterior: composition dimension mismatch");
  if (!problem_.is_inverse() && (!data.hifi_f.empty() || !data.hifi_b.empty()))
    throw ConfigError("posterior: f/b sensors need an inverse problem");
  n_params_ = param_count(comp_.bnn());
  n_unknowns_ = static_cast<Index>(problem_.unknowns.size());
  prior_layout_ = PriorSpec{1.0, comp_.bnn(), n_unknowns_}.layout();

  auto make = [&](const SensorSet& s, int order) {
    Block b;
    if (s.empty()) return b;
    b.prepared = comp_.prepare(s.x, order);
    b.y = s.y;
    b.half_precision = 0.5 / s.sigma.array().square();
    b.log_norm = -0.5 * (kLog2Pi * static_cast<double>(s.size()) + 2.0 * s.sigma.array().log().sum());
    return b;
  };
  u_ = make(data.hifi_u, 0);
  f_ = make(data.hifi_f, 2);
  b_ = make(data.hifi_b, 0);
}

ad::Var BnnPosterior::block_log_likelihood(ad::Tape& tape, const Block& block, ad::Var prediction) const {
  const ad::Var r2 = ad::square(prediction - tape.constant(block.y));
  return ad::add_scalar(-ad::sum(ad::mul(r2, tape.constant(block.half_precision))), block.log_norm);
}

ad::Var BnnPosterior::log_likelihood(ad::Tape& tape, ad::Var state) const {
  if (state.rows() != dim() || state.cols() != 1) throw ConfigError("posterior: state has the wrong length");
  const NetVars net = bind_params(state, comp_.bnn());
  ad::Var total = tape.constant(0.0);
  if (!u_.empty()) {
    const ad::Var pred = mlp_jets(net, u_.prepared.inputs, {}, 0).value;
    total = total + block_log_likelihood(tape, u_, pred);
  }
  if (!b_.empty()) {
    const ad::Var pred = mlp_jets(net, b_.prepared.inputs, {}, 0).value;
    total = total + block_log_likelihood(tape, b_, pred);
  }
  if (!f_.empty()) {
    std::vector<ad::Var> unknowns;
    for (Index j = 0; j < n_unknowns_; ++j) unknowns.push_back(ad::slice(state, n_params_ + j, 1, 1));
    const TapeJets jets = mlp_jets(net, f_.prepared.inputs, f_.prepared.seeds, 2);
    const ad::Var pred = residual(problem_, jets.value, jets.d1, jets.d2, unknowns);
    total = total + block_log_likelihood(tape, f_, pred);
  }
  return total;
}

ad::Var BnnPosterior::log_joint(ad::Tape& tape, ad::Var state, ad::Var log_sigma) const {
  return prior_layout_.log_density(state, log_sigma) + log_likelihood(tape, state);
}

double BnnPosterior::log_posterior(const Vector& state, double sigma, Vector* grad) const {
  if (!(sigma > 0)) throw ConfigError("log_posterior: sigma must be > 0");
  if (state.size() != dim()) throw ConfigError("log_posterior: state has the wrong length");
  ad::Tape tape;
  const ad::Var s = tape.leaf(state);
  const ad::Var prior = prior_layout_.log_density(s, tape.constant(std::log(sigma)));
  if (!std::isfinite(prior.scalar())) throw NumericalError("log_posterior: non-finite prior term");
  const ad::Var lik = log_likelihood(tape, s);
  if (!std::isfinite(lik.scalar())) {
    // Re-evaluate block by block so the error names the culprit.
    const NetVars net = bind_params(s, comp_.bnn());
    if (!u_.empty() && !mlp_jets(net, u_.prepared.inputs, {}, 0).value.value().allFinite())
      throw NumericalError("log_posterior: non-finite u-likelihood term");
    if (!b_.empty() && !mlp_jets(net, b_.prepared.inputs, {}, 0).value.value().allFinite())
      throw NumericalError("log_posterior: non-finite b-likelihood term");
    throw NumericalError("log_posterior: non-finite f-likelihood term");
  }
  const ad::Var total = prior + lik;
  if (grad) {
    tape.backward(total);
    *grad = tape.grad(s);
    if (!grad->allFinite()) throw NumericalError("log_posterior: non-finite gradient");
  }
  return total.scalar();
}

}  // namespace mfbnn
