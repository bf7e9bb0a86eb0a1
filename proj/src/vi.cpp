#include "mfbnn/vi.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "mfbnn/adam.hpp"
#include "mfbnn/errors.hpp"
#include "mfbnn/rng.hpp"

namespace mfbnn {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

Vector VariationalParams::stddev() const { return rho.unaryExpr([](double r) { return softplus(r); }); }

double VariationalParams::rho_for(double s) {
  if (!(s > 0)) throw ConfigError("vi: stddev must be > 0");
  return std::log(std::expm1(s));
}

Vector VariationalParams::draw(const Vector& eps) const { return mu + stddev().cwiseProduct(eps); }

void ViConfig::validate() const {
  if (steps < 1) throw ConfigError("vi: steps must be >= 1");
  if (!(learning_rate > 0)) throw ConfigError("vi: learning_rate must be > 0");
  if (decay && !(decay_factor > 0)) throw ConfigError("vi: decay_factor must be > 0");
  if (n_mc < 1) throw ConfigError("vi: n_mc must be >= 1");
  if (!(init_std > 0)) throw ConfigError("vi: init_std must be > 0");
  if (!(sigma_init > 0)) throw ConfigError("vi: sigma_init must be > 0");
  if (log_every < 1) throw ConfigError("vi: log_every must be >= 1");
  if (!(sigma_min > 0 && sigma_max > sigma_min)) throw ConfigError("vi: invalid sigma bounds");
  if (sigma_init < sigma_min || sigma_init > sigma_max) throw ConfigError("vi: sigma_init outside bounds");
}

ElboGradient elbo_gradient(const LogJoint& target, const VariationalParams& q, double log_sigma, const Vector& eps) {
  const Index d = target.dim();
  if (q.dim() != d || q.rho.size() != d || eps.size() != d) throw ConfigError("vi: dimension mismatch");
  ad::Tape tape;
  const ad::Var mu = tape.leaf(q.mu);
  const ad::Var rho = tape.leaf(q.rho);
  const ad::Var ls = tape.leaf(Matrix::Constant(1, 1, log_sigma));
  const ad::Var s = ad::softplus(rho);
  const ad::Var theta = mu + ad::mul(s, tape.constant(eps));
  const double log_q_const = -0.5 * (eps.squaredNorm() + kLog2Pi * static_cast<double>(d));
  const ad::Var log_q = ad::add_scalar(-ad::sum(ad::log(s)), log_q_const);
  const ad::Var joint = target.log_joint(tape, theta, ls);
  if (!std::isfinite(joint.scalar())) throw NumericalError("vi: non-finite log joint");
  const ad::Var objective = log_q - joint;
  tape.backward(objective);
  ElboGradient g;
  g.objective = objective.scalar();
  g.d_mu = tape.grad(mu);
  g.d_rho = tape.grad(rho);
  g.d_log_sigma = tape.grad(ls)(0, 0);
  return g;
}

double elbo_estimate(const LogJoint& target, const VariationalParams& q, double sigma, int n_mc, std::uint64_t seed) {
  if (n_mc < 1) throw ConfigError("vi: n_mc must be >= 1");
  if (!(sigma > 0)) throw ConfigError("vi: sigma must be > 0");
  const Index d = target.dim();
  if (q.dim() != d) throw ConfigError("vi: dimension mismatch");
  Rng rng(derive_seed(seed, "elbo-estimate"));
  const Vector s = q.stddev();
  const double log_q_norm = -s.array().log().sum() - 0.5 * kLog2Pi * static_cast<double>(d);
  double total = 0.0;
  for (int i = 0; i < n_mc; ++i) {
    const Vector eps = standard_normal(rng, d);
    ad::Tape tape;
    const ad::Var theta = tape.constant(q.mu + s.cwiseProduct(eps));
    const double joint = target.log_joint(tape, theta, tape.constant(std::log(sigma))).scalar();
    if (!std::isfinite(joint)) throw NumericalError("vi: non-finite log joint");
    total += log_q_norm - 0.5 * eps.squaredNorm() - joint;
  }
  return total / n_mc;
}

ViResult fit_vi(const LogJoint& target, const std::optional<MlpSpec>& bnn, const ViConfig& config,
                std::uint64_t seed) {
  config.validate();
  const Index d = target.dim();
  VariationalParams q;
  if (config.init_mean) {
    if (config.init_mean->size() != d) throw ConfigError("vi: init_mean has the wrong length");
    q.mu = *config.init_mean;
  } else {
    q.mu = Vector::Zero(d);
    if (bnn) {
      const Vector w = init_params(*bnn, derive_seed(seed, "vi-init")).flat();
      if (w.size() > d) throw ConfigError("vi: network larger than the target dimension");
      q.mu.head(w.size()) = w;
    }
  }
  q.rho = Vector::Constant(d, VariationalParams::rho_for(config.init_std));
  double log_sigma = std::log(config.sigma_init);

  // One Adam state over the packed vector [mu, rho, log sigma].
  Vector packed(2 * d + 1);
  packed << q.mu, q.rho, log_sigma;
  AdamState adam(packed.size());
  Rng rng(derive_seed(seed, "vi-noise"));

  ViResult result{config.sigma_init, q, {}};
  double window = 0.0;
  long window_n = 0;
  Vector grad(packed.size());
  for (long step = 1; step <= config.steps; ++step) {
    q.mu = packed.head(d);
    q.rho = packed.segment(d, d);
    log_sigma = packed[2 * d];
    grad.setZero();
    double objective = 0.0;
    for (int i = 0; i < config.n_mc; ++i) {
      const ElboGradient g = elbo_gradient(target, q, log_sigma, standard_normal(rng, d));
      objective += g.objective;
      grad.head(d) += g.d_mu;
      grad.segment(d, d) += g.d_rho;
      grad[2 * d] += g.d_log_sigma;
    }
    objective /= config.n_mc;
    grad /= config.n_mc;
    if (!std::isfinite(objective) || !grad.allFinite()) {
      std::ostringstream os;
      os << "vi: non-finite objective " << objective << " at step " << step;
      throw NumericalError(os.str());
    }
    if (!config.learn_sigma) grad[2 * d] = 0.0;
    const double lr = config.decay
                          ? config.learning_rate * std::pow(config.decay_factor, static_cast<double>(step) / config.steps)
                          : config.learning_rate;
    adam_step(adam, packed, grad, lr);
    const double sigma = std::exp(packed[2 * d]);
    if (sigma < config.sigma_min || sigma > config.sigma_max) {
      std::ostringstream os;
      os << "vi: prior scale sigma = " << sigma << " left [" << config.sigma_min << ", " << config.sigma_max
         << "] at step " << step;
      throw NumericalError(os.str());
    }
    window += objective;
    ++window_n;
    if (step % config.log_every == 0 || step == config.steps) {
      result.trace.push_back({step, window / static_cast<double>(window_n), sigma});
      window = 0.0;
      window_n = 0;
    }
  }
  result.q.mu = packed.head(d);
  result.q.rho = packed.segment(d, d);
  result.sigma = std::exp(packed[2 * d]);
  return result;
}

void write_vi_csv(const std::filesystem::path& path, const std::vector<ViTraceRecord>& trace) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open for writing: " + path.string());
  os << "step,objective,sigma\n";
  char buf[96];
  for (const ViTraceRecord& r : trace) {
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g\n", r.step, r.objective, r.sigma);
    os << buf;
  }
}

}  // namespace mfbnn
