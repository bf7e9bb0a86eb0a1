#include "mfbnn/hmc.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "mfbnn/blob.hpp"
#include "mfbnn/errors.hpp"
#include "mfbnn/rng.hpp"

namespace mfbnn {

void HmcConfig::validate() const {
  if (burn_in < 1) throw ConfigError("hmc: burn_in must be >= 1");
  if (samples < 1) throw ConfigError("hmc: samples must be >= 1");
  if (leapfrog_steps < 1) throw ConfigError("hmc: leapfrog_steps must be >= 1");
  if (!(initial_step > 0)) throw ConfigError("hmc: initial_step must be > 0");
  if (!(target_accept > 0 && target_accept < 1)) throw ConfigError("hmc: target_accept must lie in (0, 1)");
  if (thin < 1) throw ConfigError("hmc: thin must be >= 1");
  if (!(step_jitter >= 0 && step_jitter < 1)) throw ConfigError("hmc: step_jitter must lie in [0, 1)");
  if (!(min_acceptance >= 0 && min_acceptance < 1)) throw ConfigError("hmc: min_acceptance must lie in [0, 1)");
  if (!(max_divergence_fraction >= 0 && max_divergence_fraction <= 1))
    throw ConfigError("hmc: max_divergence_fraction must lie in [0, 1]");
}

double hamiltonian(const PhasePoint& z) { return -z.log_density + 0.5 * z.momentum.squaredNorm(); }

namespace {

bool evaluate(const LogDensityFn& target, PhasePoint& z) {
  try {
    z.log_density = target(z.theta, &z.grad);
  } catch (const NumericalError&) {
    return false;
  }
  return std::isfinite(z.log_density) && z.grad.allFinite();
}

}  // namespace

LeapfrogResult leapfrog(const PhasePoint& start, double step, int n_steps, const LogDensityFn& target) {
  if (!(step > 0)) throw ConfigError("leapfrog: step must be > 0");
  if (n_steps < 1) throw ConfigError("leapfrog: n_steps must be >= 1");
  LeapfrogResult r{start, false};
  PhasePoint& z = r.end;
  z.momentum += 0.5 * step * z.grad;
  for (int i = 0; i < n_steps; ++i) {
    z.theta += step * z.momentum;
    if (!z.theta.allFinite() || !evaluate(target, z)) {
      r.divergent = true;
      return r;
    }
    z.momentum += (i + 1 < n_steps ? step : 0.5 * step) * z.grad;
  }
  r.divergent = !std::isfinite(hamiltonian(z));
  return r;
}

LeapfrogResult leapfrog(const Vector& theta, const Vector& momentum, double step, int n_steps,
                        const LogDensityFn& target) {
  if (theta.size() != momentum.size()) throw ConfigError("leapfrog: momentum has the wrong length");
  PhasePoint z{theta, momentum, 0.0, Vector::Zero(theta.size())};
  if (!evaluate(target, z)) return {z, true};
  return leapfrog(z, step, n_steps, target);
}

namespace {

/// Step-size adaptation by dual averaging (gamma = 0.05, t0 = 10, kappa = 0.75).
class DualAveraging {
 public:
  DualAveraging(double step, double target) : mu_(std::log(10.0 * step)), target_(target), log_step_(std::log(step)) {}

  void update(double accept_stat) {
    ++m_;
    const double m = static_cast<double>(m_);
    h_bar_ = (1.0 - 1.0 / (m + kT0)) * h_bar_ + (target_ - accept_stat) / (m + kT0);
    log_step_ = mu_ - std::sqrt(m) / kGamma * h_bar_;
    const double eta = std::pow(m, -kKappa);
    log_step_bar_ = eta * log_step_ + (1.0 - eta) * log_step_bar_;
  }
  double step() const { return std::exp(log_step_); }
  double final_step() const { return m_ > 0 ? std::exp(log_step_bar_) : std::exp(log_step_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;
  double mu_;
  double target_;
  double log_step_;
  double log_step_bar_ = 0.0;
  double h_bar_ = 0.0;
  long m_ = 0;
};

constexpr double kDivergenceEnergy = 1000.0;

}  // namespace

Chain sample(const HmcConfig& config, const LogDensityFn& target, const Vector& init, std::uint64_t seed) {
  config.validate();
  if (init.size() == 0) throw ConfigError("hmc: empty initial state");
  if (!init.allFinite()) throw ConfigError("hmc: initial state is not finite");
  const Index d = init.size();
  PhasePoint current{init, Vector::Zero(d), 0.0, Vector::Zero(d)};
  if (!evaluate(target, current)) throw NumericalError("hmc: log density is not finite at the initial state");

  Rng rng(derive_seed(seed, "hmc"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DualAveraging adapt(config.initial_step, config.target_accept);
  double step = config.initial_step;

  Chain chain;
  chain.states.resize(config.samples, d);
  long accepted = 0, burn_accepted = 0;
  const long total = config.burn_in + config.samples * config.thin;
  long kept = 0;

  for (long it = 0; it < total; ++it) {
    const bool burning = it < config.burn_in;
    current.momentum = standard_normal(rng, d);
    double eps = step;
    if (config.step_jitter > 0) eps *= 1.0 + config.step_jitter * (2.0 * unit(rng) - 1.0);
    const double h0 = hamiltonian(current);
    const LeapfrogResult proposal = leapfrog(current, eps, config.leapfrog_steps, target);
    const double u = unit(rng);
    double accept_stat = 0.0;
    bool divergent = proposal.divergent;
    if (!divergent) {
      const double dh = hamiltonian(proposal.end) - h0;
      if (!std::isfinite(dh) || dh > kDivergenceEnergy) {
        divergent = true;
      } else {
        accept_stat = dh <= 0 ? 1.0 : std::exp(-dh);
      }
    }
    const bool accept = !divergent && u < accept_stat;
    if (accept) current = proposal.end;

    if (burning) {
      burn_accepted += accept;
      chain.burn_in_divergences += divergent;
      if (config.adapt) {
        adapt.update(accept_stat);
        step = it + 1 < config.burn_in ? adapt.step() : adapt.final_step();
      }
    } else {
      accepted += accept;
      chain.divergences += divergent;
      const long post = it - config.burn_in;
      if ((post + 1) % config.thin == 0) chain.states.row(kept++) = current.theta.transpose();
    }
  }

  const double post_iters = static_cast<double>(config.samples * config.thin);
  chain.acceptance_rate = static_cast<double>(accepted) / post_iters;
  chain.burn_in_acceptance = static_cast<double>(burn_accepted) / static_cast<double>(config.burn_in);
  chain.final_step = step;
  if (chain.acceptance_rate < config.min_acceptance) {
    std::ostringstream os;
    os << "hmc: acceptance rate " << chain.acceptance_rate << " below " << config.min_acceptance
       << " after burn-in (step " << step << ")";
    throw NumericalError(os.str());
  }
  if (static_cast<double>(chain.divergences) > config.max_divergence_fraction * post_iters) {
    std::ostringstream os;
    os << "hmc: " << chain.divergences << " divergent trajectories out of " << post_iters << " after burn-in";
    throw NumericalError(os.str());
  }
  return chain;
}

PosteriorSamples split_chain(const Chain& chain, Index n_params, std::vector<std::string> lambda_names) {
  const Index n_lambda = static_cast<Index>(lambda_names.size());
  if (chain.states.cols() != n_params + n_lambda) throw ConfigError("split_chain: state width mismatch");
  PosteriorSamples s;
  s.thetas = chain.states.leftCols(n_params);
  s.lambdas = chain.states.rightCols(n_lambda);
  s.lambda_names = std::move(lambda_names);
  s.acceptance_rate = chain.acceptance_rate;
  s.final_step = chain.final_step;
  s.divergences = chain.divergences;
  return s;
}

void save_samples(const std::filesystem::path& path, const PosteriorSamples& samples, const std::string& extra_json) {
  nlohmann::json header;
  header["kind"] = "posterior-samples";
  header["count"] = samples.count();
  header["param_dim"] = samples.thetas.cols();
  header["lambda_names"] = samples.lambda_names;
  header["acceptance_rate"] = samples.acceptance_rate;
  header["final_step"] = samples.final_step;
  header["divergences"] = samples.divergences;
  header["layout"] = "row-major: per sample, params then lambdas";
  header["extra"] = nlohmann::json::parse(extra_json);
  const Index m = samples.count();
  const Index w = samples.thetas.cols() + samples.lambdas.cols();
  Vector values(m * w);
  for (Index i = 0; i < m; ++i) {
    values.segment(i * w, samples.thetas.cols()) = samples.thetas.row(i).transpose();
    values.segment(i * w + samples.thetas.cols(), samples.lambdas.cols()) = samples.lambdas.row(i).transpose();
  }
  write_blob(path, {header.dump(), values});
}

PosteriorSamples load_samples(const std::filesystem::path& path, std::string* extra_json) {
  Blob blob = read_blob(path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(blob.header);
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("sample archive header is not valid JSON: " + path.string());
  }
  if (header.value("kind", "") != "posterior-samples") throw ConfigError("not a sample archive: " + path.string());
  PosteriorSamples s;
  const Index m = header.at("count").get<Index>();
  const Index p = header.at("param_dim").get<Index>();
  s.lambda_names = header.at("lambda_names").get<std::vector<std::string>>();
  const Index k = static_cast<Index>(s.lambda_names.size());
  if (blob.values.size() != m * (p + k)) throw ConfigError("sample archive is truncated: " + path.string());
  s.thetas.resize(m, p);
  s.lambdas.resize(m, k);
  for (Index i = 0; i < m; ++i) {
    s.thetas.row(i) = blob.values.segment(i * (p + k), p).transpose();
    s.lambdas.row(i) = blob.values.segment(i * (p + k) + p, k).transpose();
  }
  s.acceptance_rate = header.at("acceptance_rate").get<double>();
  s.final_step = header.at("final_step").get<double>();
  s.divergences = header.at("divergences").get<long>();
  if (extra_json) *extra_json = header.at("extra").dump();
  return s;
}

}  // namespace mfbnn
