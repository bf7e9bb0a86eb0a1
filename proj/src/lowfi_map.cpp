#include "mfbnn/lowfi_map.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "mfbnn/adam.hpp"
#include "mfbnn/errors.hpp"
#include "mfbnn/rng.hpp"

namespace mfbnn {

void MapConfig::validate() const {
  if (!(learning_rate > 0)) throw ConfigError("map: learning_rate must be > 0");
  if (steps < 1) throw ConfigError("map: steps must be >= 1");
  if (alpha && !(*alpha >= 0)) throw ConfigError("map: alpha must be >= 0");
  if (batch_size < 0) throw ConfigError("map: batch_size must be >= 0");
  if (decay && !(decay_factor > 0)) throw ConfigError("map: decay_factor must be > 0");
  if (log_every < 1) throw ConfigError("map: log_every must be >= 1");
}

LowFiSurrogate::LowFiSurrogate(MlpParams params) : params_(std::move(params)) {}

Vector LowFiSurrogate::value(const Matrix& xs) const { return mlp_forward_batch(params_, xs); }

Jets LowFiSurrogate::jets(const Matrix& xs, int order) const {
  std::vector<InputSeed> seeds;
  for (Index i = 0; i < input_dim(); ++i) seeds.push_back(coordinate_seed(xs.rows(), input_dim(), i));
  return mlp_jets(params_, xs, seeds, order);
}

double default_alpha(const SensorSet& lofi) {
  if (lofi.empty()) throw ConfigError("map: low-fidelity dataset is empty");
  return lofi.sigma.squaredNorm() / static_cast<double>(lofi.size()) / static_cast<double>(lofi.size());
}

namespace {

ad::Var loss_on_tape(ad::Var flat, const MlpSpec& spec, const Matrix& xs, const Vector& ys, double alpha) {
  ad::Tape& t = flat.tape();
  const NetVars net = bind_params(flat, spec);
  const ad::Var out = mlp_jets(net, xs, {}, 0).value;
  ad::Var loss = ad::scale(ad::sum(ad::square(out - t.constant(ys))), 1.0 / static_cast<double>(ys.size()));
  if (alpha > 0) {
    for (const ad::Var& w : net.weights) loss = loss + ad::scale(ad::sum(ad::square(w)), alpha);
  }
  return loss;
}

}  // namespace

double map_loss(const MlpParams& params, const SensorSet& lofi, double alpha) {
  if (lofi.empty()) throw ConfigError("map_loss: low-fidelity dataset is empty");
  const Vector pred = mlp_forward_batch(params, lofi.x);
  return (lofi.y - pred).squaredNorm() / static_cast<double>(lofi.size()) + alpha * params.weight_norm_squared();
}

MapResult train_map(const MlpSpec& spec, const SensorSet& lofi, const MapConfig& config, std::uint64_t seed) {
  config.validate();
  spec.validate();
  if (lofi.empty()) throw ConfigError("map: low-fidelity dataset is empty");
  if (lofi.x.cols() != spec.input_dim())
    throw ConfigError("map: data dimension " + std::to_string(lofi.x.cols()) + " does not match network input " +
                      std::to_string(spec.input_dim()));

  const double alpha = config.alpha ? *config.alpha : default_alpha(lofi);
  Vector params = init_params(spec, derive_seed(seed, "map-init")).flat();
  AdamState adam(params.size());
  Rng batch_rng(derive_seed(seed, "map-batch"));
  const bool minibatch = config.batch_size > 0 && config.batch_size < lofi.size();
  std::uniform_int_distribution<Index> pick(0, lofi.size() - 1);
  Matrix bx;
  Vector by;

  MapResult result{LowFiSurrogate(MlpParams(spec, params)), alpha, 0.0, 0.0, {}};
  result.initial_loss = map_loss(MlpParams(spec, params), lofi, alpha);
  result.log.push_back({0, result.initial_loss});

  for (long step = 1; step <= config.steps; ++step) {
    const Matrix* xs = &lofi.x;
    const Vector* ys = &lofi.y;
    if (minibatch) {
      bx.resize(config.batch_size, lofi.x.cols());
      by.resize(config.batch_size);
      for (Index i = 0; i < config.batch_size; ++i) {
        const Index j = pick(batch_rng);
        bx.row(i) = lofi.x.row(j);
        by[i] = lofi.y[j];
      }
      xs = &bx;
      ys = &by;
    }
    ad::Tape tape;
    const ad::Var flat = tape.leaf(params);
    const ad::Var loss = loss_on_tape(flat, spec, *xs, *ys, alpha);
    const double value = loss.scalar();
    if (!std::isfinite(value)) {
      std::ostringstream os;
      os << "map: non-finite loss " << value << " at step " << step;
      throw NumericalError(os.str());
    }
    tape.backward(loss);
    const double lr = config.decay
                          ? config.learning_rate * std::pow(config.decay_factor, static_cast<double>(step) / config.steps)
                          : config.learning_rate;
    adam_step(adam, params, tape.grad(flat), lr);
    if (step % config.log_every == 0 || step == config.steps) {
      const double full = map_loss(MlpParams(spec, params), lofi, alpha);
      if (!std::isfinite(full)) {
        std::ostringstream os;
        os << "map: non-finite loss " << full << " at step " << step;
        throw NumericalError(os.str());
      }
      result.log.push_back({step, full});
    }
  }
  result.final_loss = result.log.back().loss;
  result.surrogate = LowFiSurrogate(MlpParams(spec, params));
  return result;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& log) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open for writing: " + path.string());
  os << "step,loss\n";
  char buf[64];
  for (const LossRecord& r : log) {
    std::snprintf(buf, sizeof buf, "%ld,%.17g\n", r.step, r.loss);
    os << buf;
  }
}

}  // namespace mfbnn
