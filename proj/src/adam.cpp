#include "mfbnn/adam.hpp"

#include <cmath>

#include "mfbnn/errors.hpp"

namespace mfbnn {

void adam_step(AdamState& state, Vector& params, const Vector& grad, double lr) {
  if (grad.size() != state.m.size() || params.size() != state.m.size())
    throw ConfigError("adam_step: dimension mismatch");
  ++state.t;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
}

}  // namespace mfbnn
