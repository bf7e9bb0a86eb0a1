#pragma once

#include "mfbnn/types.hpp"

namespace mfbnn {

/// First/second moment estimates for Adam (beta1 = 0.9, beta2 = 0.999, eps = 1e-8 by default).
struct AdamState {
  Vector m;
  Vector v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(Index n) : m(Vector::Zero(n)), v(Vector::Zero(n)) {}
};

/// One bias-corrected Adam update of `params` (gradient descent direction).
void adam_step(AdamState& state, Vector& params, const Vector& grad, double lr);

}  // namespace mfbnn
