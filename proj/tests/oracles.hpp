#pragma once

// Test-only reference computations. Nothing here calls into the code paths
// it is used to check.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace oracle {

using Vec = Eigen::VectorXd;

/// Central difference of f at x along coordinate i.
inline double central_diff(const std::function<double(const Vec&)>& f, Vec x, Eigen::Index i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double fp = f(x);
  x[i] = x0 - h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = central_diff(f, x, i, h);
  return g;
}

/// Relative error with an absolute floor so that near-zero entries compare sensibly.
inline double rel_error(const Vec& a, const Vec& b, double floor = 1.0) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(floor, b.cwiseAbs().maxCoeff());
}

/// Straight-line tanh MLP: widths w, flat params laid out per layer as
/// row-major weights (out x in) then bias.
inline double naive_mlp(const std::vector<int>& widths, const Vec& flat, const Vec& x) {
  std::vector<double> z(x.data(), x.data() + x.size());
  std::size_t p = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l], out = widths[l + 1];
    std::vector<double> next(out, 0.0);
    for (int o = 0; o < out; ++o) {
      double acc = 0.0;
      for (int i = 0; i < in; ++i) acc += flat[p + o * in + i] * z[i];
      next[o] = acc;
    }
    p += static_cast<std::size_t>(in) * out;
    for (int o = 0; o < out; ++o) next[o] += flat[p + o];
    p += out;
    if (l + 2 < widths.size())
      for (double& v : next) v = std::tanh(v);
    z = next;
  }
  return z[0];
}

inline Vec random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Vec v(n);
  for (auto& e : v) e = d(rng);
  return v;
}

/// Hyper-dual number a + b e1 + c e2 + d e1 e2 with e1^2 = e2^2 = 0: carries
/// exact first and second derivatives through analytic formulas.
struct HyperDual {
  double a = 0, b = 0, c = 0, d = 0;
  HyperDual() = default;
  HyperDual(double v) : a(v) {}
  HyperDual(double a_, double b_, double c_, double d_) : a(a_), b(b_), c(c_), d(d_) {}
  static HyperDual variable(double x) { return {x, 1, 1, 0}; }
};

inline HyperDual operator+(HyperDual x, HyperDual y) { return {x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d}; }
inline HyperDual operator-(HyperDual x, HyperDual y) { return {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d}; }
inline HyperDual operator*(HyperDual x, HyperDual y) {
  return {x.a * y.a, x.a * y.b + x.b * y.a, x.a * y.c + x.c * y.a, x.a * y.d + x.b * y.c + x.c * y.b + x.d * y.a};
}
inline HyperDual apply(HyperDual x, double f, double f1, double f2) {
  return {f, f1 * x.b, f1 * x.c, f1 * x.d + f2 * x.b * x.c};
}
inline HyperDual sin(HyperDual x) { return apply(x, std::sin(x.a), std::cos(x.a), -std::sin(x.a)); }
inline HyperDual cos(HyperDual x) { return apply(x, std::cos(x.a), -std::sin(x.a), -std::cos(x.a)); }
inline HyperDual exp(HyperDual x) { return apply(x, std::exp(x.a), std::exp(x.a), std::exp(x.a)); }

/// Effective sample size of a chain (Geyer's initial positive sequence).
inline double effective_sample_size(const Vec& chain) {
  const Eigen::Index n = chain.size();
  const double mean = chain.mean();
  const Vec c = chain.array() - mean;
  const double c0 = c.squaredNorm() / static_cast<double>(n);
  if (c0 == 0.0) return static_cast<double>(n);
  auto rho = [&](Eigen::Index lag) {
    return c.head(n - lag).dot(c.tail(n - lag)) / static_cast<double>(n) / c0;
  };
  double tau = -1.0;
  for (Eigen::Index k = 0; 2 * k + 1 < n; ++k) {
    const double pair = rho(2 * k) + rho(2 * k + 1);
    if (pair <= 0) break;
    tau += 2.0 * pair;
  }
  return static_cast<double>(n) / std::max(tau, 1e-12);
}

}  // namespace oracle
