#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mfbnn/errors.hpp"
#include "mfbnn/rng.hpp"
#include "mfbnn/vi.hpp"
#include "oracles.hpp"

using namespace mfbnn;

namespace {

/// Diagonal Gaussian target independent of sigma.
class GaussianTarget final : public LogJoint {
 public:
  GaussianTarget(Vector mean, Vector sd) : mean_(std::move(mean)), sd_(std::move(sd)) {}
  Index dim() const override { return mean_.size(); }
  ad::Var log_joint(ad::Tape& t, ad::Var state, ad::Var) const override {
    const double c = -0.5 * std::log(2 * std::numbers::pi) * dim() - sd_.array().log().sum();
    const Vector w = 0.5 / sd_.array().square();
    return ad::add_scalar(-ad::sum(ad::mul(ad::square(state - t.constant(mean_)), t.constant(w))), c);
  }

 private:
  Vector mean_, sd_;
};

/// theta ~ N(0, 1), y = 1 observed with unit noise: posterior N(0.5, 0.5).
class ConjugateTarget final : public LogJoint {
 public:
  Index dim() const override { return 1; }
  ad::Var log_joint(ad::Tape& t, ad::Var state, ad::Var) const override {
    const double c = -std::log(2 * std::numbers::pi);
    return ad::add_scalar(-ad::scale(ad::sum(ad::square(state)), 0.5) -
                              ad::scale(ad::sum(ad::square(ad::add_scalar(state, -1.0))), 0.5),
                          c);
  }
};

/// Pulls sigma towards zero through log sigma alone.
class ShrinkingTarget final : public LogJoint {
 public:
  Index dim() const override { return 1; }
  ad::Var log_joint(ad::Tape&, ad::Var state, ad::Var log_sigma) const override {
    return -ad::scale(ad::exp(log_sigma), 100.0) - ad::scale(ad::sum(ad::square(state)), 0.5);
  }
};

VariationalParams make_q(const Vector& mu, const Vector& sd) {
  VariationalParams q{mu, Vector(sd.size())};
  for (Index i = 0; i < sd.size(); ++i) q.rho[i] = VariationalParams::rho_for(sd[i]);
  return q;
}

}  // namespace

TEST_CASE("softplus parameterization inverts exactly") {
  for (double s : {0.01, 0.05, 0.7071, 3.0}) {
    const VariationalParams q = make_q(Vector::Zero(1), Vector::Constant(1, s));
    CHECK(q.stddev()[0] == doctest::Approx(s).epsilon(1e-12));
  }
  const VariationalParams q{Vector::Zero(3), Vector::Constant(3, -50.0)};
  CHECK((q.stddev().array() > 0).all());
}

TEST_CASE("reparameterized draws reproduce mean and stddev") {
  const Vector mu = (Vector(2) << 0.3, -1.2).finished();
  const Vector sd = (Vector(2) << 0.5, 2.0).finished();
  const VariationalParams q = make_q(mu, sd);
  const int n = 100000;
  Eigen::MatrixXd draws(n, 2);
  Rng r(7);
  for (int i = 0; i < n; ++i) draws.row(i) = q.draw(standard_normal(r, 2)).transpose();
  const Vector m = draws.colwise().mean();
  for (Index j = 0; j < 2; ++j) {
    const double v = (draws.col(j).array() - m[j]).square().mean();
    CHECK(std::abs(m[j] - mu[j]) < 4 * sd[j] / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(std::sqrt(v) / sd[j] - 1) < 0.01);
  }
}

TEST_CASE("Q equal to the prior with no data gives a zero objective") {
  const MlpSpec bnn{{1, 10, 1}};
  BnnPosterior post(ProblemSpec::diffusion_reaction_1d(),
                    SurrogateComposition(std::nullopt, bnn, 1), BiFidelityDataset::with_dim(1));
  const double sigma = 1.3;
  const VariationalParams q = make_q(Vector::Zero(post.dim()), post.prior(sigma).layout().stddev(sigma));
  CHECK(std::abs(elbo_estimate(post, q, sigma, 200, 5)) < 1e-9);
}

TEST_CASE("KL between diagonal Gaussians matches the closed form") {
  Vector mp(3), sp(3), mq(3), sq(3);
  mp << 0.0, 1.0, -0.5;
  sp << 1.0, 0.5, 2.0;
  mq << 0.4, 0.7, 0.0;
  sq << 0.8, 0.6, 1.0;
  double kl = 0.0;
  for (Index i = 0; i < 3; ++i)
    kl += std::log(sp[i] / sq[i]) + (sq[i] * sq[i] + (mq[i] - mp[i]) * (mq[i] - mp[i])) / (2 * sp[i] * sp[i]) - 0.5;
  const GaussianTarget p(mp, sp);
  const double est = elbo_estimate(p, make_q(mq, sq), 1.0, 10000, 3);
  CHECK(std::abs(est / kl - 1) < 0.02);
}

TEST_CASE("gradient estimate vanishes on average at the conjugate optimum") {
  const ConjugateTarget target;
  const VariationalParams q = make_q(Vector::Constant(1, 0.5), Vector::Constant(1, std::sqrt(0.5)));
  Rng rng(4);
  const int n = 20000;
  double gm = 0, gr = 0, gm2 = 0, gr2 = 0;
  for (int i = 0; i < n; ++i) {
    const ElboGradient g = elbo_gradient(target, q, 0.0, standard_normal(rng, 1));
    gm += g.d_mu[0];
    gr += g.d_rho[0];
    gm2 += g.d_mu[0] * g.d_mu[0];
    gr2 += g.d_rho[0] * g.d_rho[0];
  }
  gm /= n;
  gr /= n;
  CHECK(std::abs(gm) < 4 * std::sqrt(gm2 / n / n));
  CHECK(std::abs(gr) < 4 * std::sqrt(gr2 / n / n));
}

TEST_CASE("fit_vi recovers the conjugate posterior N(0.5, 0.5)") {
  const ConjugateTarget target;
  ViConfig c;
  c.steps = 30000;
  c.learn_sigma = false;
  const ViResult r = fit_vi(target, std::nullopt, c, 11);
  MESSAGE("mean " << r.q.mu[0] << " stddev " << r.q.stddev()[0]);
  CHECK(std::abs(r.q.mu[0] - 0.5) < 0.05);
  CHECK(std::abs(r.q.stddev()[0] - std::sqrt(0.5)) < 0.07);
  CHECK(r.sigma == c.sigma_init);
}

TEST_CASE("without data sigma stays bounded and the objective falls towards zero") {
  const MlpSpec bnn{{1, 5, 1}};
  BnnPosterior post(ProblemSpec::regression(exact_solution(Generator::Fn1dSinSq).domain),
                    SurrogateComposition(std::nullopt, bnn, 1), BiFidelityDataset::with_dim(1));
  ViConfig c;
  c.steps = 8000;
  const ViResult r = fit_vi(post, bnn, c, 12);
  MESSAGE("sigma " << r.sigma);
  CHECK(r.sigma > 0.1);
  CHECK(r.sigma < 10.0);
  const double first = r.trace.front().objective;
  const double last = elbo_estimate(post, r.q, r.sigma, 2000, 1);
  MESSAGE("objective " << first << " -> " << last);
  CHECK(last < 0.1 * first);
  CHECK(last < 0.05);
}

TEST_CASE("sigma leaving its bounds aborts with a diagnostic") {
  const ShrinkingTarget target;
  ViConfig c;
  c.steps = 5000;
  c.learning_rate = 1e-2;
  c.sigma_min = 0.9;
  CHECK_THROWS_WITH_AS(fit_vi(target, std::nullopt, c, 1), doctest::Contains("sigma"), NumericalError);
}

TEST_CASE("fit_vi is deterministic and logs the requested steps") {
  const ConjugateTarget target;
  ViConfig c;
  c.steps = 250;
  c.log_every = 100;
  const ViResult a = fit_vi(target, std::nullopt, c, 5), b = fit_vi(target, std::nullopt, c, 5);
  CHECK(a.q.mu == b.q.mu);
  CHECK(a.q.rho == b.q.rho);
  REQUIRE(a.trace.size() == 3);
  CHECK(a.trace[2].step == 250);
}
