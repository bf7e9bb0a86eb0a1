#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mfbnn/errors.hpp"
#include "mfbnn/posterior.hpp"
#include "oracles.hpp"

using namespace mfbnn;

namespace {

const double log2pi = std::log(2 * std::numbers::pi);

SurrogateComposition comp_for(Index dim, std::mt19937_64& rng) {
  const MlpSpec lo{{static_cast<int>(dim), 20, 20, 1}};
  return SurrogateComposition(LowFiSurrogate(MlpParams(lo, oracle::random_vector(rng, param_count(lo), 0.5))),
                              SurrogateComposition::bnn_spec(dim, true, {50}), dim);
}

/// Straight-line Gaussian log density with the documented layer scales.
double naive_log_prior(const MlpSpec& spec, const Vector& state, double sigma) {
  double acc = 0.0;
  Index p = 0;
  auto term = [&](double v, double s) { acc += -0.5 * log2pi - std::log(s) - 0.5 * v * v / (s * s); };
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    const int in = spec.widths[l], out = spec.widths[l + 1];
    for (int i = 0; i < in * out; ++i) term(state[p++], sigma / std::sqrt(static_cast<double>(in)));
    for (int i = 0; i < out; ++i) term(state[p++], 1.0);
  }
  for (; p < state.size(); ++p) term(state[p], 1.0);
  return acc;
}

}  // namespace

TEST_CASE("prior layer scales follow sigma / sqrt(N_l)") {
  const PriorSpec prior{2.0, MlpSpec{{2, 50, 1}}, 1};
  CHECK(prior.weight_scale(0) == doctest::Approx(2.0 / std::sqrt(2.0)));
  CHECK(prior.weight_scale(1) == doctest::Approx(2.0 / std::sqrt(50.0)));
  CHECK(prior.bias_scale(0) == 1.0);
  const GaussianPrior g = prior.layout();
  CHECK(g.dim() == param_count(prior.bnn) + 1);
  const Vector s = g.stddev(prior.sigma);
  CHECK(s[0] == doctest::Approx(prior.weight_scale(0)));
  CHECK(s[100] == 1.0);  // first hidden bias
  CHECK(s[150] == doctest::Approx(prior.weight_scale(1)));
  CHECK(s[g.dim() - 1] == 1.0);  // the unknown k is not tied to sigma
}

TEST_CASE("without data the log posterior is the log prior and its score") {
  std::mt19937_64 rng(1);
  const ProblemSpec problem = ProblemSpec::diffusion_reaction_1d();
  BnnPosterior post(problem, comp_for(1, rng), BiFidelityDataset::with_dim(1));
  const Vector state = oracle::random_vector(rng, post.dim());
  const double sigma = 1.7;
  Vector grad;
  const double lp = post.log_posterior(state, sigma, &grad);
  CHECK(lp == doctest::Approx(naive_log_prior(post.composition().bnn(), state, sigma)).epsilon(1e-12));
  const Vector s = post.prior(sigma).layout().stddev(sigma);
  const Vector score = -state.cwiseQuotient(s.cwiseProduct(s));
  CHECK((grad - score).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("one exactly matched u-observation contributes only its normalizer") {
  std::mt19937_64 rng(2);
  const SurrogateComposition comp = comp_for(1, rng);
  const Vector theta = oracle::random_vector(rng, param_count(comp.bnn()), 0.3);
  const double x = 0.41;
  const double u = comp.evaluate(MlpParams(comp.bnn(), theta), Matrix::Constant(1, 1, x), 0).value[0];
  BiFidelityDataset data = BiFidelityDataset::with_dim(1);
  const double noise = 0.02;
  data.hifi_u.append(Vector::Constant(1, x), u, noise);
  BnnPosterior post(ProblemSpec::regression(exact_solution(Generator::Fn1dSinSq).domain), comp, data);
  ad::Tape tape;
  const double ll = post.log_likelihood(tape, tape.leaf(theta)).scalar();
  CHECK(ll == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi * noise * noise)).epsilon(1e-12));
}

TEST_CASE("log posterior gradient with PDE terms matches finite differences") {
  std::mt19937_64 rng(3);
  for (Generator g : {Generator::Inv1d, Generator::Inv2d}) {
    GeneratorSpec gs = default_generator_spec(g);
    gs.n_lofi = 10;
    gs.n_boundary = 2;
    const BiFidelityDataset data = generate(gs);
    const ProblemSpec problem =
        g == Generator::Inv1d ? ProblemSpec::diffusion_reaction_1d() : ProblemSpec::diffusion_reaction_2d();
    BnnPosterior post(problem, comp_for(problem.space_dim(), rng), data);
    for (int draw = 0; draw < 10; ++draw) {
      const Vector state = oracle::random_vector(rng, post.dim(), 0.3);
      const double sigma = 1.3;
      Vector grad;
      post.log_posterior(state, sigma, &grad);
      const Vector fd =
          oracle::fd_gradient([&](const Vector& s) { return post.log_posterior(s, sigma, nullptr); }, state, 1e-5);
      const double err = oracle::rel_error(grad, fd);
      CHECK(err < 1e-5);
    }
  }
}

TEST_CASE("log joint is differentiable in log sigma") {
  std::mt19937_64 rng(4);
  GeneratorSpec gs = default_generator_spec(Generator::Fn1dSinSq);
  const BiFidelityDataset data = generate(gs);
  BnnPosterior post(ProblemSpec::regression(exact_solution(Generator::Fn1dSinSq).domain), comp_for(1, rng),
                    BiFidelityDataset{1, data.lofi, data.hifi_u, {}, {}});
  const Vector state = oracle::random_vector(rng, post.dim(), 0.3);
  auto joint = [&](double ls) {
    ad::Tape t;
    return post.log_joint(t, t.constant(state), t.constant(ls)).scalar();
  };
  ad::Tape t;
  const ad::Var ls = t.leaf(Matrix::Constant(1, 1, 0.2));
  const ad::Var j = post.log_joint(t, t.constant(state), ls);
  t.backward(j);
  const double fd = (joint(0.2 + 1e-6) - joint(0.2 - 1e-6)) / 2e-6;
  CHECK(t.grad(ls)(0, 0) == doctest::Approx(fd).epsilon(1e-6));
  CHECK(j.scalar() == doctest::Approx(post.log_posterior(state, std::exp(0.2), nullptr)).epsilon(1e-12));
}

TEST_CASE("non-finite terms are reported by name") {
  std::mt19937_64 rng(5);
  BnnPosterior post(ProblemSpec::diffusion_reaction_1d(), comp_for(1, rng), BiFidelityDataset::with_dim(1));
  Vector state = Vector::Zero(post.dim());
  state[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(post.log_posterior(state, 1.0, nullptr), doctest::Contains("prior"), NumericalError);
}

TEST_CASE("f and b sensors require an inverse problem") {
  std::mt19937_64 rng(6);
  BiFidelityDataset data = BiFidelityDataset::with_dim(1);
  data.hifi_f.append(Vector::Constant(1, 0.5), 0.0, 0.01);
  CHECK_THROWS_AS(BnnPosterior(ProblemSpec::regression(exact_solution(Generator::Fn1dSinSq).domain),
                               comp_for(1, rng), data),
                  ConfigError);
}
