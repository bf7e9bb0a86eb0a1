#include <doctest.h>

#include <cmath>
#include <filesystem>

#include <Eigen/LU>

#include "mfbnn/errors.hpp"
#include "mfbnn/hmc.hpp"
#include "mfbnn/posterior.hpp"
#include "oracles.hpp"

using namespace mfbnn;

namespace {

LogDensityFn standard_gaussian() {
  return [](const Vector& x, Vector* g) {
    if (g) *g = -x;
    return -0.5 * x.squaredNorm();
  };
}

LogDensityFn correlated_gaussian(const Eigen::Matrix2d& cov) {
  const Eigen::Matrix2d prec = cov.inverse();
  return [prec](const Vector& x, Vector* g) {
    const Vector px = prec * x;
    if (g) *g = -px;
    return -0.5 * x.dot(px);
  };
}

}  // namespace

TEST_CASE("zero gradient field is a pure drift") {
  const LogDensityFn flat = [](const Vector& x, Vector* g) {
    if (g) *g = Vector::Zero(x.size());
    return 0.0;
  };
  const Vector x = (Vector(2) << 0.1, -0.3).finished();
  const Vector p = (Vector(2) << 1.0, 2.0).finished();
  const LeapfrogResult r = leapfrog(x, p, 0.05, 7, flat);
  CHECK(!r.divergent);
  CHECK((r.end.theta - (x + 7 * 0.05 * p)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(r.end.momentum == p);
}

TEST_CASE("harmonic oscillator energy is conserved") {
  const LeapfrogResult r = leapfrog(Vector::Constant(1, 1.0), Vector::Constant(1, 0.5), 0.01, 1000,
                                    standard_gaussian());
  const double h0 = 0.5 * 1.0 + 0.5 * 0.25;
  CHECK(std::abs(hamiltonian(r.end) - h0) < 1e-3);
}

TEST_CASE("leapfrog is time reversible") {
  std::mt19937_64 rng(1);
  const LogDensityFn target = correlated_gaussian((Eigen::Matrix2d() << 1, 0.9, 0.9, 1).finished());
  const Vector x = oracle::random_vector(rng, 2), p = oracle::random_vector(rng, 2);
  const LeapfrogResult fwd = leapfrog(x, p, 0.05, 50, target);
  const LeapfrogResult back = leapfrog(fwd.end.theta, -fwd.end.momentum, 0.05, 50, target);
  CHECK((back.end.theta - x).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((back.end.momentum + p).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("non-finite states are flagged as divergent") {
  const LogDensityFn blowup = [](const Vector& x, Vector* g) {
    if (g) *g = x * 1e300;
    return x.squaredNorm() * 1e300;
  };
  CHECK(leapfrog(Vector::Ones(1), Vector::Ones(1), 1.0, 10, blowup).divergent);
}

TEST_CASE("10-dimensional standard Gaussian") {
  HmcConfig c;
  c.burn_in = 1000;
  c.samples = 2000;
  const Chain chain = sample(c, standard_gaussian(), Vector::Constant(10, 2.0), 21);
  MESSAGE("acceptance " << chain.acceptance_rate << " step " << chain.final_step);
  for (Index j = 0; j < 10; ++j) {
    const Vector col = chain.states.col(j);
    const double ess = oracle::effective_sample_size(col);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().mean();
    CHECK(std::abs(mean) < 4.0 / std::sqrt(ess));
    CHECK(std::abs(var - 1.0) < 0.15);
  }
}

TEST_CASE("2-dimensional Gaussian with correlation 0.9") {
  const Eigen::Matrix2d cov = (Eigen::Matrix2d() << 1, 0.9, 0.9, 1).finished();
  HmcConfig c;
  c.burn_in = 1000;
  c.samples = 2000;
  const Chain chain = sample(c, correlated_gaussian(cov), Vector::Zero(2), 22);
  const Eigen::RowVector2d mean = chain.states.colwise().mean();
  const Matrix centered = chain.states.rowwise() - mean;
  const Matrix emp = centered.transpose() * centered / static_cast<double>(chain.states.rows());
  for (Index j = 0; j < 2; ++j) {
    const double ess = oracle::effective_sample_size(chain.states.col(j));
    CHECK(std::abs(mean[j]) < 4.0 / std::sqrt(ess));
  }
  CHECK(((emp - cov).array().abs() / cov.array().abs()).maxCoeff() < 0.2);
}

TEST_CASE("acceptance approaches one as the step shrinks") {
  HmcConfig c;
  c.adapt = false;
  c.burn_in = 10;
  c.samples = 300;
  c.leapfrog_steps = 10;
  const LogDensityFn target = correlated_gaussian((Eigen::Matrix2d() << 1, 0.9, 0.9, 1).finished());
  double previous = 0.0;
  for (double step : {0.4, 0.1, 0.001}) {
    c.initial_step = step;
    const Chain chain = sample(c, target, Vector::Zero(2), 3);
    CHECK(chain.acceptance_rate >= previous - 0.02);
    previous = chain.acceptance_rate;
  }
  CHECK(previous > 0.99);
}

TEST_CASE("sampling the prior recovers the layer scales") {
  const MlpSpec bnn{{1, 50, 1}};
  BnnPosterior post(ProblemSpec::regression(exact_solution(Generator::Fn1dSinSq).domain),
                    SurrogateComposition(std::nullopt, bnn, 1), BiFidelityDataset::with_dim(1));
  const double sigma = 1.0;
  const LogDensityFn target = [&](const Vector& s, Vector* g) { return post.log_posterior(s, sigma, g); };
  HmcConfig c;
  c.burn_in = 300;
  c.samples = 1000;
  const Chain chain = sample(c, target, Vector::Zero(post.dim()), 4);
  const PriorSpec prior = post.prior(sigma);
  for (const LayerSlot& slot : layer_layout(bnn)) {
    const Matrix w = chain.states.middleCols(slot.weight_offset, slot.in * slot.out);
    const double sd = std::sqrt(w.array().square().mean());
    const double expected = sigma / std::sqrt(static_cast<double>(slot.in));
    MESSAGE("layer with fan-in " << slot.in << ": sample stddev " << sd << ", expected " << expected);
    CHECK(std::abs(sd / expected - 1) < 0.15);
  }
  CHECK(prior.weight_scale(0) == 1.0);
}

TEST_CASE("chains are reproducible from the seed") {
  HmcConfig c;
  c.burn_in = 50;
  c.samples = 50;
  const Chain a = sample(c, standard_gaussian(), Vector::Ones(3), 8);
  const Chain b = sample(c, standard_gaussian(), Vector::Ones(3), 8);
  CHECK(a.states == b.states);
  CHECK(a.final_step == b.final_step);
  const Chain d = sample(c, standard_gaussian(), Vector::Ones(3), 9);
  CHECK(a.states != d.states);
}

TEST_CASE("thinning keeps every thin-th state") {
  HmcConfig c;
  c.burn_in = 20;
  c.samples = 30;
  c.thin = 3;
  const Chain chain = sample(c, standard_gaussian(), Vector::Ones(2), 2);
  CHECK(chain.states.rows() == 30);
}

TEST_CASE("very low acceptance aborts") {
  HmcConfig c;
  c.adapt = false;
  c.initial_step = 50.0;
  c.burn_in = 5;
  c.samples = 50;
  const LogDensityFn stiff = [](const Vector& x, Vector* g) {
    if (g) *g = -1e4 * x;
    return -0.5e4 * x.squaredNorm();
  };
  CHECK_THROWS_AS(sample(c, stiff, Vector::Constant(4, 0.01), 1), NumericalError);
}

TEST_CASE("configuration is validated") {
  HmcConfig c;
  c.target_accept = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = HmcConfig{};
  c.samples = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(sample(HmcConfig{}, standard_gaussian(), Vector::Constant(1, NAN), 1), ConfigError);
}

TEST_CASE("sample archives round-trip") {
  HmcConfig c;
  c.burn_in = 10;
  c.samples = 25;
  const Chain chain = sample(c, standard_gaussian(), Vector::Ones(5), 3);
  const PosteriorSamples s = split_chain(chain, 4, {"k"});
  CHECK(s.thetas.cols() == 4);
  CHECK(s.lambdas.cols() == 1);
  const auto path = std::filesystem::temp_directory_path() / "mfbnn_test_samples.bin";
  save_samples(path, s, R"({"note":"test"})");
  std::string extra;
  const PosteriorSamples r = load_samples(path, &extra);
  CHECK(r.thetas == s.thetas);
  CHECK(r.lambdas == s.lambdas);
  CHECK(r.lambda_names == s.lambda_names);
  CHECK(r.acceptance_rate == s.acceptance_rate);
  CHECK(extra.find("test") != std::string::npos);
  std::filesystem::remove(path);
}
