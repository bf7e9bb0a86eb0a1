#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "mfbnn/data.hpp"
#include "mfbnn/errors.hpp"
#include "oracles.hpp"

using namespace mfbnn;

namespace {

Vector at(std::initializer_list<double> v) {
  Vector x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("mfbnn_test_" + name);
}

}  // namespace

TEST_CASE("sin-squared pair at the origin and at pi/16") {
  const ExactSolution e = exact_solution(Generator::Fn1dSinSq);
  CHECK(e.u_low(at({0.0})) == 0.0);
  CHECK(e.u_high(at({0.0})) == 0.0);
  const double x = std::numbers::pi / 16;
  CHECK(e.u_low(at({x})) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(e.u_high(at({x})) == doctest::Approx(x - std::sqrt(2.0)).epsilon(1e-14));
  CHECK(e.u_high(at({x})) == doctest::Approx(-1.21786).epsilon(1e-5));
}

TEST_CASE("biased pair differs by a linear correction") {
  const ExactSolution e = exact_solution(Generator::Fn1dBias);
  for (double x : {0.0, 0.3, 0.77, 1.0}) {
    const double s = std::sin(8 * std::numbers::pi * x);
    CHECK(e.u_low(at({x})) == doctest::Approx((x - std::sqrt(2.0)) * s * s + x - 2).epsilon(1e-14));
    CHECK(e.u_high(at({x})) - e.u_low(at({x})) == doctest::Approx(2 - x).epsilon(1e-12));
  }
}

TEST_CASE("4D pair at (1, 1, 0.25, 1)") {
  const ExactSolution e = exact_solution(Generator::Fn4d);
  const Vector x = at({1, 1, 0.25, 1});
  CHECK(e.u_high(x) == doctest::Approx(0.49453).epsilon(1e-4));
  CHECK(e.u_low(x) == doctest::Approx(0.09343).epsilon(1e-3));
  CHECK(e.u_high(x) == doctest::Approx(0.5 * (0.1 * std::exp(2.0) + 0.25)).epsilon(1e-12));
}

TEST_CASE("generated forcing satisfies the 1D operator identity") {
  // Exact derivatives of (x - sqrt2) sin^2(8 pi x) by hyper-dual arithmetic.
  using oracle::HyperDual;
  const ExactSolution e = exact_solution(Generator::Inv1d);
  const double pi = std::numbers::pi;
  double worst = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double x = i / 400.0;
    const HyperDual hx = HyperDual::variable(x);
    const HyperDual s = oracle::sin(HyperDual(8 * pi) * hx);
    const HyperDual u = (hx - HyperDual(std::sqrt(2.0))) * s * s;
    const double f = u.d / (192 * pi * pi) - 1.0 / (24 * pi) * u.a * u.b;
    worst = std::max(worst, std::abs(f - e.f(at({x}))));
    CHECK(u.a == doctest::Approx(e.u_high(at({x}))).epsilon(1e-12));
  }
  CHECK(worst < 1e-8);
  CHECK(e.f(at({0.0})) == doctest::Approx(-2 * std::sqrt(2.0) / 3).epsilon(1e-12));
}

TEST_CASE("generated forcing satisfies the 2D operator identity") {
  using oracle::HyperDual;
  const ExactSolution e = exact_solution(Generator::Inv2d);
  const double pi = std::numbers::pi;
  double worst = 0.0;
  for (int i = 0; i <= 40; ++i) {
    for (int j = 0; j <= 40; ++j) {
      const double x = -1 + i / 20.0, y = -1 + j / 20.0;
      const HyperDual ux = oracle::sin(HyperDual(2 * pi) * HyperDual::variable(x)) * std::sin(2 * pi * y);
      const HyperDual uy = oracle::sin(HyperDual(2 * pi) * HyperDual::variable(y)) * std::sin(2 * pi * x);
      const double f = 0.01 * (ux.d + uy.d) - ux.a * ux.a;
      worst = std::max(worst, std::abs(f - e.f(at({x, y}))));
    }
  }
  CHECK(worst < 1e-8);
  CHECK(e.f(at({0.25, 0.25})) == doctest::Approx(-0.08 * pi * pi - 1).epsilon(1e-12));
  CHECK(e.f(at({0.0, 0.0})) == 0.0);
}

TEST_CASE("generator defaults follow the reported experiments") {
  const BiFidelityDataset f1 = generate(default_generator_spec(Generator::Fn1dSinSq));
  CHECK(f1.lofi.size() == 100);
  CHECK(f1.hifi_u.size() == 14);
  CHECK(f1.hifi_f.empty());

  const BiFidelityDataset i1 = generate(default_generator_spec(Generator::Inv1d));
  CHECK(i1.lofi.size() == 500);
  CHECK(i1.hifi_u.size() == 12);
  CHECK(i1.hifi_f.size() == 10);
  const Index n = i1.hifi_u.size();
  CHECK(i1.hifi_u.x(n - 2, 0) == 0.0);
  CHECK(i1.hifi_u.x(n - 1, 0) == 1.0);

  GeneratorSpec s2 = default_generator_spec(Generator::Inv2d);
  s2.n_lofi = 2000;
  const BiFidelityDataset i2 = generate(s2);
  CHECK(i2.hifi_u.size() == 10 + 80);
  CHECK(i2.hifi_f.size() == 20);
  const Domain dom = exact_solution(Generator::Inv2d).domain;
  for (Index r = 10; r < i2.hifi_u.size(); ++r) CHECK(dom.on_boundary(i2.hifi_u.x.row(r).transpose()));
}

TEST_CASE("generation is deterministic and seed-dependent") {
  GeneratorSpec s = default_generator_spec(Generator::Fn4d);
  s.n_lofi = 300;
  const BiFidelityDataset a = generate(s);
  const BiFidelityDataset b = generate(s);
  CHECK(a.lofi.x == b.lofi.x);
  CHECK(a.hifi_u.y == b.hifi_u.y);
  s.seed = 1;
  CHECK(generate(s).hifi_u.x != a.hifi_u.x);
}

TEST_CASE("injected noise has the configured scale") {
  GeneratorSpec s = default_generator_spec(Generator::Fn1dSinSq);
  s.n_lofi = 1;
  s.n_hifi_u = 100000;
  s.hifi_noise = 0.01;
  s.hifi_layout = Layout::Random;
  const BiFidelityDataset d = generate(s);
  const ExactSolution e = exact_solution(Generator::Fn1dSinSq);
  double sum = 0, sum2 = 0;
  for (Index i = 0; i < d.hifi_u.size(); ++i) {
    const double r = d.hifi_u.y[i] - e.u_high(d.hifi_u.x.row(i).transpose());
    sum += r;
    sum2 += r * r;
  }
  const double n = static_cast<double>(d.hifi_u.size());
  const double sd = std::sqrt(sum2 / n - (sum / n) * (sum / n));
  CHECK(std::abs(sd / 0.01 - 1) < 0.02);
}

TEST_CASE("unknown generator names are configuration errors") {
  CHECK_THROWS_AS(parse_generator("fn2d"), ConfigError);
  CHECK(parse_generator("inv2d") == Generator::Inv2d);
  CHECK_THROWS_AS(parse_layout("sobol"), ConfigError);
}

TEST_CASE("PICP edge cases") {
  const std::vector<double> mean{0.1, -0.2, 0.3};
  const std::vector<double> std{0.5, 0.1, 0.2};
  CHECK(picp(mean, mean, std) == 1.0);
  std::vector<double> far(3), edge(3);
  for (int i = 0; i < 3; ++i) {
    far[i] = mean[i] + 3 * std[i];
    edge[i] = mean[i] - 2 * std[i];
  }
  CHECK(picp(far, mean, std) == 0.0);
  CHECK(picp(edge, mean, std) == 1.0);
  CHECK_THROWS_AS(picp(mean, mean, std::vector<double>{1.0}), ConfigError);
}

TEST_CASE("PICP of a calibrated Gaussian band is about 95.45 percent") {
  std::mt19937_64 rng(11);
  const Index n = 200000;
  const Vector z = oracle::random_vector(rng, n);
  std::vector<double> exact(n), mean(n, 0.0), sd(n, 0.3);
  for (Index i = 0; i < n; ++i) exact[static_cast<std::size_t>(i)] = 0.3 * z[i];
  const double p = picp(exact, mean, sd);
  const double se = std::sqrt(0.9545 * 0.0455 / static_cast<double>(n));
  CHECK(std::abs(p - 0.9545) < 4 * se);
}

TEST_CASE("error E is the root sum of squares divided by N") {
  CHECK(error_E(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == 0.0);
  CHECK(error_E(std::vector<double>{1, 1, 1, 1}, std::vector<double>{0, 0, 0, 0}) == doctest::Approx(0.5));
  std::mt19937_64 rng(3);
  const Vector a = oracle::random_vector(rng, 57), b = oracle::random_vector(rng, 57);
  double acc = 0;
  for (Index i = 0; i < 57; ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  const double naive = std::sqrt(acc) / 57.0;
  CHECK(std::abs(error_E(std::span(a.data(), 57), std::span(b.data(), 57)) - naive) < 1e-12);
  CHECK_THROWS_AS(error_E(std::vector<double>{1}, std::vector<double>{1, 2}), ConfigError);
}

TEST_CASE("sensor CSV round-trips and reports schema problems") {
  GeneratorSpec s = default_generator_spec(Generator::Inv2d);
  s.n_lofi = 50;
  const BiFidelityDataset d = generate(s);
  const auto lo = temp_path("lofi.csv"), hu = temp_path("hifi_u.csv"), hf = temp_path("hifi_f.csv");
  write_sensor_csv(lo, d.lofi, "u");
  write_sensor_csv(hu, d.hifi_u, "u");
  write_sensor_csv(hf, d.hifi_f, "f");
  const BiFidelityDataset r = load_bifidelity_csv({lo, hu, hf, std::nullopt});
  CHECK(r.dim == 2);
  CHECK(r.lofi.x == d.lofi.x);
  CHECK(r.hifi_u.y == d.hifi_u.y);
  CHECK(r.hifi_f.sigma == d.hifi_f.sigma);

  const auto bad = temp_path("bad.csv");
  {
    std::ofstream os(bad);
    os << "x1,value,sigma\n0.1,0.2,0.01\n";
  }
  CHECK_THROWS_WITH_AS(read_sensor_csv(bad, "u"), doctest::Contains("u"), ConfigError);
  {
    std::ofstream os(bad);
    os << "x1,u,sigma\n0.1,0.2,0.01\n0.3,abc,0.01\n";
  }
  CHECK_THROWS_WITH_AS(read_sensor_csv(bad, "u"), doctest::Contains(":3"), ConfigError);
  {
    std::ofstream os(bad);
    os << "x1,u,sigma\n";
  }
  CHECK(read_sensor_csv(bad, "u").empty());
  for (const auto& p : {lo, hu, hf, bad}) std::filesystem::remove(p);
}

TEST_CASE("datasets with non-positive high-fidelity noise are rejected") {
  BiFidelityDataset d = BiFidelityDataset::with_dim(1);
  d.hifi_u.append(Vector::Constant(1, 0.5), 1.0, 0.0);
  CHECK_THROWS_AS(d.validate(), ConfigError);
}
