#include "mfbnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "mfbnn/errors.hpp"
#include "mfbnn/rng.hpp"

namespace mfbnn {

using std::numbers::pi;
using std::numbers::sqrt2;

bool Domain::contains(const Vector& x, double tol) const {
  if (x.size() != dim()) return false;
  for (Index i = 0; i < dim(); ++i)
    if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
  return true;
}

bool Domain::on_boundary(const Vector& x, double tol) const {
  if (!contains(x, tol)) return false;
  for (Index i = 0; i < dim(); ++i)
    if (std::abs(x[i] - lower[i]) <= tol || std::abs(x[i] - upper[i]) <= tol) return true;
  return false;
}

Matrix Domain::grid(Index per_axis) const {
  if (per_axis < 1) throw ConfigError("grid: need at least one point per axis");
  Index total = 1;
  for (Index i = 0; i < dim(); ++i) total *= per_axis;
  Matrix out(total, dim());
  for (Index r = 0; r < total; ++r) {
    Index rem = r;
    for (Index i = dim(); i-- > 0;) {
      const Index k = rem % per_axis;
      rem /= per_axis;
      out(r, i) = per_axis == 1 ? 0.5 * (lower[i] + upper[i])
                                : lower[i] + (upper[i] - lower[i]) * static_cast<double>(k) / (per_axis - 1);
    }
  }
  return out;
}

void SensorSet::append(const Vector& at, double value, double noise) {
  if (at.size() != x.cols()) throw ConfigError("SensorSet::append: dimension mismatch");
  const Index n = size();
  x.conservativeResize(n + 1, Eigen::NoChange);
  x.row(n) = at.transpose();
  y.conservativeResize(n + 1);
  y[n] = value;
  sigma.conservativeResize(n + 1);
  sigma[n] = noise;
}

SensorSet SensorSet::with_dim(Index dim) {
  SensorSet s;
  s.x.resize(0, dim);
  return s;
}

BiFidelityDataset BiFidelityDataset::with_dim(Index dim) {
  BiFidelityDataset d;
  d.dim = dim;
  d.lofi = SensorSet::with_dim(dim);
  d.hifi_u = SensorSet::with_dim(dim);
  d.hifi_f = SensorSet::with_dim(dim);
  d.hifi_b = SensorSet::with_dim(dim);
  return d;
}

void BiFidelityDataset::validate(const Domain* domain) const {
  auto check = [&](const SensorSet& s, const char* name, bool strict) {
    if (s.x.rows() != s.size() || s.sigma.size() != s.size() || (s.size() > 0 && s.x.cols() != dim))
      throw ConfigError(std::string("dataset ") + name + ": inconsistent shapes");
    for (Index i = 0; i < s.size(); ++i) {
      if (!std::isfinite(s.y[i]) || !s.x.row(i).allFinite())
        throw ConfigError(std::string("dataset ") + name + ": non-finite entry at row " + std::to_string(i));
      if (!(strict ? s.sigma[i] > 0 : s.sigma[i] >= 0))
        throw ConfigError(std::string("dataset ") + name + ": noise scale must be " + (strict ? "> 0" : ">= 0") +
                          " (row " + std::to_string(i) + ")");
      if (domain && !domain->contains(s.x.row(i).transpose(), 1e-9))
        throw ConfigError(std::string("dataset ") + name + ": location outside the domain (row " +
                          std::to_string(i) + ")");
    }
  };
  check(lofi, "lofi", false);
  check(hifi_u, "hifi_u", true);
  check(hifi_f, "hifi_f", true);
  check(hifi_b, "hifi_b", true);
}

Generator parse_generator(const std::string& name) {
  if (name == "fn1d-sinsq") return Generator::Fn1dSinSq;
  if (name == "fn1d-bias") return Generator::Fn1dBias;
  if (name == "fn4d") return Generator::Fn4d;
  if (name == "inv1d") return Generator::Inv1d;
  if (name == "inv2d") return Generator::Inv2d;
  throw ConfigError("unknown generator '" + name + "'");
}

std::string to_string(Generator g) {
  switch (g) {
    case Generator::Fn1dSinSq: return "fn1d-sinsq";
    case Generator::Fn1dBias: return "fn1d-bias";
    case Generator::Fn4d: return "fn4d";
    case Generator::Inv1d: return "inv1d";
    case Generator::Inv2d: return "inv2d";
  }
  return "?";
}

Layout parse_layout(const std::string& name) {
  if (name == "uniform") return Layout::Uniform;
  if (name == "random") return Layout::Random;
  if (name == "stratified") return Layout::Stratified;
  throw ConfigError("unknown layout '" + name + "'");
}

std::string to_string(Layout l) {
  switch (l) {
    case Layout::Uniform: return "uniform";
    case Layout::Random: return "random";
    case Layout::Stratified: return "stratified";
  }
  return "?";
}

void GeneratorSpec::validate() const {
  if (n_lofi < 0 || n_hifi_u < 0 || n_hifi_f < 0 || n_boundary < 0) throw ConfigError("generator: negative count");
  if (lofi_noise < 0 || hifi_noise <= 0 || f_noise <= 0) throw ConfigError("generator: invalid noise scale");
}

GeneratorSpec default_generator_spec(Generator g) {
  GeneratorSpec s;
  s.name = g;
  switch (g) {
    case Generator::Fn1dSinSq:
      break;
    case Generator::Fn1dBias:
      s.lofi_noise = 0.05;
      break;
    case Generator::Fn4d:
      s.n_lofi = 25000;
      s.n_hifi_u = 150;
      s.lofi_layout = Layout::Random;
      s.hifi_layout = Layout::Random;
      break;
    case Generator::Inv1d:
      s.n_lofi = 500;
      s.n_hifi_u = 10;
      s.n_hifi_f = 10;
      s.n_boundary = 2;
      s.hifi_layout = Layout::Random;
      break;
    case Generator::Inv2d:
      s.n_lofi = 6000;
      s.n_hifi_u = 10;
      s.n_hifi_f = 20;
      s.n_boundary = 20;
      s.lofi_layout = Layout::Random;
      s.hifi_layout = Layout::Random;
      break;
  }
  return s;
}

namespace {

Domain box(Index dim, double lo, double hi) { return {Vector::Constant(dim, lo), Vector::Constant(dim, hi)}; }

double fn4d_high(const Vector& x) {
  return 0.5 * (0.1 * std::exp(x[0] + x[1]) - x[3] * std::sin(12 * pi * x[2]) + x[2]);
}

// u = (x - sqrt2) sin^2(8 pi x) and its first two derivatives, in closed form.
double inv1d_u(double x) {
  const double s = std::sin(8 * pi * x);
  return (x - sqrt2) * s * s;
}
double inv1d_ux(double x) { return std::pow(std::sin(8 * pi * x), 2) + (x - sqrt2) * 8 * pi * std::sin(16 * pi * x); }
double inv1d_uxx(double x) { return 16 * pi * std::sin(16 * pi * x) + 128 * pi * pi * (x - sqrt2) * std::cos(16 * pi * x); }

double inv2d_u(const Vector& x) { return std::sin(2 * pi * x[0]) * std::sin(2 * pi * x[1]); }

}  // namespace

ExactSolution exact_solution(Generator g) {
  ExactSolution e;
  switch (g) {
    case Generator::Fn1dSinSq:
      e.domain = box(1, 0.0, 1.0);
      e.u_low = [](const Vector& x) { return std::sin(8 * x[0]); };
      e.u_high = [](const Vector& x) { return (x[0] - sqrt2) * std::pow(std::sin(8 * x[0]), 2); };
      break;
    case Generator::Fn1dBias:
      e.domain = box(1, 0.0, 1.0);
      e.u_low = [](const Vector& x) { return (x[0] - sqrt2) * std::pow(std::sin(8 * pi * x[0]), 2) + x[0] - 2; };
      e.u_high = [](const Vector& x) {
        const double ul = (x[0] - sqrt2) * std::pow(std::sin(8 * pi * x[0]), 2) + x[0] - 2;
        return ul - x[0] + 2;
      };
      break;
    case Generator::Fn4d:
      e.domain = box(4, 0.0, 1.0);
      e.u_high = fn4d_high;
      e.u_low = [](const Vector& x) { return 1.2 * fn4d_high(x) - 0.5; };
      break;
    case Generator::Inv1d:
      e.domain = box(1, 0.0, 1.0);
      e.u_low = [](const Vector& x) { return std::sin(8 * pi * x[0]); };
      e.u_high = [](const Vector& x) { return inv1d_u(x[0]); };
      e.f = [](const Vector& x) {
        const double k = 1.0;
        return inv1d_uxx(x[0]) / (192 * pi * pi) - k / (24 * pi) * inv1d_u(x[0]) * inv1d_ux(x[0]);
      };
      e.unknowns = {1.0};
      break;
    case Generator::Inv2d:
      e.domain = box(2, -1.0, 1.0);
      e.u_low = [](const Vector& x) { return 0.8 * inv2d_u(x) + 0.2; };
      e.u_high = inv2d_u;
      e.f = [](const Vector& x) {
        const double k = 1.0, lambda = 0.01;
        const double u = inv2d_u(x);
        return lambda * (-8 * pi * pi * u) - k * u * u;
      };
      e.unknowns = {1.0};
      break;
  }
  return e;
}

Matrix sample_locations(const Domain& domain, Index n, Layout layout, std::uint64_t seed) {
  if (n < 0) throw ConfigError("sample_locations: negative count");
  const Index d = domain.dim();
  if (layout == Layout::Uniform) {
    if (d == 1) {
      Matrix out(n, 1);
      for (Index i = 0; i < n; ++i)
        out(i, 0) = n == 1 ? 0.5 * (domain.lower[0] + domain.upper[0])
                           : domain.lower[0] + (domain.upper[0] - domain.lower[0]) * static_cast<double>(i) / (n - 1);
      return out;
    }
    const auto side = static_cast<Index>(std::llround(std::pow(static_cast<double>(n), 1.0 / d)));
    Index total = 1;
    for (Index i = 0; i < d; ++i) total *= side;
    if (total != n)
      throw ConfigError("uniform layout in " + std::to_string(d) + "D needs a perfect power count, got " +
                        std::to_string(n));
    return domain.grid(side);
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix out(n, d);
  if (layout == Layout::Stratified) {
    std::vector<Index> strata(static_cast<std::size_t>(n));
    for (Index j = 0; j < d; ++j) {
      std::iota(strata.begin(), strata.end(), Index{0});
      std::shuffle(strata.begin(), strata.end(), rng);
      for (Index i = 0; i < n; ++i) {
        const double t = (static_cast<double>(strata[static_cast<std::size_t>(i)]) + u(rng)) / static_cast<double>(n);
        out(i, j) = domain.lower[j] + (domain.upper[j] - domain.lower[j]) * t;
      }
    }
    return out;
  }
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) out(i, j) = domain.lower[j] + (domain.upper[j] - domain.lower[j]) * u(rng);
  return out;
}

namespace {

void fill(SensorSet& set, const Matrix& at, const std::function<double(const Vector&)>& truth, double noise,
          std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> eps(0.0, 1.0);
  for (Index i = 0; i < at.rows(); ++i) {
    const Vector x = at.row(i).transpose();
    set.append(x, truth(x) + noise * eps(rng), noise);
  }
}

Matrix boundary_locations(const Domain& domain, Index n_boundary) {
  if (n_boundary == 0) return Matrix(0, domain.dim());
  if (domain.dim() == 1) {
    if (n_boundary != 2) throw ConfigError("1D boundary sensors: expected 0 or 2, got " + std::to_string(n_boundary));
    Matrix out(2, 1);
    out << domain.lower[0], domain.upper[0];
    return out;
  }
  if (domain.dim() != 2) throw ConfigError("boundary sensors are only defined for 1D and 2D domains");
  // n points per side at the midpoints of n equal sub-intervals (no shared corners).
  Matrix out(4 * n_boundary, 2);
  Index r = 0;
  for (int side = 0; side < 4; ++side) {
    for (Index i = 0; i < n_boundary; ++i) {
      const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(n_boundary);
      const double xs = domain.lower[0] + t * (domain.upper[0] - domain.lower[0]);
      const double ys = domain.lower[1] + t * (domain.upper[1] - domain.lower[1]);
      switch (side) {
        case 0: out.row(r++) << xs, domain.lower[1]; break;
        case 1: out.row(r++) << xs, domain.upper[1]; break;
        case 2: out.row(r++) << domain.lower[0], ys; break;
        default: out.row(r++) << domain.upper[0], ys; break;
      }
    }
  }
  return out;
}

}  // namespace

BiFidelityDataset generate(const GeneratorSpec& spec) {
  spec.validate();
  const ExactSolution exact = exact_solution(spec.name);
  const Domain& dom = exact.domain;
  BiFidelityDataset data = BiFidelityDataset::with_dim(dom.dim());

  fill(data.lofi, sample_locations(dom, spec.n_lofi, spec.lofi_layout, derive_seed(spec.seed, "lofi-x")), exact.u_low,
       spec.lofi_noise, derive_seed(spec.seed, "lofi-noise"));

  const Matrix u_at = spec.hifi_u_at ? *spec.hifi_u_at
                                     : sample_locations(dom, spec.n_hifi_u, spec.hifi_layout,
                                                        derive_seed(spec.seed, "hifi-u-x"));
  const Matrix b_at = boundary_locations(dom, spec.n_boundary);
  Matrix stacked(u_at.rows() + b_at.rows(), dom.dim());
  stacked.topRows(u_at.rows()) = u_at;
  stacked.bottomRows(b_at.rows()) = b_at;
  fill(data.hifi_u, stacked, exact.u_high, spec.hifi_noise, derive_seed(spec.seed, "hifi-u-noise"));

  if (exact.f) {
    const Matrix f_at = spec.hifi_f_at ? *spec.hifi_f_at
                                       : sample_locations(dom, spec.n_hifi_f, spec.hifi_layout,
                                                          derive_seed(spec.seed, "hifi-f-x"));
    fill(data.hifi_f, f_at, exact.f, spec.f_noise, derive_seed(spec.seed, "hifi-f-noise"));
  } else if (spec.n_hifi_f > 0 || spec.hifi_f_at) {
    throw ConfigError("generator " + to_string(spec.name) + " has no forcing term");
  }
  data.validate(&dom);
  return data;
}

namespace {

void check_lengths(std::size_t a, std::size_t b, std::size_t c, const char* what) {
  if (a != b || a != c) throw ConfigError(std::string(what) + ": length mismatch");
  if (a == 0) throw ConfigError(std::string(what) + ": empty input");
}

}  // namespace

double picp(std::span<const double> exact, std::span<const double> mean, std::span<const double> std) {
  check_lengths(exact.size(), mean.size(), std.size(), "picp");
  std::size_t covered = 0;
  for (std::size_t i = 0; i < exact.size(); ++i)
    if (exact[i] >= mean[i] - 2 * std[i] && exact[i] <= mean[i] + 2 * std[i]) ++covered;
  return static_cast<double>(covered) / static_cast<double>(exact.size());
}

double error_E(std::span<const double> exact, std::span<const double> pred) {
  check_lengths(exact.size(), pred.size(), pred.size(), "error_E");
  double acc = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) acc += (exact[i] - pred[i]) * (exact[i] - pred[i]);
  return std::sqrt(acc) / static_cast<double>(exact.size());
}

double rmse(std::span<const double> exact, std::span<const double> pred) {
  check_lengths(exact.size(), pred.size(), pred.size(), "rmse");
  double acc = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) acc += (exact[i] - pred[i]) * (exact[i] - pred[i]);
  return std::sqrt(acc / static_cast<double>(exact.size()));
}

void write_sensor_csv(const std::filesystem::path& path, const SensorSet& set, const std::string& value_name) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open for writing: " + path.string());
  const Index d = set.x.cols();
  for (Index j = 0; j < d; ++j) os << "x" << (j + 1) << ",";
  os << value_name << ",sigma\n";
  char buf[64];
  for (Index i = 0; i < set.size(); ++i) {
    for (Index j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,", set.x(i, j));
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", set.y[i], set.sigma[i]);
    os << buf;
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(line);
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t\r");
    const auto e = item.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : item.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

SensorSet read_sensor_csv(const std::filesystem::path& path, const std::string& value_name) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw ConfigError(path.string() + ": missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);
  if (header.size() < 3) throw ConfigError(path.string() + ": header needs x1..xd," + value_name + ",sigma");
  const Index d = static_cast<Index>(header.size()) - 2;
  for (Index j = 0; j < d; ++j)
    if (header[j] != "x" + std::to_string(j + 1))
      throw ConfigError(path.string() + ": expected column 'x" + std::to_string(j + 1) + "', found '" + header[j] + "'");
  if (header[d] != value_name) throw ConfigError(path.string() + ": missing required column '" + value_name + "'");
  if (header[d + 1] != "sigma") throw ConfigError(path.string() + ": missing required column 'sigma'");

  SensorSet set = SensorSet::with_dim(d);
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                        " fields, found " + std::to_string(cells.size()));
    std::vector<double> v(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      char* end = nullptr;
      v[j] = std::strtod(cells[j].c_str(), &end);
      if (cells[j].empty() || *end != '\0' || !std::isfinite(v[j]))
        throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": malformed number '" + cells[j] + "'");
    }
    set.append(Eigen::Map<const Vector>(v.data(), d), v[d], v[d + 1]);
  }
  return set;
}

BiFidelityDataset load_bifidelity_csv(const BiFidelityPaths& paths) {
  SensorSet lofi = read_sensor_csv(paths.lofi, "u");
  SensorSet hifi_u = read_sensor_csv(paths.hifi_u, "u");
  const Index d = lofi.x.cols();
  if (hifi_u.x.cols() != d) throw ConfigError("hifi_u and lofi files disagree on the input dimension");
  BiFidelityDataset data = BiFidelityDataset::with_dim(d);
  data.lofi = std::move(lofi);
  data.hifi_u = std::move(hifi_u);
  if (paths.hifi_f) {
    data.hifi_f = read_sensor_csv(*paths.hifi_f, "f");
    if (data.hifi_f.x.cols() != d) throw ConfigError("hifi_f file disagrees on the input dimension");
  }
  if (paths.hifi_b) {
    data.hifi_b = read_sensor_csv(*paths.hifi_b, "b");
    if (data.hifi_b.x.cols() != d) throw ConfigError("hifi_b file disagrees on the input dimension");
  }
  data.validate();
  return data;
}

}  // namespace mfbnn
