#include "mfbnn/active.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include "mfbnn/errors.hpp"
#include "mfbnn/rng.hpp"

namespace mfbnn {

Index acquire(const Vector& variances) {
  if (variances.size() == 0) throw ConfigError("acquire: empty candidate set");
  Index best = 0;
  for (Index i = 1; i < variances.size(); ++i)
    if (variances[i] > variances[best]) best = i;
  return best;
}

bool should_stop(const Vector& variances, double threshold) {
  if (variances.size() == 0) {
    std::cerr << "warning: empty candidate set, stopping\n";
    return true;
  }
  return variances.maxCoeff() < threshold;
}

namespace {

double noisy(const std::function<double(const Vector&)>& truth, const Vector& x, double noise, std::uint64_t seed) {
  if (!truth) throw ConfigError("oracle: no truth function for this observation type");
  const double value = truth(x);
  if (!std::isfinite(value)) throw NumericalError("oracle: non-finite truth value");
  Rng rng(seed);
  return value + noise * standard_normal(rng, 1)[0];
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector truth_on(const std::function<double(const Vector&)>& fn, const Matrix& xs) {
  Vector out(xs.rows());
  for (Index i = 0; i < xs.rows(); ++i) out[i] = fn(xs.row(i).transpose());
  return out;
}

}  // namespace

double Oracle::observe_u(const Vector& x, int round) const {
  return noisy(u, x, u_noise, derive_seed(derive_seed(seed, "oracle", static_cast<std::uint64_t>(round)), "u"));
}

double Oracle::observe_f(const Vector& x, int round) const {
  return noisy(f, x, f_noise, derive_seed(derive_seed(seed, "oracle", static_cast<std::uint64_t>(round)), "f"));
}

Oracle generator_oracle(Generator g, const GeneratorSpec& spec, std::uint64_t seed) {
  const ExactSolution ex = exact_solution(g);
  return Oracle{ex.u_high, ex.f, spec.hifi_noise, spec.f_noise, seed};
}

Matrix candidate_grid(const Domain& domain, Index count) {
  if (count < 1) throw ConfigError("candidate grid: count must be >= 1");
  const double d = static_cast<double>(domain.dim());
  const Index per_axis = std::max<Index>(2, static_cast<Index>(std::lround(std::pow(static_cast<double>(count), 1.0 / d))));
  return domain.grid(per_axis);
}

ActiveState run_active(const ActiveSetup& setup, const BiFidelityDataset& initial, const Oracle& oracle) {
  setup.active.validate();
  const ProblemSpec& problem = setup.mbnn.problem;
  const bool inverse = problem.is_inverse();
  if (setup.candidates.rows() == 0) throw ConfigError("active: empty candidate grid");
  if (inverse && !oracle.f) throw ConfigError("active: inverse problems need a forcing oracle");

  const Vector u_true = truth_on(oracle.u, setup.candidates);
  const Vector f_true = inverse ? truth_on(oracle.f, setup.candidates) : Vector();
  const Index dim = problem.space_dim();

  ActiveState state;
  state.dataset = initial;
  state.lowfi = setup.mbnn.reuse_lowfi;
  for (int round = 1; round <= setup.active.max_rounds; ++round) {
    state.round = round;
    MbnnConfig cfg = setup.mbnn;
    cfg.seed = derive_seed(setup.mbnn.seed, "round", static_cast<std::uint64_t>(round));
    cfg.reuse_lowfi = state.lowfi;
    if (setup.log_csv) cfg.output_dir = setup.log_csv->parent_path() / ("round_" + std::to_string(round));
    MbnnResult fit = run_mbnn(cfg, state.dataset);
    state.lowfi = fit.lowfi;

    const Predictor predictor(problem, fit.composition, fit.samples);
    const PredictionTable pu = predictor.predict(setup.candidates);
    const Vector var_u = pu.std.array().square();

    ActiveRecord rec;
    rec.round = round;
    rec.round_seed = cfg.seed;
    rec.n_hifi = state.dataset.hifi_count();
    rec.sigma = fit.sigma;
    rec.max_var = var_u.maxCoeff();
    rec.error_u = error_E(to_std(u_true), to_std(pu.mean));
    rec.rmse_u = rmse(to_std(u_true), to_std(pu.mean));
    rec.lambdas = predictor.lambdas();
    Vector var_f;
    if (inverse) {
      const PredictionTable pf = predictor.predict_f(setup.candidates);
      var_f = pf.std.array().square();
      rec.max_var_f = var_f.maxCoeff();
      rec.error_f = error_E(to_std(f_true), to_std(pf.mean));
    }

    rec.stopped = setup.active.stop_rule && should_stop(var_u, setup.active.threshold);
    if (!rec.stopped) {
      const Vector xu = setup.candidates.row(acquire(var_u)).transpose();
      rec.x_star = xu;
      std::optional<Vector> xf;
      if (inverse) {
        xf = setup.candidates.row(acquire(var_f)).transpose();
        rec.x_star_f = xf;
      }
      try {
        const double yu = oracle.observe_u(xu, round);
        const std::optional<double> yf = xf ? std::optional<double>(oracle.observe_f(*xf, round)) : std::nullopt;
        state.dataset.hifi_u.append(xu, yu, oracle.u_noise);
        if (yf) state.dataset.hifi_f.append(*xf, *yf, oracle.f_noise);
      } catch (const std::exception& e) {
        state.error = std::string("oracle failed in round ") + std::to_string(round) + ": " + e.what();
        rec.x_star.reset();
        rec.x_star_f.reset();
      }
    }
    state.history.push_back(std::move(rec));
    if (setup.log_csv) write_active_csv(*setup.log_csv, state.history, dim);
    if (state.error || state.history.back().stopped) break;
  }
  return state;
}

void write_active_csv(const std::filesystem::path& path, const std::vector<ActiveRecord>& history, Index dim) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open for writing: " + path.string());
  const auto coords = [dim](const std::string& base) {
    if (dim == 1) return base;
    std::string out;
    for (Index j = 0; j < dim; ++j) out += (j ? "," : "") + base + std::to_string(j + 1);
    return out;
  };
  const auto point = [dim](const std::optional<Vector>& x) {
    std::string out;
    for (Index j = 0; j < dim; ++j) out += (j ? "," : "") + (x ? format_double((*x)[j]) : std::string());
    return out;
  };
  const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  os << "round," << coords("x_star") << ",max_var,E_u,E_f,k_mean,k_std," << coords("x_star_f")
     << ",n_hifi,rmse_u,sigma,stopped\n";
  for (const ActiveRecord& r : history) {
    std::optional<double> k_mean, k_std;
    if (!r.lambdas.empty()) {
      k_mean = r.lambdas.front().mean;
      k_std = r.lambdas.front().std;
    }
    os << r.round << "," << point(r.x_star) << "," << format_double(r.max_var) << "," << format_double(r.error_u) << ","
       << opt(r.error_f) << "," << opt(k_mean) << "," << opt(k_std) << "," << point(r.x_star_f) << "," << r.n_hifi
       << "," << format_double(r.rmse_u) << "," << format_double(r.sigma) << "," << (r.stopped ? 1 : 0) << "\n";
  }
}

}  // namespace mfbnn
