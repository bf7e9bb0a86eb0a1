#include "mfbnn/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>

#include "mfbnn/errors.hpp"
#include "mfbnn/rng.hpp"

namespace mfbnn {

void MbnnConfig::validate() const {
  problem.validate();
  map.validate();
  vi.validate();
  hmc.validate();
  for (int w : lowfi_hidden)
    if (w < 1) throw ConfigError("lowfi: hidden widths must be >= 1");
  if (lowfi_hidden.empty()) throw ConfigError("lowfi: at least one hidden layer is required");
  if (bnn_hidden.empty()) throw ConfigError("bnn: at least one hidden layer is required");
  for (int w : bnn_hidden)
    if (w < 1) throw ConfigError("bnn: hidden widths must be >= 1");
  if (fixed_sigma && !(*fixed_sigma > 0)) throw ConfigError("vi: fixed sigma must be > 0");
  if (reuse_lowfi && !multi_fidelity) throw ConfigError("a low-fidelity surrogate cannot be reused in single-fidelity mode");
}

namespace {

template <class F>
auto in_stage(const char* stage, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError& e) {
    throw StageError(stage, e.what());
  } catch (const NumericalError& e) {
    throw StageError(stage, e.what());
  }
}

MlpSpec lowfi_spec(Index dim, const std::vector<int>& hidden) {
  MlpSpec s;
  s.widths.push_back(static_cast<int>(dim));
  s.widths.insert(s.widths.end(), hidden.begin(), hidden.end());
  s.widths.push_back(1);
  return s;
}

}  // namespace

MbnnResult run_mbnn(const MbnnConfig& config, const BiFidelityDataset& data) {
  config.validate();
  const ProblemSpec& problem = config.problem;
  const Index dim = problem.space_dim();
  if (data.dim != dim) throw ConfigError("dataset dimension does not match the problem");
  data.validate(&problem.domain);
  const auto& out = config.output_dir;
  if (out) std::filesystem::create_directories(*out);

  std::optional<LowFiSurrogate> lowfi;
  std::optional<double> map_loss_final;
  if (config.multi_fidelity) {
    if (config.reuse_lowfi) {
      lowfi = config.reuse_lowfi;
    } else {
      const MapResult r = in_stage("map", [&] {
        if (data.lofi.empty()) throw ConfigError("no low-fidelity data");
        return train_map(lowfi_spec(dim, config.lowfi_hidden), data.lofi, config.map,
                         derive_seed(config.seed, "stage-map"));
      });
      lowfi = r.surrogate;
      map_loss_final = r.final_loss;
      if (out) write_loss_csv(*out / "map_log.csv", r.log);
    }
    if (out) save_snapshot(*out / "lowfi.snap", lowfi->params());
  }

  SurrogateComposition comp(lowfi, SurrogateComposition::bnn_spec(dim, config.multi_fidelity, config.bnn_hidden), dim);
  const BnnPosterior post(problem, comp, data);
  const Index n_params = post.param_dim();

  std::optional<ViResult> vi;
  double sigma = 0.0;
  in_stage("vi", [&] {
    if (data.hifi_count() == 0) throw ConfigError("no high-fidelity data; the likelihood would be empty");
    if (config.fixed_sigma) {
      sigma = *config.fixed_sigma;
    } else {
      vi = fit_vi(post, comp.bnn(), config.vi, derive_seed(config.seed, "stage-vi"));
      sigma = vi->sigma;
    }
    return 0;
  });
  if (out && vi) write_vi_csv(*out / "vi_log.csv", vi->trace);

  Vector init;
  if (config.hmc_init == HmcInit::ViMean && vi) {
    init = vi->q.mu;
  } else if (config.hmc_init == HmcInit::PriorDraw) {
    Rng rng(derive_seed(config.seed, "hmc-init"));
    init = post.prior(sigma).layout().stddev(sigma).cwiseProduct(standard_normal(rng, post.dim()));
  } else {
    init = Vector::Zero(post.dim());
    init.head(n_params) = init_params(comp.bnn(), derive_seed(config.seed, "vi-init")).flat();
  }
  const LogDensityFn target = [&](const Vector& s, Vector* g) { return post.log_posterior(s, sigma, g); };
  const Chain chain =
      in_stage("hmc", [&] { return sample(config.hmc, target, init, derive_seed(config.seed, "stage-hmc")); });
  PosteriorSamples samples = split_chain(chain, n_params, problem.unknowns);

  if (out) {
    nlohmann::json extra;
    extra["sigma"] = sigma;
    extra["bnn_widths"] = comp.bnn().widths;
    extra["multi_fidelity"] = config.multi_fidelity;
    extra["problem"] = to_string(problem.kind);
    extra["thin"] = config.hmc.thin;
    extra["burn_in"] = config.hmc.burn_in;
    extra["leapfrog_steps"] = config.hmc.leapfrog_steps;
    extra["burn_in_acceptance"] = chain.burn_in_acceptance;
    save_samples(*out / "samples.bin", samples, extra.dump());
  }
  return MbnnResult{lowfi, map_loss_final, sigma, std::move(vi), std::move(comp), std::move(samples)};
}

namespace {

/// Welford running mean and sum of squared deviations per column.
struct Moments {
  Vector mean;
  Vector m2;
  Index n = 0;

  explicit Moments(Index cols) : mean(Vector::Zero(cols)), m2(Vector::Zero(cols)) {}
  void add(const Vector& row) {
    ++n;
    const Vector delta = row - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta.cwiseProduct(row - mean);
  }
  Vector std() const { return (m2 / static_cast<double>(n)).cwiseMax(0.0).cwiseSqrt(); }
};

}  // namespace

void column_moments(const Matrix& values, Vector& mean, Vector& std) {
  if (values.rows() == 0) throw ConfigError("column_moments: no samples");
  Moments m(values.cols());
  for (Index i = 0; i < values.rows(); ++i) m.add(values.row(i).transpose());
  mean = m.mean;
  std = m.std();
}

Predictor::Predictor(ProblemSpec problem, SurrogateComposition composition, PosteriorSamples samples)
    : problem_(std::move(problem)), comp_(std::move(composition)), samples_(std::move(samples)) {
  if (samples_.count() == 0) throw ConfigError("predictor: no posterior samples");
  if (samples_.thetas.cols() != param_count(comp_.bnn()))
    throw ConfigError("predictor: sample width does not match the BNN");
  if (samples_.lambdas.cols() != static_cast<Index>(problem_.unknowns.size()))
    throw ConfigError("predictor: unknown count does not match the problem");
}

PredictionTable Predictor::predict(const Matrix& xs) const {
  const CompositionInputs prepared = comp_.prepare(xs, 0);
  Moments m(xs.rows());
  for (Index i = 0; i < samples_.count(); ++i) {
    const MlpParams p(comp_.bnn(), samples_.thetas.row(i).transpose());
    m.add(comp_.evaluate(p, prepared, 0).value);
  }
  return {xs, m.mean, m.std(), samples_.count()};
}

PredictionTable Predictor::predict_f(const Matrix& xs) const {
  if (!problem_.is_inverse()) throw ConfigError("predict_f: regression problems have no differential operator");
  const CompositionInputs prepared = comp_.prepare(xs, 2);
  Moments m(xs.rows());
  for (Index i = 0; i < samples_.count(); ++i) {
    const MlpParams p(comp_.bnn(), samples_.thetas.row(i).transpose());
    const Vector k = samples_.lambdas.row(i).transpose();
    m.add(residual_batch(problem_, comp_, p, std::span<const double>(k.data(), k.size()), prepared));
  }
  return {xs, m.mean, m.std(), samples_.count()};
}

std::vector<LambdaSummary> Predictor::lambdas() const {
  std::vector<LambdaSummary> out;
  if (samples_.lambdas.cols() == 0) return out;
  Vector mean, std;
  column_moments(samples_.lambdas, mean, std);
  for (Index j = 0; j < mean.size(); ++j)
    out.push_back({samples_.lambda_names.at(static_cast<std::size_t>(j)), mean[j], std[j]});
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_prediction_csv(const std::filesystem::path& path, const PredictionTable& table) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open for writing: " + path.string());
  const Index d = table.x.cols();
  if (d == 1) {
    os << "x,";
  } else {
    for (Index j = 0; j < d; ++j) os << "x" << (j + 1) << ",";
  }
  os << "mean,std\n";
  for (Index i = 0; i < table.x.rows(); ++i) {
    for (Index j = 0; j < d; ++j) os << format_double(table.x(i, j)) << ",";
    os << format_double(table.mean[i]) << "," << format_double(table.std[i]) << "\n";
  }
}

void write_lambda_csv(const std::filesystem::path& path, const std::vector<LambdaSummary>& lambdas) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open for writing: " + path.string());
  os << "name,mean,std\n";
  for (const LambdaSummary& l : lambdas) os << l.name << "," << format_double(l.mean) << "," << format_double(l.std) << "\n";
}

Matrix read_query_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw ConfigError(path.string() + ": missing header row");
  const auto header = split_csv_line(line);
  Index d = 0;
  if (!header.empty() && header[0] == "x") {
    d = 1;
  } else {
    while (d < static_cast<Index>(header.size()) && header[static_cast<std::size_t>(d)] == "x" + std::to_string(d + 1))
      ++d;
  }
  if (d == 0) throw ConfigError(path.string() + ": header must start with x or x1..xd");
  std::vector<double> flat;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": wrong number of fields");
    for (Index j = 0; j < d; ++j) {
      const std::string& c = cells[static_cast<std::size_t>(j)];
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || *end != '\0' || !std::isfinite(v))
        throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": malformed number '" + c + "'");
      flat.push_back(v);
    }
  }
  const Index n = static_cast<Index>(flat.size()) / d;
  Matrix xs(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) xs(i, j) = flat[static_cast<std::size_t>(i * d + j)];
  return xs;
}

}  // namespace mfbnn
