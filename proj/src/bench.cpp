#include "mfbnn/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <nlohmann/json.hpp>

#include "mfbnn/errors.hpp"
#include "mfbnn/rng.hpp"

#ifndef MFBNN_VERSION
#define MFBNN_VERSION "0.0.0"
#endif

namespace mfbnn {

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector truth_on(const std::function<double(const Vector&)>& fn, const Matrix& xs) {
  Vector out(xs.rows());
  for (Index i = 0; i < xs.rows(); ++i) out[i] = fn(xs.row(i).transpose());
  return out;
}

void write_dataset_csvs(const std::filesystem::path& dir, const BiFidelityDataset& data) {
  write_sensor_csv(dir / "data_lofi.csv", data.lofi, "u");
  write_sensor_csv(dir / "data_hifi_u.csv", data.hifi_u, "u");
  if (!data.hifi_f.empty()) write_sensor_csv(dir / "data_hifi_f.csv", data.hifi_f, "f");
  if (!data.hifi_b.empty()) write_sensor_csv(dir / "data_hifi_b.csv", data.hifi_b, "b");
}

nlohmann::json lambdas_json(const std::vector<LambdaSummary>& ls) {
  nlohmann::json out = nlohmann::json::array();
  for (const LambdaSummary& l : ls) out.push_back({{"name", l.name}, {"mean", l.mean}, {"std", l.std}});
  return out;
}

std::string cell(const std::optional<double>& v, int precision = 5) {
  if (!v) return "-";
  std::ostringstream os;
  os << std::setprecision(precision) << *v;
  return os.str();
}

}  // namespace

BiFidelityDataset make_dataset(const RunConfig& config) {
  if (config.csv) return load_bifidelity_csv(config.csv->paths);
  return generate(config.generator_spec());
}

Matrix evaluation_points(const RunConfig& config) {
  const Domain domain = config.problem_spec().domain;
  if (config.eval_points > 0)
    return sample_locations(domain, config.eval_points, Layout::Random, derive_seed(config.seed, "eval"));
  return domain.grid(config.eval_grid);
}

RunOutcome run_experiment(const RunConfig& config) {
  config.validate();
  if (config.mode == RunMode::Active) throw ConfigError("run_experiment: active mode goes through run_active_experiment");
  const std::filesystem::path& out = config.output;
  std::filesystem::create_directories(out);

  BiFidelityDataset data = make_dataset(config);
  write_dataset_csvs(out, data);
  MbnnConfig mc = config.mbnn_config();
  mc.output_dir = out;
  MbnnResult result = run_mbnn(mc, data);

  const ProblemSpec problem = config.problem_spec();
  const Predictor predictor(problem, result.composition, result.samples);
  const Matrix xs = evaluation_points(config);
  const PredictionTable pu = predictor.predict(xs);
  write_prediction_csv(out / "predictions.csv", pu);

  RunMetrics m;
  m.variant = to_string(config.mode);
  m.eval_points = xs.rows();
  m.sigma = result.sigma;
  m.acceptance = result.samples.acceptance_rate;
  m.final_step = result.samples.final_step;
  m.lambdas = predictor.lambdas();
  std::optional<PredictionTable> pf;
  if (problem.is_inverse()) {
    pf = predictor.predict_f(xs);
    write_prediction_csv(out / "predictions_f.csv", *pf);
    write_lambda_csv(out / "lambdas.csv", m.lambdas);
  }
  if (!config.csv) {
    const ExactSolution ex = exact_solution(config.generator());
    const Vector u = truth_on(ex.u_high, xs);
    m.rmse_u = rmse(to_std(u), to_std(pu.mean));
    m.picp_u = picp(to_std(u), to_std(pu.mean), to_std(pu.std));
    if (pf) {
      const Vector f = truth_on(ex.f, xs);
      m.rmse_f = rmse(to_std(f), to_std(pf->mean));
      m.picp_f = picp(to_std(f), to_std(pf->mean), to_std(pf->std));
    }
    write_metrics_csv(out / "metrics.csv", {m});
  }
  write_manifest(out / "manifest.json", config, {m});
  return {m, std::move(result), std::move(data)};
}

ActiveState run_active_experiment(const RunConfig& config) {
  config.validate();
  if (config.mode != RunMode::Active) throw ConfigError("run_active_experiment: config mode is not active");
  const std::filesystem::path& out = config.output;
  std::filesystem::create_directories(out);

  const GeneratorSpec gs = config.generator_spec();
  const BiFidelityDataset initial = generate(gs);
  write_dataset_csvs(out, initial);
  ActiveSetup setup;
  setup.mbnn = config.mbnn_config();
  setup.mbnn.multi_fidelity = true;
  setup.active = config.active;
  setup.candidates = candidate_grid(config.problem_spec().domain, config.active.candidates);
  setup.log_csv = out / "active.csv";
  const Oracle oracle = generator_oracle(config.generator(), gs, derive_seed(config.seed, "oracle-noise"));
  ActiveState state = run_active(setup, initial, oracle);
  write_manifest(out / "manifest.json", config, {}, &state.history);
  return state;
}

void write_manifest(const std::filesystem::path& path, const RunConfig& config, const std::vector<RunMetrics>& runs,
                    const std::vector<ActiveRecord>* history) {
  nlohmann::json j;
  j["tool"] = "mfbnn";
  j["version"] = MFBNN_VERSION;
  const KeyValues kv = to_key_values(config);
  j["config"] = kv;
  j["config_hash"] = config_hash(config);
  j["profile"] = to_string(config.profile);
  j["mode"] = to_string(config.mode);
  j["master_seed"] = config.seed;
  j["seeds"] = {{"data", config.csv ? 0 : config.generator_spec().seed},
                {"map", derive_seed(config.seed, "stage-map")},
                {"vi", derive_seed(config.seed, "stage-vi")},
                {"hmc", derive_seed(config.seed, "stage-hmc")},
                {"eval", derive_seed(config.seed, "eval")}};
  j["conventions"] = {{"std", "population"},
                      {"bands", "epistemic"},
                      {"interval", "mean +/- 2 std"},
                      {"error_E", "(1/N) sqrt(sum residual^2)"}};
  nlohmann::json rs = nlohmann::json::array();
  for (const RunMetrics& m : runs) {
    nlohmann::json r{{"variant", m.variant},
                     {"sigma", m.sigma},
                     {"acceptance_rate", m.acceptance},
                     {"final_step", m.final_step},
                     {"eval_points", m.eval_points},
                     {"lambdas", lambdas_json(m.lambdas)}};
    if (m.rmse_u) r["rmse_u"] = *m.rmse_u;
    if (m.picp_u) r["picp_u"] = *m.picp_u;
    if (m.rmse_f) r["rmse_f"] = *m.rmse_f;
    if (m.picp_f) r["picp_f"] = *m.picp_f;
    rs.push_back(r);
  }
  j["runs"] = rs;
  if (history) {
    nlohmann::json h = nlohmann::json::array();
    for (const ActiveRecord& r : *history)
      h.push_back({{"round", r.round},
                   {"round_seed", r.round_seed},
                   {"n_hifi", r.n_hifi},
                   {"sigma", r.sigma},
                   {"max_var", r.max_var},
                   {"stopped", r.stopped}});
    j["rounds"] = h;
  }
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open for writing: " + path.string());
  os << j.dump(2) << "\n";
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<RunMetrics>& rows) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open for writing: " + path.string());
  const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  os << "variant,eval_points,rmse_u,picp_u,rmse_f,picp_f,k_mean,k_std,sigma,acceptance,final_step\n";
  for (const RunMetrics& m : rows) {
    std::optional<double> km, ks;
    if (!m.lambdas.empty()) {
      km = m.lambdas.front().mean;
      ks = m.lambdas.front().std;
    }
    os << m.variant << "," << m.eval_points << "," << opt(m.rmse_u) << "," << opt(m.picp_u) << "," << opt(m.rmse_f)
       << "," << opt(m.picp_f) << "," << opt(km) << "," << opt(ks) << "," << format_double(m.sigma) << ","
       << format_double(m.acceptance) << "," << format_double(m.final_step) << "\n";
  }
}

void print_metrics(std::ostream& os, const std::vector<RunMetrics>& rows) {
  os << std::left << std::setw(8) << "variant" << std::setw(12) << "rmse_u" << std::setw(10) << "picp_u" << std::setw(12)
     << "rmse_f" << std::setw(10) << "picp_f" << std::setw(10) << "k_mean" << std::setw(12) << "k_std" << std::setw(10)
     << "sigma" << "accept\n";
  for (const RunMetrics& m : rows) {
    std::optional<double> km, ks;
    if (!m.lambdas.empty()) {
      km = m.lambdas.front().mean;
      ks = m.lambdas.front().std;
    }
    os << std::setw(8) << m.variant << std::setw(12) << cell(m.rmse_u) << std::setw(10) << cell(m.picp_u, 4)
       << std::setw(12) << cell(m.rmse_f) << std::setw(10) << cell(m.picp_f, 4) << std::setw(10) << cell(km, 4)
       << std::setw(12) << cell(ks, 4) << std::setw(10) << cell(m.sigma, 4) << cell(m.acceptance, 3) << "\n";
  }
}

const std::vector<std::string>& bench_suites() {
  static const std::vector<std::string> names = {"fn1d", "fn4d", "inv1d", "inv2d", "active-fn", "active-inv"};
  return names;
}

RunConfig bench_config(const std::string& suite, Profile profile, std::uint64_t seed,
                       const std::filesystem::path& output) {
  RunConfig c;
  if (suite == "fn1d") {
    c = default_run_config("fn1d-sinsq", profile);
  } else if (suite == "fn4d") {
    c = default_run_config("fn4d", profile);
  } else if (suite == "inv1d") {
    c = default_run_config("inv1d", profile);
  } else if (suite == "inv2d") {
    c = default_run_config("inv2d", profile);
  } else if (suite == "active-fn") {
    c = default_run_config("fn1d-sinsq", profile, RunMode::Active);
  } else if (suite == "active-inv") {
    c = default_run_config("inv1d", profile, RunMode::Active);
  } else {
    throw ConfigError("unknown bench suite '" + suite + "'");
  }
  c.seed = seed;
  c.output = output;
  return c;
}

BenchReport run_bench(const std::string& suite, Profile profile, std::uint64_t seed,
                      const std::filesystem::path& output, std::ostream& log) {
  const RunConfig base = bench_config(suite, profile, seed, output);
  const auto t0 = std::chrono::steady_clock::now();
  BenchReport report;
  report.suite = suite;
  std::filesystem::create_directories(output);
  if (base.mode == RunMode::Active) {
    ActiveState st = run_active_experiment(base);
    log << "suite " << suite << " (" << to_string(profile) << ", seed " << seed << ")\n";
    log << std::left << std::setw(7) << "round" << std::setw(8) << "n_hifi" << std::setw(12) << "x_star" << std::setw(12)
        << "max_var" << std::setw(12) << "E_u" << std::setw(12) << "E_f" << std::setw(10) << "k_mean" << std::setw(12)
        << "rmse_u" << "stopped\n";
    for (const ActiveRecord& r : st.history) {
      const std::optional<double> xs = r.x_star ? std::optional<double>((*r.x_star)[0]) : std::nullopt;
      const std::optional<double> km = r.lambdas.empty() ? std::nullopt : std::optional<double>(r.lambdas[0].mean);
      log << std::setw(7) << r.round << std::setw(8) << r.n_hifi << std::setw(12) << cell(xs, 4) << std::setw(12)
          << cell(r.max_var, 4) << std::setw(12) << cell(r.error_u, 4) << std::setw(12) << cell(r.error_f, 4)
          << std::setw(10) << cell(km, 4) << std::setw(12) << cell(r.rmse_u, 4) << (r.stopped ? "yes" : "no") << "\n";
    }
    if (st.error) log << "oracle error: " << *st.error << "\n";
    report.active = std::move(st);
  } else {
    RunConfig mf = base;
    mf.output = output / "mf";
    report.rows.push_back(run_experiment(mf).metrics);
    if (suite == "fn1d" || suite == "fn4d") {
      RunConfig sf = base;
      sf.mode = RunMode::Single;
      sf.output = output / "sf";
      report.rows.push_back(run_experiment(sf).metrics);
    }
    write_metrics_csv(output / "metrics.csv", report.rows);
    write_manifest(output / "manifest.json", base, report.rows);
    log << "suite " << suite << " (" << to_string(profile) << ", seed " << seed << ")\n";
    print_metrics(log, report.rows);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  log << "elapsed " << std::fixed << std::setprecision(1) << secs << " s\n" << std::defaultfloat;
  return report;
}

}  // namespace mfbnn
