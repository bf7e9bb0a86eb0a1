// Command-line front end: run, bench, predict, active.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "mfbnn/bench.hpp"
#include "mfbnn/config.hpp"
#include "mfbnn/errors.hpp"
#include "mfbnn/pipeline.hpp"
#include "mfbnn/runtime.hpp"

using namespace mfbnn;

namespace {

constexpr int kExitStage = 1;
constexpr int kExitConfig = 2;

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> profile;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--profile", f.profile, "desk or paper");
  cmd->add_option("--out", f.out, "Output directory");
}

RunConfig load_config(const std::string& path, const CommonFlags& f, std::optional<RunMode> force_mode) {
  KeyValues kv = read_key_values(path);
  if (f.seed) kv["seed"] = std::to_string(*f.seed);
  if (f.profile) kv["profile"] = *f.profile;
  if (f.out) kv["output"] = *f.out;
  if (force_mode) kv["mode"] = to_string(*force_mode);
  return build_run_config(kv);
}

int cmd_run(const std::string& config_path, const CommonFlags& f, std::optional<RunMode> force_mode) {
  const RunConfig config = load_config(config_path, f, force_mode);
  if (config.mode == RunMode::Active) {
    const ActiveState st = run_active_experiment(config);
    std::cout << "active: " << st.history.size() << " rounds, n_hifi " << st.dataset.hifi_count() << ", log "
              << (config.output / "active.csv").string() << "\n";
    if (st.error) {
      std::cerr << "error: " << *st.error << "\n";
      return kExitStage;
    }
    return 0;
  }
  const RunOutcome outcome = run_experiment(config);
  print_metrics(std::cout, {outcome.metrics});
  std::cout << "wrote " << (config.output / "predictions.csv").string() << "\n";
  return 0;
}

int cmd_predict(const std::string& run_dir, const std::string& query, const std::string& out, bool forcing) {
  const std::filesystem::path dir(run_dir);
  std::ifstream ms(dir / "manifest.json");
  if (!ms) throw ConfigError("no manifest.json in " + run_dir);
  const nlohmann::json manifest = nlohmann::json::parse(ms);
  const RunConfig config = build_run_config(manifest.at("config").get<KeyValues>());

  std::string extra;
  PosteriorSamples samples = load_samples(dir / "samples.bin", &extra);
  const nlohmann::json meta = nlohmann::json::parse(extra);
  const MlpSpec bnn{meta.at("bnn_widths").get<std::vector<int>>()};
  std::optional<LowFiSurrogate> lowfi;
  if (meta.at("multi_fidelity").get<bool>()) lowfi = LowFiSurrogate(load_snapshot(dir / "lowfi.snap"));
  const ProblemSpec problem = config.problem_spec();
  const Predictor predictor(problem, SurrogateComposition(lowfi, bnn, problem.space_dim()), std::move(samples));

  const Matrix xs = read_query_csv(query);
  if (xs.cols() != problem.space_dim()) throw ConfigError("query dimension does not match the problem");
  write_prediction_csv(out, forcing ? predictor.predict_f(xs) : predictor.predict(xs));
  std::cout << "wrote " << xs.rows() << " predictions to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  keep_large_allocations();
  CLI::App app{"Multi-fidelity Bayesian neural networks: MAP low-fidelity fit, VI prior, HMC posterior"};
  app.require_subcommand(1);

  CommonFlags run_flags, active_flags, bench_flags;
  std::string run_config, active_config;
  auto* run = app.add_subcommand("run", "Run an experiment from a config file");
  run->add_option("--config", run_config, "Config file (key = value)")->required();
  add_common(run, run_flags);

  auto* active = app.add_subcommand("active", "Run the active-learning loop from a config file");
  active->add_option("--config", active_config, "Config file (key = value)")->required();
  add_common(active, active_flags);

  std::string suite;
  auto* bench = app.add_subcommand("bench", "Run a named reproduction suite");
  bench->add_option("suite", suite, "fn1d, fn4d, inv1d, inv2d, active-fn or active-inv")->required();
  add_common(bench, bench_flags);

  std::string run_dir, query, pred_out = "predictions.csv";
  bool forcing = false;
  auto* predict = app.add_subcommand("predict", "Predict at query points from a finished run");
  predict->add_option("--run", run_dir, "Run output directory (manifest.json, samples.bin, lowfi.snap)")->required();
  predict->add_option("--query", query, "CSV with header x or x1..xd")->required();
  predict->add_option("--out", pred_out, "Output CSV");
  predict->add_flag("--forcing", forcing, "Predict the forcing term instead of u (inverse problems)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_config, run_flags, std::nullopt);
    if (*active) return cmd_run(active_config, active_flags, RunMode::Active);
    if (*predict) return cmd_predict(run_dir, query, pred_out, forcing);
    if (*bench) {
      const Profile profile = parse_profile(bench_flags.profile.value_or("desk"));
      const std::filesystem::path out = bench_flags.out.value_or("bench_out/" + suite);
      run_bench(suite, profile, bench_flags.seed.value_or(0), out, std::cout);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const StageError& e) {
    std::cerr << "stage " << e.stage() << " failed: " << e.what() << "\n";
    return kExitStage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitStage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return 0;
}
