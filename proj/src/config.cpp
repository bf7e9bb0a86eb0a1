#include "mfbnn/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "mfbnn/errors.hpp"
#include "mfbnn/rng.hpp"

namespace mfbnn {

Profile parse_profile(const std::string& name) {
  if (name == "desk") return Profile::Desk;
  if (name == "paper") return Profile::Paper;
  throw ConfigError("unknown profile '" + name + "' (expected desk or paper)");
}

std::string to_string(Profile p) { return p == Profile::Desk ? "desk" : "paper"; }

RunMode parse_mode(const std::string& name) {
  if (name == "mbnn") return RunMode::Mbnn;
  if (name == "single") return RunMode::Single;
  if (name == "active") return RunMode::Active;
  throw ConfigError("unknown mode '" + name + "' (expected mbnn, single or active)");
}

std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::Mbnn: return "mbnn";
    case RunMode::Single: return "single";
    case RunMode::Active: return "active";
  }
  return "?";
}

void ActiveConfig::validate() const {
  if (max_rounds < 1) throw ConfigError("active: max_rounds must be >= 1");
  if (!(threshold > 0)) throw ConfigError("active: threshold must be > 0");
  if (candidates < 1) throw ConfigError("active: candidates must be >= 1");
}

namespace {

ProblemKind parse_kind(const std::string& s) {
  if (s == "regression") return ProblemKind::Regression;
  if (s == "inv1d" || s == "diffusion-reaction-1d") return ProblemKind::DiffusionReaction1D;
  if (s == "inv2d" || s == "diffusion-reaction-2d") return ProblemKind::DiffusionReaction2D;
  throw ConfigError("unknown data.kind '" + s + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || !std::isfinite(out)) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> parse_reals(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) out.push_back(parse_real(key, tok));
  return out;
}

std::vector<int> parse_widths(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  std::vector<int> out;
  std::string tok;
  while (is >> tok) out.push_back(static_cast<int>(parse_int(key, tok)));
  if (out.empty()) throw ConfigError(key + ": expected a list of layer widths");
  return out;
}

std::string fmt(double v) { return format_double(v); }
std::string fmt(long long v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

std::string join(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? " " : "") + std::to_string(xs[i]);
  return out;
}

std::string join(const Vector& xs) {
  std::string out;
  for (Index i = 0; i < xs.size(); ++i) out += (i ? " " : "") + fmt(xs[i]);
  return out;
}

Matrix points_from(const std::string& key, const std::string& v, Index dim) {
  const std::vector<double> flat = parse_reals(key, v);
  if (flat.size() % static_cast<std::size_t>(dim) != 0)
    throw ConfigError(key + ": number of coordinates is not a multiple of the dimension");
  const Index n = static_cast<Index>(flat.size()) / dim;
  Matrix m(n, dim);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < dim; ++j) m(i, j) = flat[static_cast<std::size_t>(i * dim + j)];
  return m;
}

std::string points_text(const Matrix& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) out += (out.empty() ? "" : " ") + fmt(m(i, j));
  return out;
}

CsvSource& csv_of(RunConfig& c, const std::string& key) {
  if (!c.csv) throw ConfigError(key + " is only valid with problem = csv");
  return *c.csv;
}

Index data_dim(const RunConfig& c) {
  if (c.csv) return c.problem_spec().space_dim();
  return exact_solution(c.data.name).domain.dim();
}

struct KeyHandler {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::optional<std::string>(const RunConfig&)> get;
};

template <class T>
std::optional<std::string> opt_fmt(const std::optional<T>& v) {
  if (!v) return std::nullopt;
  return fmt(*v);
}

const std::vector<KeyHandler>& handlers() {
  using C = RunConfig;
  using S = const std::string&;
  static const std::vector<KeyHandler> table = {
      {"seed", [](C& c, S v) { c.seed = parse_u64("seed", v); }, [](const C& c) { return std::to_string(c.seed); }},
      {"output", [](C& c, S v) { c.output = v; }, [](const C& c) { return c.output.string(); }},

      {"data.seed", [](C& c, S v) { c.data_seed = parse_u64("data.seed", v); },
       [](const C& c) -> std::optional<std::string> {
         if (!c.data_seed) return std::nullopt;
         return std::to_string(*c.data_seed);
       }},
      {"data.n_lofi", [](C& c, S v) { c.data.n_lofi = parse_int("data.n_lofi", v); },
       [](const C& c) { return fmt(static_cast<long long>(c.data.n_lofi)); }},
      {"data.n_hifi_u", [](C& c, S v) { c.data.n_hifi_u = parse_int("data.n_hifi_u", v); },
       [](const C& c) { return fmt(static_cast<long long>(c.data.n_hifi_u)); }},
      {"data.n_hifi_f", [](C& c, S v) { c.data.n_hifi_f = parse_int("data.n_hifi_f", v); },
       [](const C& c) { return fmt(static_cast<long long>(c.data.n_hifi_f)); }},
      {"data.n_boundary", [](C& c, S v) { c.data.n_boundary = parse_int("data.n_boundary", v); },
       [](const C& c) { return fmt(static_cast<long long>(c.data.n_boundary)); }},
      {"data.lofi_noise", [](C& c, S v) { c.data.lofi_noise = parse_real("data.lofi_noise", v); },
       [](const C& c) { return fmt(c.data.lofi_noise); }},
      {"data.hifi_noise", [](C& c, S v) { c.data.hifi_noise = parse_real("data.hifi_noise", v); },
       [](const C& c) { return fmt(c.data.hifi_noise); }},
      {"data.f_noise", [](C& c, S v) { c.data.f_noise = parse_real("data.f_noise", v); },
       [](const C& c) { return fmt(c.data.f_noise); }},
      {"data.lofi_layout", [](C& c, S v) { c.data.lofi_layout = parse_layout(v); },
       [](const C& c) { return to_string(c.data.lofi_layout); }},
      {"data.hifi_layout", [](C& c, S v) { c.data.hifi_layout = parse_layout(v); },
       [](const C& c) { return to_string(c.data.hifi_layout); }},
      {"data.hifi_u_at", [](C& c, S v) { c.data.hifi_u_at = points_from("data.hifi_u_at", v, data_dim(c)); },
       [](const C& c) -> std::optional<std::string> {
         if (!c.data.hifi_u_at) return std::nullopt;
         return points_text(*c.data.hifi_u_at);
       }},
      {"data.hifi_f_at", [](C& c, S v) { c.data.hifi_f_at = points_from("data.hifi_f_at", v, data_dim(c)); },
       [](const C& c) -> std::optional<std::string> {
         if (!c.data.hifi_f_at) return std::nullopt;
         return points_text(*c.data.hifi_f_at);
       }},
      {"data.kind", [](C& c, S v) { csv_of(c, "data.kind").kind = parse_kind(v); },
       [](const C& c) -> std::optional<std::string> {
         if (!c.csv) return std::nullopt;
         return to_string(c.csv->kind);
       }},
      {"data.lower",
       [](C& c, S v) {
         const auto xs = parse_reals("data.lower", v);
         csv_of(c, "data.lower").domain.lower = Eigen::Map<const Vector>(xs.data(), static_cast<Index>(xs.size()));
       },
       [](const C& c) -> std::optional<std::string> {
         if (!c.csv || c.csv->domain.lower.size() == 0) return std::nullopt;
         return join(c.csv->domain.lower);
       }},
      {"data.upper",
       [](C& c, S v) {
         const auto xs = parse_reals("data.upper", v);
         csv_of(c, "data.upper").domain.upper = Eigen::Map<const Vector>(xs.data(), static_cast<Index>(xs.size()));
       },
       [](const C& c) -> std::optional<std::string> {
         if (!c.csv || c.csv->domain.upper.size() == 0) return std::nullopt;
         return join(c.csv->domain.upper);
       }},
      {"data.lofi_csv", [](C& c, S v) { csv_of(c, "data.lofi_csv").paths.lofi = v; },
       [](const C& c) -> std::optional<std::string> {
         if (!c.csv) return std::nullopt;
         return c.csv->paths.lofi.string();
       }},
      {"data.hifi_u_csv", [](C& c, S v) { csv_of(c, "data.hifi_u_csv").paths.hifi_u = v; },
       [](const C& c) -> std::optional<std::string> {
         if (!c.csv) return std::nullopt;
         return c.csv->paths.hifi_u.string();
       }},
      {"data.hifi_f_csv", [](C& c, S v) { csv_of(c, "data.hifi_f_csv").paths.hifi_f = v; },
       [](const C& c) -> std::optional<std::string> {
         if (!c.csv || !c.csv->paths.hifi_f) return std::nullopt;
         return c.csv->paths.hifi_f->string();
       }},
      {"data.hifi_b_csv", [](C& c, S v) { csv_of(c, "data.hifi_b_csv").paths.hifi_b = v; },
       [](const C& c) -> std::optional<std::string> {
         if (!c.csv || !c.csv->paths.hifi_b) return std::nullopt;
         return c.csv->paths.hifi_b->string();
       }},

      {"lowfi.hidden", [](C& c, S v) { c.lowfi_hidden = parse_widths("lowfi.hidden", v); },
       [](const C& c) { return join(c.lowfi_hidden); }},
      {"bnn.hidden", [](C& c, S v) { c.bnn_hidden = parse_widths("bnn.hidden", v); },
       [](const C& c) { return join(c.bnn_hidden); }},

      {"map.steps", [](C& c, S v) { c.map.steps = parse_int("map.steps", v); },
       [](const C& c) { return fmt(static_cast<long long>(c.map.steps)); }},
      {"map.learning_rate", [](C& c, S v) { c.map.learning_rate = parse_real("map.learning_rate", v); },
       [](const C& c) { return fmt(c.map.learning_rate); }},
      {"map.alpha", [](C& c, S v) { c.map.alpha = parse_real("map.alpha", v); },
       [](const C& c) { return opt_fmt(c.map.alpha); }},
      {"map.decay", [](C& c, S v) { c.map.decay = parse_bool("map.decay", v); },
       [](const C& c) { return fmt(c.map.decay); }},
      {"map.decay_factor", [](C& c, S v) { c.map.decay_factor = parse_real("map.decay_factor", v); },
       [](const C& c) { return fmt(c.map.decay_factor); }},
      {"map.batch_size", [](C& c, S v) { c.map.batch_size = parse_int("map.batch_size", v); },
       [](const C& c) { return fmt(static_cast<long long>(c.map.batch_size)); }},
      {"map.log_every", [](C& c, S v) { c.map.log_every = parse_int("map.log_every", v); },
       [](const C& c) { return fmt(static_cast<long long>(c.map.log_every)); }},

      {"vi.steps", [](C& c, S v) { c.vi.steps = parse_int("vi.steps", v); },
       [](const C& c) { return fmt(static_cast<long long>(c.vi.steps)); }},
      {"vi.learning_rate", [](C& c, S v) { c.vi.learning_rate = parse_real("vi.learning_rate", v); },
       [](const C& c) { return fmt(c.vi.learning_rate); }},
      {"vi.decay", [](C& c, S v) { c.vi.decay = parse_bool("vi.decay", v); },
       [](const C& c) { return fmt(c.vi.decay); }},
      {"vi.decay_factor", [](C& c, S v) { c.vi.decay_factor = parse_real("vi.decay_factor", v); },
       [](const C& c) { return fmt(c.vi.decay_factor); }},
      {"vi.n_mc", [](C& c, S v) { c.vi.n_mc = static_cast<int>(parse_int("vi.n_mc", v)); },
       [](const C& c) { return fmt(static_cast<long long>(c.vi.n_mc)); }},
      {"vi.init_std", [](C& c, S v) { c.vi.init_std = parse_real("vi.init_std", v); },
       [](const C& c) { return fmt(c.vi.init_std); }},
      {"vi.sigma_init", [](C& c, S v) { c.vi.sigma_init = parse_real("vi.sigma_init", v); },
       [](const C& c) { return fmt(c.vi.sigma_init); }},
      {"vi.learn_sigma", [](C& c, S v) { c.vi.learn_sigma = parse_bool("vi.learn_sigma", v); },
       [](const C& c) { return fmt(c.vi.learn_sigma); }},
      {"vi.sigma_min", [](C& c, S v) { c.vi.sigma_min = parse_real("vi.sigma_min", v); },
       [](const C& c) { return fmt(c.vi.sigma_min); }},
      {"vi.sigma_max", [](C& c, S v) { c.vi.sigma_max = parse_real("vi.sigma_max", v); },
       [](const C& c) { return fmt(c.vi.sigma_max); }},
      {"vi.log_every", [](C& c, S v) { c.vi.log_every = parse_int("vi.log_every", v); },
       [](const C& c) { return fmt(static_cast<long long>(c.vi.log_every)); }},
      {"vi.sigma",
       [](C& c, S v) {
         if (v == "learn") {
           c.fixed_sigma.reset();
         } else {
           c.fixed_sigma = parse_real("vi.sigma", v);
         }
       },
       [](const C& c) -> std::optional<std::string> { return c.fixed_sigma ? fmt(*c.fixed_sigma) : "learn"; }},

      {"hmc.burn_in", [](C& c, S v) { c.hmc.burn_in = parse_int("hmc.burn_in", v); },
       [](const C& c) { return fmt(static_cast<long long>(c.hmc.burn_in)); }},
      {"hmc.step", [](C& c, S v) { c.hmc.initial_step = parse_real("hmc.step", v); },
       [](const C& c) { return fmt(c.hmc.initial_step); }},
      {"hmc.leapfrog", [](C& c, S v) { c.hmc.leapfrog_steps = parse_int("hmc.leapfrog", v); },
       [](const C& c) { return fmt(static_cast<long long>(c.hmc.leapfrog_steps)); }},
      {"hmc.samples", [](C& c, S v) { c.hmc.samples = parse_int("hmc.samples", v); },
       [](const C& c) { return fmt(static_cast<long long>(c.hmc.samples)); }},
      {"hmc.target_accept", [](C& c, S v) { c.hmc.target_accept = parse_real("hmc.target_accept", v); },
       [](const C& c) { return fmt(c.hmc.target_accept); }},
      {"hmc.thin", [](C& c, S v) { c.hmc.thin = parse_int("hmc.thin", v); },
       [](const C& c) { return fmt(static_cast<long long>(c.hmc.thin)); }},
      {"hmc.jitter", [](C& c, S v) { c.hmc.step_jitter = parse_real("hmc.jitter", v); },
       [](const C& c) { return fmt(c.hmc.step_jitter); }},
      {"hmc.adapt", [](C& c, S v) { c.hmc.adapt = parse_bool("hmc.adapt", v); },
       [](const C& c) { return fmt(c.hmc.adapt); }},
      {"hmc.min_acceptance", [](C& c, S v) { c.hmc.min_acceptance = parse_real("hmc.min_acceptance", v); },
       [](const C& c) { return fmt(c.hmc.min_acceptance); }},
      {"hmc.max_divergence_fraction",
       [](C& c, S v) { c.hmc.max_divergence_fraction = parse_real("hmc.max_divergence_fraction", v); },
       [](const C& c) { return fmt(c.hmc.max_divergence_fraction); }},
      {"hmc.init",
       [](C& c, S v) {
         if (v == "vi-mean") {
           c.hmc_init = HmcInit::ViMean;
         } else if (v == "prior-draw") {
           c.hmc_init = HmcInit::PriorDraw;
         } else {
           throw ConfigError("hmc.init: expected vi-mean or prior-draw, got '" + v + "'");
         }
       },
       [](const C& c) -> std::optional<std::string> {
         return c.hmc_init == HmcInit::ViMean ? "vi-mean" : "prior-draw";
       }},

      {"active.max_rounds", [](C& c, S v) { c.active.max_rounds = static_cast<int>(parse_int("active.max_rounds", v)); },
       [](const C& c) { return fmt(static_cast<long long>(c.active.max_rounds)); }},
      {"active.threshold", [](C& c, S v) { c.active.threshold = parse_real("active.threshold", v); },
       [](const C& c) { return fmt(c.active.threshold); }},
      {"active.stop_rule", [](C& c, S v) { c.active.stop_rule = parse_bool("active.stop_rule", v); },
       [](const C& c) { return fmt(c.active.stop_rule); }},
      {"active.candidates", [](C& c, S v) { c.active.candidates = parse_int("active.candidates", v); },
       [](const C& c) { return fmt(static_cast<long long>(c.active.candidates)); }},

      {"eval.grid", [](C& c, S v) { c.eval_grid = parse_int("eval.grid", v); },
       [](const C& c) { return fmt(static_cast<long long>(c.eval_grid)); }},
      {"eval.points", [](C& c, S v) { c.eval_points = parse_int("eval.points", v); },
       [](const C& c) { return fmt(static_cast<long long>(c.eval_points)); }},
  };
  return table;
}

}  // namespace

Generator RunConfig::generator() const {
  if (csv) throw ConfigError("problem = csv has no generator");
  return data.name;
}

ProblemSpec RunConfig::problem_spec() const {
  if (csv) {
    switch (csv->kind) {
      case ProblemKind::Regression: return ProblemSpec::regression(csv->domain);
      case ProblemKind::DiffusionReaction1D: return ProblemSpec::diffusion_reaction_1d();
      case ProblemKind::DiffusionReaction2D: return ProblemSpec::diffusion_reaction_2d();
    }
  }
  switch (data.name) {
    case Generator::Inv1d: return ProblemSpec::diffusion_reaction_1d();
    case Generator::Inv2d: return ProblemSpec::diffusion_reaction_2d();
    default: return ProblemSpec::regression(exact_solution(data.name).domain);
  }
}

GeneratorSpec RunConfig::generator_spec() const {
  GeneratorSpec g = data;
  g.seed = data_seed ? *data_seed : derive_seed(seed, "data");
  return g;
}

MbnnConfig RunConfig::mbnn_config() const {
  MbnnConfig m;
  m.problem = problem_spec();
  m.multi_fidelity = mode != RunMode::Single;
  m.lowfi_hidden = lowfi_hidden;
  m.bnn_hidden = bnn_hidden;
  m.map = map;
  m.vi = vi;
  m.fixed_sigma = fixed_sigma;
  m.hmc = hmc;
  m.hmc_init = hmc_init;
  m.seed = seed;
  return m;
}

void RunConfig::validate() const {
  mbnn_config().validate();
  active.validate();
  if (!csv) data.validate();
  if (csv) {
    if (csv->kind == ProblemKind::Regression) {
      if (csv->domain.lower.size() == 0 || csv->domain.lower.size() != csv->domain.upper.size())
        throw ConfigError("data.lower and data.upper must be given with equal length for csv regression data");
      if ((csv->domain.upper.array() <= csv->domain.lower.array()).any())
        throw ConfigError("data.upper must exceed data.lower");
    }
    if (csv->paths.lofi.empty() && mode != RunMode::Single) throw ConfigError("data.lofi_csv is required");
    if (csv->paths.hifi_u.empty()) throw ConfigError("data.hifi_u_csv is required");
    if (mode == RunMode::Active) throw ConfigError("active mode needs a generator to act as the oracle");
  }
  if (eval_grid < 2) throw ConfigError("eval.grid must be >= 2");
  if (eval_points < 0) throw ConfigError("eval.points must be >= 0");
}

RunConfig default_run_config(const std::string& problem, Profile profile, RunMode mode) {
  RunConfig c;
  c.problem = problem;
  c.profile = profile;
  c.mode = mode;
  const bool desk = profile == Profile::Desk;
  c.map.steps = desk ? 10000 : 50000;
  c.vi.steps = desk ? 20000 : 200000;
  c.hmc.burn_in = desk ? 2000 : 10000;
  c.hmc.samples = desk ? 500 : 1000;

  if (problem == "csv") {
    c.csv = CsvSource{};
    return c;
  }
  const Generator g = parse_generator(problem);
  c.data = default_generator_spec(g);
  switch (g) {
    case Generator::Fn1dSinSq:
    case Generator::Fn1dBias:
      break;
    case Generator::Fn4d:
      c.lowfi_hidden = {50, 50};
      if (desk) c.data.n_lofi = 5000;
      c.eval_points = 10000;
      break;
    case Generator::Inv1d:
      break;
    case Generator::Inv2d:
      c.lowfi_hidden = {40, 40};
      if (desk) c.data.n_lofi = 2000;
      c.eval_grid = 101;
      break;
  }

  if (mode == RunMode::Active) {
    if (g == Generator::Fn1dSinSq || g == Generator::Fn1dBias) {
      c.fixed_sigma = 2.0;
      c.data.n_hifi_u = 10;
      Matrix at(10, 1);
      for (Index i = 0; i < 8; ++i) at(i, 0) = 0.44 * static_cast<double>(i) / 7.0;
      at(8, 0) = 0.65;
      at(9, 0) = 0.9;
      c.data.hifi_u_at = at;
      c.active.max_rounds = 10;
      c.active.stop_rule = true;
    } else if (g == Generator::Inv1d) {
      c.fixed_sigma = 1.4;
      c.data.n_lofi = 100;
      c.data.lofi_layout = Layout::Uniform;
      c.data.n_hifi_u = 3;
      c.data.n_hifi_f = 10;
      c.data.n_boundary = 0;
      c.data.hifi_layout = Layout::Random;
      c.active.max_rounds = 5;
      c.active.stop_rule = false;
    }
  }
  return c;
}

KeyValues parse_key_values(const std::string& text, const std::string& origin) {
  KeyValues kv;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!kv.emplace(key, value).second) throw ConfigError(where + ": duplicate key '" + key + "'");
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_key_values(ss.str(), path.string());
}

RunConfig build_run_config(const KeyValues& kv) {
  const auto pick = [&](const std::string& key, const std::string& fallback) {
    const auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
  };
  RunConfig c = default_run_config(pick("problem", "fn1d-sinsq"), parse_profile(pick("profile", "desk")),
                                   parse_mode(pick("mode", "mbnn")));
  const auto& table = handlers();
  for (const auto& [key, value] : kv) {
    if (key == "problem" || key == "profile" || key == "mode") continue;
    bool found = false;
    for (const KeyHandler& h : table) {
      if (h.key == key) {
        h.set(c, value);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

KeyValues to_key_values(const RunConfig& config) {
  KeyValues kv;
  kv["problem"] = config.problem;
  kv["profile"] = to_string(config.profile);
  kv["mode"] = to_string(config.mode);
  for (const KeyHandler& h : handlers()) {
    if (config.csv && h.key.starts_with("data.") && !h.key.ends_with("_csv") && h.key != "data.kind" &&
        h.key != "data.lower" && h.key != "data.upper")
      continue;
    if (auto v = h.get(config)) kv[h.key] = *v;
  }
  return kv;
}

std::string to_text(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_text(to_key_values(config))) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mfbnn
