#include <doctest.h>

#include <filesystem>
#include <string>

#include "mfbnn/config.hpp"
#include "mfbnn/errors.hpp"

using namespace mfbnn;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_key_values(text, "test.cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("key value parsing skips comments and blank lines") {
  const KeyValues kv = parse_key_values("# header\n\nproblem = fn1d-sinsq  # trailing\n seed=3\n");
  CHECK(kv.size() == 2);
  CHECK(kv.at("problem") == "fn1d-sinsq");
  CHECK(kv.at("seed") == "3");
}

TEST_CASE("parse errors carry the line number") {
  CHECK(error_of("seed = 1\nseed = 2\n").find("2") != std::string::npos);
  CHECK(error_of("a = 1\n\nno equals here\n").find("3") != std::string::npos);
}

TEST_CASE("unknown keys and bad values are rejected") {
  CHECK_THROWS_AS(build_run_config({{"problem", "fn1d-sinsq"}, {"hmc.leapfrgo", "10"}}), ConfigError);
  CHECK_THROWS_AS(build_run_config({{"problem", "nope"}}), ConfigError);
  CHECK_THROWS_AS(build_run_config({{"problem", "fn1d-sinsq"}, {"hmc.samples", "ten"}}), ConfigError);
  CHECK_THROWS_AS(build_run_config({{"problem", "fn1d-sinsq"}, {"profile", "laptop"}}), ConfigError);
  CHECK_THROWS_AS(build_run_config({{"problem", "fn1d-sinsq"}, {"hmc.init", "zero"}}), ConfigError);
}

TEST_CASE("profiles set the stage budgets") {
  const RunConfig desk = default_run_config("fn1d-sinsq", Profile::Desk);
  const RunConfig paper = default_run_config("fn1d-sinsq", Profile::Paper);
  CHECK(desk.map.steps == 10000);
  CHECK(desk.vi.steps == 20000);
  CHECK(desk.hmc.burn_in == 2000);
  CHECK(desk.hmc.samples == 500);
  CHECK(paper.map.steps == 50000);
  CHECK(paper.vi.steps == 200000);
  CHECK(paper.hmc.burn_in == 10000);
  CHECK(paper.hmc.samples == 1000);
  CHECK(paper.hmc.leapfrog_steps == 50);
}

TEST_CASE("problem defaults pick the network sizes") {
  CHECK(default_run_config("fn4d", Profile::Desk).lowfi_hidden == std::vector<int>{50, 50});
  CHECK(default_run_config("inv2d", Profile::Desk).lowfi_hidden == std::vector<int>{40, 40});
  CHECK(default_run_config("inv1d", Profile::Desk).lowfi_hidden == std::vector<int>{20, 20});
  CHECK(default_run_config("inv1d", Profile::Desk).bnn_hidden == std::vector<int>{50});
}

TEST_CASE("explicit keys override defaults") {
  const RunConfig c = build_run_config({{"problem", "inv1d"},
                                        {"seed", "11"},
                                        {"hmc.samples", "42"},
                                        {"vi.sigma", "0.7"},
                                        {"lowfi.hidden", "8 8"},
                                        {"data.n_hifi_u", "5"}});
  CHECK(c.seed == 11);
  CHECK(c.hmc.samples == 42);
  REQUIRE(c.fixed_sigma.has_value());
  CHECK(*c.fixed_sigma == 0.7);
  CHECK(c.lowfi_hidden == std::vector<int>{8, 8});
  CHECK(c.generator_spec().n_hifi_u == 5);
}

TEST_CASE("the canonical key list reproduces the config") {
  const RunConfig c = build_run_config({{"problem", "inv2d"}, {"seed", "5"}, {"hmc.thin", "3"}, {"mode", "single"}});
  const KeyValues kv = to_key_values(c);
  const RunConfig back = build_run_config(kv);
  CHECK(to_key_values(back) == kv);
  CHECK(config_hash(back) == config_hash(c));
}

TEST_CASE("the config hash is 16 hex digits and tracks changes") {
  const RunConfig a = default_run_config("fn1d-sinsq", Profile::Desk);
  RunConfig b = a;
  b.hmc.samples += 1;
  const std::string h = config_hash(a);
  CHECK(h.size() == 16);
  CHECK(h.find_first_not_of("0123456789abcdef") == std::string::npos);
  CHECK(h == config_hash(a));
  CHECK(h != config_hash(b));
}

TEST_CASE("the data seed follows the master seed unless pinned") {
  const RunConfig a = build_run_config({{"problem", "fn1d-sinsq"}, {"seed", "1"}});
  const RunConfig b = build_run_config({{"problem", "fn1d-sinsq"}, {"seed", "2"}});
  const RunConfig c = build_run_config({{"problem", "fn1d-sinsq"}, {"seed", "2"}, {"data.seed", "99"}});
  CHECK(a.generator_spec().seed != b.generator_spec().seed);
  CHECK(c.generator_spec().seed == 99);
}

TEST_CASE("active mode defaults") {
  const RunConfig fn = default_run_config("fn1d-sinsq", Profile::Desk, RunMode::Active);
  CHECK(fn.active.stop_rule);
  CHECK(fn.active.max_rounds == 10);
  CHECK(fn.fixed_sigma.has_value());
  const RunConfig inv = default_run_config("inv1d", Profile::Desk, RunMode::Active);
  CHECK_FALSE(inv.active.stop_rule);
  CHECK(inv.active.max_rounds == 5);
}

TEST_CASE("active settings are validated") {
  ActiveConfig a;
  a.max_rounds = 0;
  CHECK_THROWS_AS(a.validate(), ConfigError);
  a = ActiveConfig{};
  a.threshold = -1.0;
  CHECK_THROWS_AS(a.validate(), ConfigError);
  a = ActiveConfig{};
  a.candidates = 0;
  CHECK_THROWS_AS(a.validate(), ConfigError);
}

TEST_CASE("every shipped example config resolves") {
  int seen = 0;
  for (const auto& e : std::filesystem::directory_iterator(MFBNN_CONFIG_DIR)) {
    if (e.path().extension() != ".cfg") continue;
    ++seen;
    INFO(e.path().string());
    CHECK_NOTHROW(build_run_config(read_key_values(e.path())).validate());
  }
  CHECK(seen >= 8);
}
