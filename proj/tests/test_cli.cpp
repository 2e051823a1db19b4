#include <doctest.h>

#include <cstdlib>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "ruinkit/table_io.hpp"
#include "ruinkit_cli/commands.hpp"
#include "support.hpp"

using namespace ruinkit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

json shipped(const std::string& name) {
  return json::parse(read_text_file(fs::path(RUINKIT_CONFIG_DIR) / name));
}

// Writes the config into dir and points its output at dir/out.
std::string stage(const fs::path& dir, json config) {
  config["output_dir"] = (dir / "out").string();
  const auto path = dir / "config.json";
  write_text_file(path, config.dump(2));
  return path.string();
}

}  // namespace

TEST_CASE("simulate writes a table and reruns are byte-identical") {
  const auto dir = testing::scratch_dir("cli_sim");
  json c = shipped("cramer_lundberg.json");
  c["simulate"]["n_paths"] = 2000;
  const auto cfg = stage(dir, c);
  auto r = run_cli({"--config", cfg, "simulate"});
  REQUIRE(r.code == 0);
  const auto first = read_text_file(dir / "out" / "simulate.csv");
  CHECK(first.rfind("u,p_hat,stderr,ci_lo,ci_hi,censored_fraction,n_paths,seed\n", 0) == 0);
  CHECK(fs::exists(dir / "out" / "simulate.json"));
  r = run_cli({"--config", cfg, "--workers", "3", "simulate"});
  REQUIRE(r.code == 0);
  CHECK(read_text_file(dir / "out" / "simulate.csv") == first);
  r = run_cli({"--config", cfg, "--seed", "99", "simulate"});
  CHECK(read_text_file(dir / "out" / "simulate.csv") != first);
  fs::remove_all(dir);
}

TEST_CASE("invalid model is rejected with exit 2") {
  const auto dir = testing::scratch_dir("cli_bad");
  json c = shipped("cramer_lundberg.json");
  c["model"]["mu1"] = -1.0;
  const auto r = run_cli({"--config", stage(dir, c), "simulate"});
  CHECK(r.code == 2);
  CHECK(r.err.find("NEGATIVE_JUMP_MEAN") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("malformed input exits 2") {
  const auto dir = testing::scratch_dir("cli_malformed");
  write_text_file(dir / "broken.json", "{\"model\": ");
  CHECK(run_cli({"--config", (dir / "broken.json").string(), "simulate"}).code == 2);
  json c = shipped("cramer_lundberg.json");
  c["simulate"]["n_pathz"] = 10;
  auto r = run_cli({"--config", stage(dir, c), "simulate"});
  CHECK(r.code == 2);
  CHECK(r.err.find("n_pathz") != std::string::npos);
  CHECK(run_cli({"--config", (dir / "missing.json").string(), "simulate"}).code == 2);
  CHECK(run_cli({"simulate"}).code == 2);
  CHECK(run_cli({"--config", stage(dir, shipped("cramer_lundberg.json")), "frobnicate"}).code == 2);
  CHECK(run_cli({"--config", stage(dir, shipped("cramer_lundberg.json")), "--workers", "0", "simulate"}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);
  fs::remove_all(dir);
}

TEST_CASE("missing section exits 2") {
  const auto dir = testing::scratch_dir("cli_section");
  json c = shipped("crossval.json");
  c.erase("solve");
  const auto r = run_cli({"--config", stage(dir, c), "crossval"});
  CHECK(r.code == 2);
  CHECK(r.err.find("solve") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("crossval passes on the beta = 1 configuration") {
  const auto dir = testing::scratch_dir("cli_crossval");
  json c = shipped("crossval.json");
  c["crossval"]["n_paths_per_u"] = 20000;
  const auto r = run_cli({"--config", stage(dir, c), "crossval"});
  CHECK(r.code == 0);
  CHECK(r.out.find("status PASS") != std::string::npos);
  const auto txt = read_text_file(dir / "out" / "crossval.txt");
  CHECK(txt.find("FAIL") == std::string::npos);
  CHECK(fs::exists(dir / "out" / "crossval.csv"));
  fs::remove_all(dir);
}

TEST_CASE("crossval refuses beta <= 0") {
  const auto dir = testing::scratch_dir("cli_regime");
  json c = shipped("crossval.json");
  c["model"]["a"] = 0.3;
  const auto r = run_cli({"--config", stage(dir, c), "crossval"});
  CHECK(r.code == 2);
  CHECK(r.err.find("INVALID_REGIME") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("roots output has an increasing u column") {
  const auto dir = testing::scratch_dir("cli_roots");
  REQUIRE(run_cli({"--config", stage(dir, shipped("power_law_tail.json")), "roots"}).code == 0);
  const auto t = parse_csv(read_text_file(dir / "out" / "roots.csv"));
  const auto u = t.column("u");
  REQUIRE(u.size() == 61);
  for (std::size_t i = 1; i < u.size(); ++i) CHECK(u[i] > u[i - 1]);
  fs::remove_all(dir);
}

TEST_CASE("solve then fit") {
  const auto dir = testing::scratch_dir("cli_fit");
  const auto cfg = stage(dir, shipped("power_law_tail.json"));
  REQUIRE(run_cli({"--config", cfg, "solve"}).code == 0);
  const auto t = parse_csv(read_text_file(dir / "out" / "solution.csv"));
  CHECK(t.header == std::vector<std::string>{"u", "phi", "g", "i1", "i2", "residual_ide", "residual_ode3"});
  const auto r = run_cli({"--config", cfg, "fit"});
  REQUIRE(r.code == 0);
  const auto fit = json::parse(read_text_file(dir / "out" / "fit.json"));
  CHECK(fit["k_hat"].get<double>() > 0.0);
  CHECK(fit["beta_hat"].get<double>() == doctest::Approx(1.0).epsilon(0.1));
  fs::remove_all(dir);
}

TEST_CASE("curve files do not depend on the worker count") {
  const auto dir = testing::scratch_dir("cli_curve");
  json c = shipped("curve_beta1.json");
  c["curve"]["n_paths_per_u"] = 2000;
  const auto cfg = stage(dir, c);
  REQUIRE(run_cli({"--config", cfg, "--workers", "1", "curve"}).code == 0);
  const auto one = read_text_file(dir / "out" / "curve.csv");
  const auto one_json = read_text_file(dir / "out" / "curve.json");
  REQUIRE(run_cli({"--config", cfg, "--workers", "4", "curve"}).code == 0);
  CHECK(read_text_file(dir / "out" / "curve.csv") == one);
  CHECK(read_text_file(dir / "out" / "curve.json") == one_json);
  fs::remove_all(dir);
}

TEST_CASE("worker precedence") {
  const auto dir = testing::scratch_dir("cli_workers");
  json c = shipped("cramer_lundberg.json");
  const auto path = dir / "c.json";
  write_text_file(path, c.dump());
  ::setenv("RUINKIT_WORKERS", "5", 1);
  CHECK(cli::load_run_config(path, {}).workers == 5);
  CHECK(cli::load_run_config(path, {.workers = 2}).workers == 2);
  c["workers"] = 3;
  write_text_file(path, c.dump());
  CHECK(cli::load_run_config(path, {}).workers == 3);
  CHECK(cli::load_run_config(path, {.workers = 2}).workers == 2);
  ::unsetenv("RUINKIT_WORKERS");
  c.erase("workers");
  write_text_file(path, c.dump());
  CHECK(cli::load_run_config(path, {}).workers == 1);
  ::setenv("RUINKIT_WORKERS", "zero", 1);
  CHECK(testing::error_code_of([&] { cli::load_run_config(path, {}); }) == ErrorCode::InvalidInput);
  ::unsetenv("RUINKIT_WORKERS");
  fs::remove_all(dir);
}

TEST_CASE("grid forms") {
  const auto g = cli::log_grid(1.0, 1000.0, 4);
  REQUIRE(g.size() == 4);
  CHECK(g[1] == doctest::Approx(10.0));
  CHECK(g[3] == 1000.0);
  json c = shipped("power_law_tail.json");
  c["roots"]["u_grid"] = {1.0, 3.0, 2.0};
  CHECK(testing::error_code_of([&] { cli::parse_run_config(c.dump()); }) == ErrorCode::NonMonotoneGrid);
  c["roots"]["u_grid"] = {1.0, 2.0, 3.0};
  CHECK(cli::parse_run_config(c.dump()).roots->u_grid.size() == 3);
}

TEST_CASE("exit code mapping") {
  CHECK(cli::exit_code(ErrorCode::InvalidInput) == 2);
  CHECK(cli::exit_code(ErrorCode::InvalidRegime) == 2);
  CHECK(cli::exit_code(ErrorCode::NonMonotoneGrid) == 2);
  CHECK(cli::exit_code(ErrorCode::InsufficientRange) == 2);
  CHECK(cli::exit_code(ErrorCode::NonConverged) == 1);
  CHECK(cli::exit_code(ErrorCode::Stiffness) == 1);
}
