#include "ruinkit_cli/run_config.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>

#include <json.hpp>

#include "ruinkit/config.hpp"
#include "ruinkit/error.hpp"
#include "ruinkit/table_io.hpp"

namespace ruinkit::cli {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::InvalidInput, msg); }

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) bad(where + " must be an object");
  for (const auto& item : j.items())
    if (!allowed.contains(item.key())) bad("unknown key '" + item.key() + "' in " + where);
}

double get_double(const json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) bad(where + "." + key + " must be a number");
  return j.at(key).get<double>();
}

std::uint64_t get_count(const json& j, const char* key, std::uint64_t fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  bad(where + "." + key + " must be a non-negative integer");
}

int get_int(const json& j, const char* key, int fallback, const std::string& where) {
  const auto v = get_count(j, key, static_cast<std::uint64_t>(fallback < 0 ? 0 : fallback), where);
  if (v > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) bad(where + "." + key + " is too large");
  return static_cast<int>(v);
}

std::vector<double> parse_grid(const json& j, const std::string& where) {
  std::vector<double> grid;
  if (j.is_array()) {
    for (const auto& v : j) {
      if (!v.is_number()) bad(where + " entries must be numbers");
      grid.push_back(v.get<double>());
    }
  } else {
    check_keys(j, {"min", "max", "points"}, where);
    if (!j.contains("min") || !j.contains("max") || !j.contains("points"))
      bad(where + " needs min, max and points");
    const double lo = get_double(j, "min", 0, where), hi = get_double(j, "max", 0, where);
    const auto n = get_count(j, "points", 0, where);
    grid = log_grid(lo, hi, n);
  }
  if (grid.empty()) bad(where + " is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0) || !std::isfinite(grid[i])) bad(where + " values must be positive and finite");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw Error(ErrorCode::NonMonotoneGrid, where + " must be strictly increasing");
  }
  return grid;
}

Horizon parse_horizon(const json& j, const std::string& where) {
  check_keys(j, {"max_jumps", "max_time", "upper_barrier"}, where);
  Horizon h;
  h.max_jumps = get_count(j, "max_jumps", h.max_jumps, where);
  if (j.contains("max_time") && !j.at("max_time").is_null())
    h.max_time = get_double(j, "max_time", h.max_time, where);
  if (j.contains("upper_barrier") && !j.at("upper_barrier").is_null())
    h.upper_barrier = get_double(j, "upper_barrier", 0, where);
  if (h.max_jumps == 0) bad(where + ".max_jumps must be positive");
  if (!(h.max_time > 0)) bad(where + ".max_time must be positive");
  return h;
}

FitRange parse_range(const json& j, const std::string& where) {
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  check_keys(j, {"lo", "hi"}, where);
  if (!j.contains("lo") || !j.contains("hi")) bad(where + " needs lo and hi");
  return {get_double(j, "lo", 0, where), get_double(j, "hi", 0, where)};
}

CurveSection parse_curve(const json& j, const std::string& where) {
  check_keys(j, {"u_grid", "n_paths_per_u", "horizon", "nsub", "censor_threshold"}, where);
  if (!j.contains("u_grid")) bad(where + ".u_grid is required");
  CurveSection s;
  s.u_grid = parse_grid(j.at("u_grid"), where + ".u_grid");
  s.n_paths_per_u = get_count(j, "n_paths_per_u", s.n_paths_per_u, where);
  s.horizon = j.contains("horizon") ? parse_horizon(j.at("horizon"), where + ".horizon")
                                    : default_curve_horizon(s.u_grid);
  s.nsub = get_int(j, "nsub", s.nsub, where);
  s.censor_threshold = get_double(j, "censor_threshold", s.censor_threshold, where);
  return s;
}

LeftBoundary parse_left(const std::string& v) {
  if (v == "auto") return LeftBoundary::Auto;
  if (v == "zero") return LeftBoundary::ZeroDirichlet;
  if (v == "equation") return LeftBoundary::EquationPinned;
  bad("solve.left must be auto, zero or equation");
}

TailPolicy parse_tail(const std::string& v) {
  if (v == "none") return TailPolicy::None;
  if (v == "given") return TailPolicy::Given;
  if (v == "two_pass") return TailPolicy::TwoPass;
  bad("solve.tail must be none, given or two_pass");
}

std::string get_string(const json& j, const char* key, const std::string& fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) bad(where + "." + key + " must be a string");
  return j.at(key).get<std::string>();
}

}  // namespace

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0) || !(hi > lo) || !std::isfinite(hi)) bad("log grid needs 0 < min < max");
  if (points < 2) bad("log grid needs at least 2 points");
  std::vector<double> g(points);
  const double l0 = std::log10(lo), l1 = std::log10(hi);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = std::pow(10.0, l0 + (l1 - l0) * static_cast<double>(i) / static_cast<double>(points - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

RunConfig parse_run_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    bad(std::string("malformed config JSON: ") + e.what());
  }
  check_keys(j, {"model", "seed", "workers", "output_dir", "simulate", "curve", "solve", "roots", "fit", "crossval",
                 "lowerbound", "ladder"},
             "config");
  if (!j.contains("model")) bad("config.model is required");

  RunConfig c;
  c.model = model_from_json(j.at("model").dump());
  c.seed = get_count(j, "seed", c.seed, "config");
  c.workers = get_int(j, "workers", 0, "config");
  if (j.contains("output_dir")) c.output_dir = get_string(j, "output_dir", "", "config");

  if (j.contains("simulate")) {
    const json& s = j.at("simulate");
    check_keys(s, {"u", "n_paths", "horizon", "jump_horizons", "nsub", "censor_threshold"}, "simulate");
    SimulateSection sec;
    sec.u = get_double(s, "u", sec.u, "simulate");
    sec.n_paths = get_count(s, "n_paths", sec.n_paths, "simulate");
    if (s.contains("horizon")) sec.horizon = parse_horizon(s.at("horizon"), "simulate.horizon");
    if (s.contains("jump_horizons")) {
      if (!s.at("jump_horizons").is_array()) bad("simulate.jump_horizons must be an array");
      for (const auto& v : s.at("jump_horizons")) {
        if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0)
          bad("simulate.jump_horizons entries must be positive integers");
        sec.jump_horizons.push_back(v.get<std::uint64_t>());
      }
    }
    sec.nsub = get_int(s, "nsub", sec.nsub, "simulate");
    sec.censor_threshold = get_double(s, "censor_threshold", sec.censor_threshold, "simulate");
    c.simulate = sec;
  }
  if (j.contains("curve")) c.curve = parse_curve(j.at("curve"), "curve");
  if (j.contains("solve")) {
    const json& s = j.at("solve");
    check_keys(s, {"u_min", "u_max", "n_points", "left", "tail", "tail_k", "residual_threshold", "ode3_spacing"},
               "solve");
    SolveSection sec;
    sec.u_min = get_double(s, "u_min", sec.u_min, "solve");
    sec.u_max = get_double(s, "u_max", sec.u_max, "solve");
    sec.n_points = get_count(s, "n_points", sec.n_points, "solve");
    sec.policy.left = parse_left(get_string(s, "left", "auto", "solve"));
    sec.policy.tail = parse_tail(get_string(s, "tail", "two_pass", "solve"));
    sec.policy.tail_k = get_double(s, "tail_k", sec.policy.tail_k, "solve");
    sec.policy.residual_threshold = get_double(s, "residual_threshold", sec.policy.residual_threshold, "solve");
    sec.policy.ode3_spacing = get_double(s, "ode3_spacing", sec.policy.ode3_spacing, "solve");
    c.solve = sec;
  }
  if (j.contains("roots")) {
    const json& s = j.at("roots");
    check_keys(s, {"u_grid"}, "roots");
    if (!s.contains("u_grid")) bad("roots.u_grid is required");
    c.roots = RootsSection{parse_grid(s.at("u_grid"), "roots.u_grid")};
  }
  if (j.contains("fit")) {
    const json& s = j.at("fit");
    check_keys(s, {"input", "range"}, "fit");
    FitSection sec;
    if (s.contains("input")) sec.input = std::filesystem::path(get_string(s, "input", "", "fit"));
    if (s.contains("range")) sec.range = parse_range(s.at("range"), "fit.range");
    c.fit = sec;
  }
  if (j.contains("crossval")) {
    const json& s = j.at("crossval");
    check_keys(s, {"u_grid", "n_paths_per_u", "horizon", "nsub", "z", "abs_tol", "residual_max", "beta_tol",
                   "fit_range", "censor_threshold"},
               "crossval");
    if (!s.contains("u_grid")) bad("crossval.u_grid is required");
    CrossvalSection sec;
    sec.u_grid = parse_grid(s.at("u_grid"), "crossval.u_grid");
    sec.n_paths_per_u = get_count(s, "n_paths_per_u", sec.n_paths_per_u, "crossval");
    if (s.contains("horizon")) sec.horizon = parse_horizon(s.at("horizon"), "crossval.horizon");
    sec.nsub = get_int(s, "nsub", sec.nsub, "crossval");
    sec.z = get_double(s, "z", sec.z, "crossval");
    sec.abs_tol = get_double(s, "abs_tol", sec.abs_tol, "crossval");
    sec.residual_max = get_double(s, "residual_max", sec.residual_max, "crossval");
    sec.beta_tol = get_double(s, "beta_tol", sec.beta_tol, "crossval");
    if (s.contains("fit_range")) sec.fit_range = parse_range(s.at("fit_range"), "crossval.fit_range");
    sec.censor_threshold = get_double(s, "censor_threshold", sec.censor_threshold, "crossval");
    c.crossval = sec;
  }
  if (j.contains("lowerbound")) {
    const json& s = j.at("lowerbound");
    check_keys(s, {"rho", "b", "n_samples", "curve"}, "lowerbound");
    LowerBoundSection sec;
    sec.rho = get_double(s, "rho", sec.rho, "lowerbound");
    sec.b = get_double(s, "b", sec.b, "lowerbound");
    sec.n_samples = get_count(s, "n_samples", sec.n_samples, "lowerbound");
    if (s.contains("curve")) sec.curve = parse_curve(s.at("curve"), "lowerbound.curve");
    c.lowerbound = sec;
  }
  if (j.contains("ladder")) {
    const json& s = j.at("ladder");
    check_keys(s, {"n_walks", "max_len"}, "ladder");
    LadderSection sec;
    sec.n_walks = get_count(s, "n_walks", sec.n_walks, "ladder");
    sec.max_len = get_count(s, "max_len", sec.max_len, "ladder");
    c.ladder = sec;
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, const Overrides& overrides) {
  RunConfig c = parse_run_config(read_text_file(path));
  if (overrides.seed) c.seed = *overrides.seed;
  if (overrides.output_dir) c.output_dir = *overrides.output_dir;
  if (overrides.workers) {
    c.workers = *overrides.workers;
  } else if (c.workers == 0) {
    c.workers = 1;
    if (const char* env = std::getenv("RUINKIT_WORKERS"); env && *env) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (*end != '\0' || v < 1 || v > 4096) bad("RUINKIT_WORKERS must be a positive integer");
      c.workers = static_cast<int>(v);
    }
  }
  if (c.workers < 1) bad("workers must be at least 1");
  return c;
}

}  // namespace ruinkit::cli
