#include "ruinkit_cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ruinkit/config.hpp"
#include "ruinkit/table_io.hpp"

namespace ruinkit::cli {

namespace {

using nlohmann::ordered_json;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void require_model(const ModelParams& model, std::ostream& log) {
  const ValidationReport report = validate(model);
  if (!report.ok()) throw Error(ErrorCode::InvalidInput, report.summary());
  for (const auto& issue : report.issues)
    if (issue.severity == Severity::Warning) log << "warning: " << issue.code << ": " << issue.message << '\n';
}

template <class T>
const T& require_section(const std::optional<T>& section, const char* name) {
  if (!section) throw Error(ErrorCode::InvalidInput, std::string("config has no '") + name + "' section");
  return *section;
}

ordered_json model_json(const ModelParams& m) { return ordered_json::parse(model_to_json(m)); }

ordered_json horizon_json(const Horizon& h) {
  ordered_json j;
  j["max_jumps"] = h.max_jumps;
  j["max_time"] = std::isinf(h.max_time) ? ordered_json(nullptr) : ordered_json(h.max_time);
  j["upper_barrier"] = h.upper_barrier ? ordered_json(*h.upper_barrier) : ordered_json(nullptr);
  return j;
}

ordered_json estimate_json(const MCEstimate& e) {
  return ordered_json{{"u", e.u},
                      {"p_hat", e.p_hat},
                      {"stderr", e.std_error},
                      {"ci_lo", e.ci_lo},
                      {"ci_hi", e.ci_hi},
                      {"n_paths", e.n_paths},
                      {"n_ruined", e.n_ruined},
                      {"n_censored", e.n_censored},
                      {"n_barrier", e.n_barrier},
                      {"censored_fraction", e.censored_fraction},
                      {"barrier_fraction", e.barrier_fraction},
                      {"censoring_warning", e.censoring_warning},
                      {"seed", e.seed}};
}

ordered_json fit_json(const PowerLawFit& f) {
  return ordered_json{{"beta_hat", f.beta_hat},
                      {"k_hat", f.k_hat},
                      {"fit_range", {{"lo", f.fit_range.lo}, {"hi", f.fit_range.hi}}},
                      {"r_squared", f.r_squared},
                      {"n_points", f.n_points}};
}

void write_json(const RunConfig& c, const char* name, const ordered_json& j) {
  write_text_file(c.output_dir / name, j.dump(2) + "\n");
}

void write_text(const RunConfig& c, const char* name, const std::string& text) {
  write_text_file(c.output_dir / name, text);
}

void warn_censoring(const std::vector<MCEstimate>& rows, std::ostream& log) {
  for (const auto& e : rows)
    if (e.censoring_warning)
      log << "warning: censored fraction " << format_number(e.censored_fraction) << " at u=" << format_number(e.u)
          << '\n';
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

std::vector<MCEstimate> cmd_simulate(const RunConfig& c, std::ostream& log) {
  const SimulateSection& s = require_section(c.simulate, "simulate");
  require_model(c.model, log);
  const MCOptions opts{c.workers, s.nsub, s.censor_threshold};
  Stopwatch clock;
  std::vector<MCEstimate> rows;
  if (s.jump_horizons.empty())
    rows.push_back(estimate_ruin(c.model, s.u, s.horizon, s.n_paths, c.seed, opts));
  else
    rows = estimate_ruin_ladder(c.model, s.u, s.horizon, s.jump_horizons, s.n_paths, c.seed, opts);
  log << "simulate: " << s.n_paths << " paths in " << clock.seconds() << " s\n";
  warn_censoring(rows, log);

  ordered_json j;
  j["command"] = "simulate";
  j["model"] = model_json(c.model);
  j["seed"] = c.seed;
  j["nsub"] = s.nsub;
  j["horizon"] = horizon_json(s.horizon);
  ordered_json list = ordered_json::array();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    ordered_json e = estimate_json(rows[k]);
    e["max_jumps"] = s.jump_horizons.empty() ? s.horizon.max_jumps : s.jump_horizons[k];
    list.push_back(std::move(e));
  }
  j["estimates"] = std::move(list);
  write_text(c, "simulate.csv", mc_table_csv(rows));
  write_json(c, "simulate.json", j);
  return rows;
}

std::vector<MCEstimate> cmd_curve(const RunConfig& c, std::ostream& log) {
  const CurveSection& s = require_section(c.curve, "curve");
  require_model(c.model, log);
  Stopwatch clock;
  const auto rows = estimate_ruin_curve(c.model, s.u_grid, s.horizon, s.n_paths_per_u, c.seed,
                                        MCOptions{c.workers, s.nsub, s.censor_threshold});
  log << "curve: " << s.u_grid.size() << " points in " << clock.seconds() << " s\n";
  warn_censoring(rows, log);

  ordered_json j;
  j["command"] = "curve";
  j["model"] = model_json(c.model);
  j["seed"] = c.seed;
  j["nsub"] = s.nsub;
  j["horizon"] = horizon_json(s.horizon);
  ordered_json list = ordered_json::array();
  for (const auto& e : rows) list.push_back(estimate_json(e));
  j["estimates"] = std::move(list);
  write_text(c, "curve.csv", mc_table_csv(rows));
  write_json(c, "curve.json", j);
  return rows;
}

GridSolution cmd_solve(const RunConfig& c, std::ostream& log) {
  const SolveSection& s = require_section(c.solve, "solve");
  require_model(c.model, log);
  Stopwatch clock;
  GridSolution sol = solve_survival(c.model, s.u_min, s.u_max, s.n_points, s.policy);
  log << "solve: " << s.n_points << " nodes in " << clock.seconds() << " s\n";

  ordered_json j;
  j["command"] = "solve";
  j["model"] = model_json(c.model);
  j["u_min"] = s.u_min;
  j["u_max"] = s.u_max;
  j["n_points"] = s.n_points;
  j["beta"] = derive(c.model).beta;
  j["left_boundary"] = sol.left_equation ? "equation" : "zero";
  j["tail_k"] = sol.tail_k;
  j["tail"] = sol.tail;
  j["max_residual_ide_scaled"] = max_abs(sol.residual_ide) / c.model.alpha_total();
  const auto centered = ode3_centered(sol.u, c.model, s.policy.ode3_spacing);
  double ode3_max = 0.0;
  for (std::size_t i = 0; i < sol.size(); ++i)
    if (centered[i]) ode3_max = std::max(ode3_max, std::abs(sol.residual_ode3[i]));
  j["max_residual_ode3_interior"] = ode3_max;
  write_text(c, "solution.csv", solution_csv(sol));
  write_json(c, "solve.json", j);
  return sol;
}

std::vector<CharRoots> cmd_roots(const RunConfig& c, std::ostream& log) {
  const RootsSection& s = require_section(c.roots, "roots");
  require_model(c.model, log);
  auto rows = track_roots(c.model, s.u_grid);
  std::size_t flagged = 0;
  for (const auto& r : rows) flagged += r.near_collision ? 1 : 0;
  if (flagged) log << "warning: " << flagged << " grid points with nearly colliding roots\n";
  write_text(c, "roots.csv", roots_csv(rows));
  return rows;
}

PowerLawFit cmd_fit(const RunConfig& c, std::ostream& log) {
  const FitSection& s = require_section(c.fit, "fit");
  const auto input = s.input.value_or(c.output_dir / "solution.csv");
  const CsvTable table = parse_csv(read_text_file(input));
  const auto u = table.column("u");
  std::vector<double> psi;
  if (table.has("psi")) {
    psi = table.column("psi");
  } else if (table.has("p_hat")) {
    psi = table.column("p_hat");
  } else if (table.has("phi")) {
    psi = table.column("phi");
    for (double& v : psi) v = 1.0 - v;
  } else {
    throw Error(ErrorCode::InvalidInput, "fit input needs a psi, p_hat or phi column");
  }
  std::vector<double> se;
  if (table.has("stderr")) se = table.column("stderr");

  // Rows usable for a log-log fit: positive psi and, for MC tables, low censoring.
  std::vector<bool> usable(u.size(), true);
  if (table.has("censored_fraction")) {
    const auto cf = table.column("censored_fraction");
    for (std::size_t i = 0; i < u.size(); ++i) usable[i] = cf[i] < kDefaultCensorThreshold;
  }
  FitRange range{};
  if (s.range) {
    range = *s.range;
  } else {
    double top = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
      if (usable[i] && psi[i] > 0.0) top = std::max(top, u[i]);
    if (!(top > 0.0)) throw Error(ErrorCode::InsufficientRange, "no usable rows to fit");
    range = {top / 10.0, top};
  }
  std::vector<double> fu, fp, fs;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!usable[i]) continue;
    fu.push_back(u[i]);
    fp.push_back(psi[i]);
    if (!se.empty()) fs.push_back(se[i]);
  }
  const PowerLawFit fit = fit_power_law(fu, fp, range, fs);
  log << "fit: beta_hat=" << format_number(fit.beta_hat) << " k_hat=" << format_number(fit.k_hat) << '\n';

  ordered_json j;
  j["command"] = "fit";
  j["input"] = input.string();
  j.update(fit_json(fit));
  if (const auto t = theoretical_tail(c.model); t.regime == TailRegime::PowerLawDecay) j["beta_theory"] = t.beta;
  write_json(c, "fit.json", j);
  return fit;
}

CrossvalReport cmd_crossval(const RunConfig& c, std::ostream& log) {
  const SolveSection& solve = require_section(c.solve, "solve");
  const CrossvalSection& s = require_section(c.crossval, "crossval");
  require_model(c.model, log);
  const TheoreticalTail theory = theoretical_tail(c.model);
  if (theory.regime != TailRegime::PowerLawDecay)
    throw Error(ErrorCode::InvalidRegime, "beta = " + format_number(theory.beta) + " <= 0: ruin is certain");

  CrossvalReport rep;
  Stopwatch clock;
  const GridSolution sol = solve_survival(c.model, solve.u_min, solve.u_max, solve.n_points, solve.policy);
  for (double u : s.u_grid) rep.psi_solver.push_back(1.0 - survival_at(sol, u));
  const Horizon horizon = s.horizon.value_or(default_curve_horizon(s.u_grid));
  rep.mc = estimate_ruin_curve(c.model, s.u_grid, horizon, s.n_paths_per_u, c.seed,
                               MCOptions{c.workers, s.nsub, s.censor_threshold});
  log << "crossval: solver and " << s.u_grid.size() << " MC points in " << clock.seconds() << " s\n";

  for (std::size_t k = 0; k < s.u_grid.size(); ++k) {
    const MCEstimate& e = rep.mc[k];
    const double diff = std::abs(rep.psi_solver[k] - e.p_hat);
    const double tol = s.z * e.std_error + s.abs_tol;
    rep.checks.push_back({"agreement u=" + format_number(e.u), diff <= tol,
                          "|psi_solver - p_hat| = " + format_number(diff) + " <= " + format_number(tol)});
    rep.checks.push_back({"censoring u=" + format_number(e.u), e.censored_fraction < s.censor_threshold,
                          "censored_fraction = " + format_number(e.censored_fraction) + " < " +
                              format_number(s.censor_threshold)});
  }
  rep.max_residual_scaled = max_abs(sol.residual_ide) / c.model.alpha_total();
  rep.checks.push_back({"ide residual", rep.max_residual_scaled <= s.residual_max,
                        "max |residual| / (alpha1 + alpha2) = " + format_number(rep.max_residual_scaled) +
                            " <= " + format_number(s.residual_max)});

  std::vector<double> psi(sol.size());
  for (std::size_t i = 0; i < sol.size(); ++i) psi[i] = 1.0 - sol.phi[i];
  rep.fit = fit_power_law(sol.u, psi, s.fit_range);
  rep.checks.push_back({"tail exponent", std::abs(rep.fit.beta_hat - theory.beta) <= s.beta_tol && rep.fit.k_hat > 0,
                        "beta_hat = " + format_number(rep.fit.beta_hat) + ", beta = " + format_number(theory.beta) +
                            ", k_hat = " + format_number(rep.fit.k_hat)});
  rep.pass = true;
  for (const auto& ch : rep.checks) rep.pass = rep.pass && ch.pass;

  std::string text;
  ordered_json checks = ordered_json::array();
  for (const auto& ch : rep.checks) {
    text += std::string(ch.pass ? "PASS " : "FAIL ") + ch.name + ": " + ch.detail + "\n";
    checks.push_back({{"name", ch.name}, {"pass", ch.pass}, {"detail", ch.detail}});
  }
  text += std::string("status ") + (rep.pass ? "PASS" : "FAIL") + "\n";

  std::string csv = "u,psi_solver,p_hat,stderr,censored_fraction\n";
  for (std::size_t k = 0; k < s.u_grid.size(); ++k)
    csv += format_number(s.u_grid[k]) + ',' + format_number(rep.psi_solver[k]) + ',' + format_number(rep.mc[k].p_hat) +
           ',' + format_number(rep.mc[k].std_error) + ',' + format_number(rep.mc[k].censored_fraction) + '\n';

  ordered_json j;
  j["command"] = "crossval";
  j["model"] = model_json(c.model);
  j["seed"] = c.seed;
  j["status"] = rep.pass ? "PASS" : "FAIL";
  j["beta"] = theory.beta;
  j["fit"] = fit_json(rep.fit);
  j["max_residual_ide_scaled"] = rep.max_residual_scaled;
  j["checks"] = std::move(checks);
  write_text(c, "crossval.txt", text);
  write_text(c, "crossval.csv", csv);
  write_json(c, "crossval.json", j);
  return rep;
}

LowerBoundResult cmd_lowerbound(const RunConfig& c, std::ostream& log) {
  const LowerBoundSection& s = require_section(c.lowerbound, "lowerbound");
  require_model(c.model, log);
  LowerBoundResult res;
  Stopwatch clock;
  res.estimate = estimate_lower_bound(c.model, s.rho, s.b, s.n_samples, c.seed, MCOptions{c.workers});
  if (res.estimate.gamma_unobserved) log << "warning: event Gamma unobserved at this sample size\n";
  if (res.estimate.d_unobserved) log << "warning: event D unobserved at this sample size\n";
  if (s.curve) {
    res.curve = estimate_ruin_curve(c.model, s.curve->u_grid, s.curve->horizon, s.curve->n_paths_per_u, c.seed,
                                    MCOptions{c.workers, s.curve->nsub, s.curve->censor_threshold});
    warn_censoring(res.curve, log);
    res.check = check_lower_bound(res.estimate, res.curve);
  }
  log << "lowerbound: done in " << clock.seconds() << " s\n";

  const LowerBoundEstimate& e = res.estimate;
  ordered_json j;
  j["command"] = "lowerbound";
  j["model"] = model_json(c.model);
  j["seed"] = c.seed;
  j["rho"] = e.rho;
  j["b"] = e.b;
  j["b1"] = e.b1;
  j["n_samples"] = e.n_samples;
  j["n_gamma"] = e.n_gamma;
  j["n_d"] = e.n_d;
  j["p_gamma"] = e.p_gamma;
  j["p_d"] = e.p_d;
  j["beta_star"] = e.beta_star;
  j["bound_constant"] = e.bound_constant;
  j["gamma_unobserved"] = e.gamma_unobserved;
  j["d_unobserved"] = e.d_unobserved;
  if (res.check) {
    j["curve_check"] = {{"min_scaled", res.check->min_scaled},
                        {"min_scaled_lower", res.check->min_scaled_lower},
                        {"consistent", res.check->consistent},
                        {"positive", res.check->positive}};
    write_text(c, "lowerbound_curve.csv", mc_table_csv(res.curve));
  }
  write_json(c, "lowerbound.json", j);
  return res;
}

LadderStats cmd_ladder(const RunConfig& c, std::ostream& log) {
  const LadderSection& s = require_section(c.ladder, "ladder");
  require_model(c.model, log);
  Stopwatch clock;
  LadderStats st = ladder_stats(c.model, s.n_walks, s.max_len, c.seed, MCOptions{c.workers});
  log << "ladder: " << s.n_walks << " walks in " << clock.seconds() << " s\n";

  std::string csv = "n,tail,scaled_tail\n";
  double worst = 0.0;
  for (std::size_t k = 0; k < st.n_grid.size(); ++k) {
    csv += std::to_string(st.n_grid[k]) + ',' + format_number(st.tail[k]) + ',' + format_number(st.scaled_tail[k]) +
           '\n';
    worst = std::max(worst, st.scaled_tail[k]);
  }
  ordered_json j;
  j["command"] = "ladder";
  j["model"] = model_json(c.model);
  j["seed"] = c.seed;
  j["n_walks"] = s.n_walks;
  j["max_len"] = s.max_len;
  j["censored"] = st.censored;
  j["median_theta"] = st.median_theta;
  j["max_scaled_tail"] = worst;
  write_text(c, "ladder.csv", csv);
  write_json(c, "ladder.json", j);
  return st;
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonConverged:
    case ErrorCode::Stiffness:
      return 1;
    case ErrorCode::InvalidInput:
    case ErrorCode::InvalidRegime:
    case ErrorCode::InsufficientRange:
    case ErrorCode::NonMonotoneGrid:
      return 2;
  }
  return 1;
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ruin probabilities for a risk process with investment returns", "ruinkit"};
  app.fallthrough();
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--seed", seed, "Override the configured seed");
  app.add_option("--workers", workers, "Worker threads (default: RUINKIT_WORKERS or 1)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "Output directory");

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"simulate", "Monte Carlo ruin probability at one u"},
      {"curve", "Monte Carlo ruin curve over a u grid"},
      {"solve", "Survival probability from the integro-differential equation"},
      {"roots", "Characteristic roots along a u grid"},
      {"fit", "Power-law tail fit of a tabulated curve"},
      {"crossval", "Solver against Monte Carlo, with pass/fail report"},
      {"lowerbound", "Gamma/D event probabilities and beta*"},
      {"ladder", "Ladder epoch tail of the log-return walk"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    Overrides ov;
    ov.seed = seed;
    ov.workers = workers;
    if (out_dir) ov.output_dir = *out_dir;
    const RunConfig config = load_run_config(config_path, ov);
    if (command == "simulate") {
      for (const auto& e : cmd_simulate(config, err))
        out << "u=" << format_number(e.u) << " p_hat=" << format_number(e.p_hat)
            << " stderr=" << format_number(e.std_error) << '\n';
    } else if (command == "curve") {
      cmd_curve(config, err);
    } else if (command == "solve") {
      cmd_solve(config, err);
    } else if (command == "roots") {
      cmd_roots(config, err);
    } else if (command == "fit") {
      const auto f = cmd_fit(config, err);
      out << "beta_hat=" << format_number(f.beta_hat) << " k_hat=" << format_number(f.k_hat) << '\n';
    } else if (command == "crossval") {
      const auto rep = cmd_crossval(config, err);
      out << "status " << (rep.pass ? "PASS" : "FAIL") << '\n';
      if (!rep.pass) return 1;
    } else if (command == "lowerbound") {
      const auto r = cmd_lowerbound(config, err);
      out << "beta_star=" << format_number(r.estimate.beta_star) << '\n';
    } else if (command == "ladder") {
      cmd_ladder(config, err);
    }
    out << "wrote " << config.output_dir.string() << '\n';
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace ruinkit::cli
