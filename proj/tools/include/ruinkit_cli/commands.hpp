#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ruinkit/asymptotics.hpp"
#include "ruinkit/error.hpp"
#include "ruinkit/mc_engine.hpp"
#include "ruinkit/solver.hpp"
#include "ruinkit_cli/run_config.hpp"

namespace ruinkit::cli {

// Every command writes its files under config.output_dir, logs progress and
// timings to `log`, and throws ruinkit::Error on failure. A command that needs
// a section the config lacks throws INVALID_INPUT.

// simulate.csv, simulate.json
std::vector<MCEstimate> cmd_simulate(const RunConfig& config, std::ostream& log);
// curve.csv, curve.json
std::vector<MCEstimate> cmd_curve(const RunConfig& config, std::ostream& log);
// solution.csv, solve.json
GridSolution cmd_solve(const RunConfig& config, std::ostream& log);
// roots.csv
std::vector<CharRoots> cmd_roots(const RunConfig& config, std::ostream& log);
// fit.json
PowerLawFit cmd_fit(const RunConfig& config, std::ostream& log);

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct CrossvalReport {
  std::vector<Check> checks;
  std::vector<MCEstimate> mc;
  std::vector<double> psi_solver;
  PowerLawFit fit;
  double max_residual_scaled = 0.0;
  bool pass = false;
};

// crossval.json, crossval.txt, crossval.csv. A failed check is reported, not thrown.
CrossvalReport cmd_crossval(const RunConfig& config, std::ostream& log);

struct LowerBoundResult {
  LowerBoundEstimate estimate;
  std::vector<MCEstimate> curve;
  std::optional<LowerBoundCheck> check;
};

// lowerbound.json, plus lowerbound_curve.csv when a curve is configured.
LowerBoundResult cmd_lowerbound(const RunConfig& config, std::ostream& log);
// ladder.csv, ladder.json
LadderStats cmd_ladder(const RunConfig& config, std::ostream& log);

// 0 success, 1 numerical or internal failure, 2 invalid input.
int exit_code(ErrorCode code);

// Full command line, argv[0] excluded. Returns the process exit code.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace ruinkit::cli
