#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ruinkit/asymptotics.hpp"
#include "ruinkit/mc_engine.hpp"
#include "ruinkit/model.hpp"
#include "ruinkit/solver.hpp"

namespace ruinkit::cli {

// A u-grid is written either as an explicit array or as
// {"min": .., "max": .., "points": n} (log-spaced).
struct SimulateSection {
  double u = 1.0;
  std::uint64_t n_paths = 10000;
  Horizon horizon;
  // When non-empty, one estimate per max_jumps value from a single path family.
  std::vector<std::uint64_t> jump_horizons;
  int nsub = kDefaultSubdivisions;
  double censor_threshold = kDefaultCensorThreshold;
};

struct CurveSection {
  std::vector<double> u_grid;
  std::uint64_t n_paths_per_u = 10000;
  Horizon horizon;  // defaults to default_curve_horizon(u_grid)
  int nsub = kDefaultSubdivisions;
  double censor_threshold = kDefaultCensorThreshold;
};

struct SolveSection {
  double u_min = 1e-3;
  double u_max = 1e6;
  std::size_t n_points = 2000;
  BoundaryPolicy policy;
};

struct RootsSection {
  std::vector<double> u_grid;
};

struct FitSection {
  // CSV with a u column and one of psi, p_hat or phi. Defaults to
  // <output_dir>/solution.csv.
  std::optional<std::filesystem::path> input;
  std::optional<FitRange> range;  // default: top decade of the usable rows
};

struct CrossvalSection {
  std::vector<double> u_grid;
  std::uint64_t n_paths_per_u = 100000;
  std::optional<Horizon> horizon;
  int nsub = kDefaultSubdivisions;
  double z = 3.0;                    // agreement: |psi_solver - p_hat| <= z stderr + abs_tol
  double abs_tol = 1e-3;
  double residual_max = 1e-4;        // max |IDE residual| / (alpha1 + alpha2)
  double beta_tol = 0.1;
  FitRange fit_range{1e2, 1e4};
  double censor_threshold = kDefaultCensorThreshold;
};

struct LowerBoundSection {
  double rho = 0.5;
  double b = 9.0;
  std::uint64_t n_samples = 100000;
  std::optional<CurveSection> curve;  // MC curve for the u^beta* p_hat check
};

struct LadderSection {
  std::uint64_t n_walks = 10000;
  std::uint64_t max_len = 1 << 14;
};

struct RunConfig {
  ModelParams model;
  std::uint64_t seed = 1;
  int workers = 0;  // 0 until resolved by load_run_config
  std::filesystem::path output_dir = "out";

  std::optional<SimulateSection> simulate;
  std::optional<CurveSection> curve;
  std::optional<SolveSection> solve;
  std::optional<RootsSection> roots;
  std::optional<FitSection> fit;
  std::optional<CrossvalSection> crossval;
  std::optional<LowerBoundSection> lowerbound;
  std::optional<LadderSection> ladder;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::filesystem::path> output_dir;
};

// Parses and checks a configuration document; unknown keys anywhere are
// rejected with INVALID_INPUT. The model is not validated here.
RunConfig parse_run_config(std::string_view json_text);

// Worker precedence: --workers, then the config file, then RUINKIT_WORKERS, then 1.
RunConfig load_run_config(const std::filesystem::path& path, const Overrides& overrides);

std::vector<double> log_grid(double lo, double hi, std::size_t points);

}  // namespace ruinkit::cli
