#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ruinkit/model.hpp"
#include "ruinkit/path_sim.hpp"

namespace ruinkit {

inline constexpr double kDefaultCensorThreshold = 0.01;

struct MCEstimate {
  double u = 0.0;
  double p_hat = 0.0;
  double std_error = 0.0;  // binomial standard error of p_hat
  double ci_lo = 0.0;    // 95% Wilson interval
  double ci_hi = 0.0;
  std::uint64_t n_paths = 0;
  std::uint64_t n_ruined = 0;
  std::uint64_t n_censored = 0;
  std::uint64_t n_barrier = 0;
  double censored_fraction = 0.0;
  double barrier_fraction = 0.0;
  bool censoring_warning = false;  // censored_fraction above the configured threshold
  double runtime = 0.0;            // seconds; excluded from comparisons
  std::uint64_t seed = 0;

  // Everything except runtime.
  bool same_result(const MCEstimate& other) const;
};

struct WilsonInterval {
  double lo;
  double hi;
};

WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t n, double z = 1.959963984540054);

struct MCOptions {
  int workers = 1;
  int nsub = kDefaultSubdivisions;
  double censor_threshold = kDefaultCensorThreshold;
};

// Ruin indicator mean over n_paths trajectories. Path i draws from stream
// (seed, i), so the result does not depend on the worker count.
MCEstimate estimate_ruin(const ModelParams& params, double u, const Horizon& horizon, std::uint64_t n_paths,
                         std::uint64_t seed, const MCOptions& options = {});

// One estimate per max_jumps value in `jump_horizons` (ascending), computed from
// a single family of paths run to the largest horizon. Entry k equals
// estimate_ruin with max_jumps = jump_horizons[k].
std::vector<MCEstimate> estimate_ruin_ladder(const ModelParams& params, double u, const Horizon& horizon,
                                             std::span<const std::uint64_t> jump_horizons,
                                             std::uint64_t n_paths, std::uint64_t seed,
                                             const MCOptions& options = {});

// max_jumps = 10^4 and an absorbing upper barrier at barrier_factor * max(u_grid).
Horizon default_curve_horizon(std::span<const double> u_grid, double barrier_factor = 100.0);

// Same seed at every grid point: the paths for different u share their
// variates, and since X^u is pathwise increasing in u the curve is monotone.
std::vector<MCEstimate> estimate_ruin_curve(const ModelParams& params, std::span<const double> u_grid,
                                            const Horizon& horizon, std::uint64_t n_paths_per_u,
                                            std::uint64_t seed, const MCOptions& options = {});

struct PsiBracket {
  double lo;
  double hi;
};

// Psi(u) lies in [p_hat, p_hat + barrier_fraction * psi_at_barrier + censored_fraction].
PsiBracket bracket(const MCEstimate& est, double psi_at_barrier);

struct LowerBoundEstimate {
  double rho = 0.0;
  double b = 0.0;
  std::uint64_t n_samples = 0;
  std::uint64_t n_gamma = 0;
  std::uint64_t n_d = 0;
  double p_gamma = 0.0;  // P(A <= rho, B <= 1/rho)
  double p_d = 0.0;      // P(A <= 1/rho, B <= -b)
  double beta_star = 0.0;
  // u^beta_star * Psi(u) >= bound_constant for u > b1 = b - 1/(rho^2 (1 - rho)).
  double bound_constant = 0.0;
  double b1 = 0.0;
  bool gamma_unobserved = false;
  bool d_unobserved = false;
};

// beta* = ln P(Gamma) / ln rho
inline double lower_bound_exponent(double p_gamma, double rho) { return std::log(p_gamma) / std::log(rho); }

LowerBoundEstimate estimate_lower_bound(const ModelParams& params, double rho, double b, std::uint64_t n_samples,
                                        std::uint64_t seed, const MCOptions& options = {});

struct LowerBoundCheck {
  double min_scaled = 0.0;        // min over the curve of u^beta_star p_hat
  double min_scaled_lower = 0.0;  // same with p_hat - 3 stderr
  bool consistent = false;  // p_hat + 3 stderr >= bound_constant u^-beta_star at every u > b1
  bool positive = false;    // p_hat - 3 stderr > 0 at every u
};

LowerBoundCheck check_lower_bound(const LowerBoundEstimate& lb, std::span<const MCEstimate> curve);

struct LadderStats {
  std::vector<std::uint64_t> theta;  // first descending ladder epoch; 0 marks a censored walk
  std::uint64_t censored = 0;
  std::vector<std::uint64_t> n_grid;  // dyadic
  std::vector<double> tail;           // P^(theta > n)
  std::vector<double> scaled_tail;    // sqrt(n) P^(theta > n)
  double median_theta = 0.0;          // over all walks, censored counted as max_len + 1
};

// Walks M_k = sum ln A_j with exact Gaussian increments; requires a
// non-positive log drift (beta <= 0 when sigma > 0).
LadderStats ladder_stats(const ModelParams& params, std::uint64_t n_walks, std::uint64_t max_len,
                         std::uint64_t seed, const MCOptions& options = {});

// Runs fn(begin, end) over contiguous chunks of [0, n) on `workers` threads.
void parallel_chunks(std::uint64_t n, int workers,
                     const std::function<void(std::uint64_t, std::uint64_t)>& fn);

}  // namespace ruinkit
