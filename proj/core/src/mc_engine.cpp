#include "ruinkit/mc_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "ruinkit/error.hpp"

namespace ruinkit {

namespace {

constexpr std::uint64_t kPathTag = 0x70617468;    // "path"
constexpr std::uint64_t kLowerTag = 0x6c6f7762;   // "lowb"
constexpr std::uint64_t kLadderTag = 0x6c616464;  // "ladd"

void require_valid(const ModelParams& params) {
  if (auto report = validate(params); !report.ok()) throw Error(ErrorCode::InvalidInput, report.summary());
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

MCEstimate make_estimate(double u, std::uint64_t n, std::uint64_t ruined, std::uint64_t censored,
                         std::uint64_t barrier, std::uint64_t seed, double threshold) {
  MCEstimate e;
  e.u = u;
  e.n_paths = n;
  e.n_ruined = ruined;
  e.n_censored = censored;
  e.n_barrier = barrier;
  e.seed = seed;
  const double nd = static_cast<double>(n);
  e.p_hat = static_cast<double>(ruined) / nd;
  e.std_error = std::sqrt(e.p_hat * (1.0 - e.p_hat) / nd);
  const auto ci = wilson_interval(ruined, n);
  e.ci_lo = ci.lo;
  e.ci_hi = ci.hi;
  e.censored_fraction = static_cast<double>(censored) / nd;
  e.barrier_fraction = static_cast<double>(barrier) / nd;
  e.censoring_warning = e.censored_fraction > threshold;
  return e;
}

// Index of the jump interval in which the path's classification happened:
// ruin at jump n or barrier hit at jump n -> n; ruin between jumps n and n+1 -> n + 1.
std::uint64_t event_index(const PathOutcome& o) {
  if (o.status == PathStatus::Ruined && o.ruin_kind == RuinKind::BetweenJumps) return o.n_jumps + 1;
  return o.n_jumps;
}

}  // namespace

bool MCEstimate::same_result(const MCEstimate& o) const {
  return u == o.u && p_hat == o.p_hat && std_error == o.std_error && ci_lo == o.ci_lo && ci_hi == o.ci_hi &&
         n_paths == o.n_paths && n_ruined == o.n_ruined && n_censored == o.n_censored &&
         n_barrier == o.n_barrier && censored_fraction == o.censored_fraction &&
         barrier_fraction == o.barrier_fraction && censoring_warning == o.censoring_warning && seed == o.seed;
}

WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nd = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nd;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nd;
  const double center = (p + z2 / (2.0 * nd)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nd + z2 / (4.0 * nd * nd));
  const double lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
  const double hi = successes == n ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

void parallel_chunks(std::uint64_t n, int workers,
                     const std::function<void(std::uint64_t, std::uint64_t)>& fn) {
  const std::uint64_t w = std::max<std::uint64_t>(1, std::min<std::uint64_t>(workers < 1 ? 1 : workers, n));
  if (w == 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(w);
  std::vector<std::exception_ptr> errors(w);
  for (std::uint64_t k = 0; k < w; ++k) {
    const std::uint64_t begin = n * k / w;
    const std::uint64_t end = n * (k + 1) / w;
    threads.emplace_back([&, k, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<MCEstimate> estimate_ruin_ladder(const ModelParams& params, double u, const Horizon& horizon,
                                             std::span<const std::uint64_t> jump_horizons,
                                             std::uint64_t n_paths, std::uint64_t seed,
                                             const MCOptions& options) {
  require_valid(params);
  if (!(u > 0.0)) throw Error(ErrorCode::InvalidInput, "initial capital u must be > 0");
  if (n_paths < 1) throw Error(ErrorCode::InvalidInput, "n_paths must be >= 1");
  if (jump_horizons.empty() || !std::is_sorted(jump_horizons.begin(), jump_horizons.end()) ||
      jump_horizons.front() < 1)
    throw Error(ErrorCode::InvalidInput, "jump horizons must be ascending and >= 1");

  const auto start = std::chrono::steady_clock::now();
  const std::size_t nh = jump_horizons.size();
  std::vector<MCEstimate> out;
  out.reserve(nh);

  if (no_ruin_possible(params)) {
    for (std::size_t k = 0; k < nh; ++k)
      out.push_back(make_estimate(u, n_paths, 0, 0, 0, seed, options.censor_threshold));
    const double rt = seconds_since(start);
    for (auto& e : out) e.runtime = rt;
    return out;
  }

  Horizon run = horizon;
  run.max_jumps = jump_horizons.back();
  const std::uint64_t key = derive_seed(seed, kPathTag);

  // Per path: status and event index. Stored compactly so the reduction is a
  // plain sequential count, identical for every worker count.
  std::vector<std::uint8_t> status(n_paths);
  std::vector<std::uint64_t> index(n_paths);
  parallel_chunks(n_paths, options.workers, [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      RandomStream rng(key, i);
      const PathOutcome o = simulate_path(params, u, run, options.nsub, rng);
      status[i] = static_cast<std::uint8_t>(o.status);
      index[i] = event_index(o);
    }
  });

  for (std::uint64_t h : jump_horizons) {
    std::uint64_t ruined = 0, barrier = 0, censored = 0;
    for (std::uint64_t i = 0; i < n_paths; ++i) {
      const auto s = static_cast<PathStatus>(status[i]);
      if (s == PathStatus::Ruined && index[i] <= h)
        ++ruined;
      else if (s == PathStatus::SurvivedToBarrier && index[i] <= h)
        ++barrier;
      else
        ++censored;
    }
    out.push_back(make_estimate(u, n_paths, ruined, censored, barrier, seed, options.censor_threshold));
  }
  const double rt = seconds_since(start);
  for (auto& e : out) e.runtime = rt;
  return out;
}

MCEstimate estimate_ruin(const ModelParams& params, double u, const Horizon& horizon, std::uint64_t n_paths,
                         std::uint64_t seed, const MCOptions& options) {
  const std::uint64_t h = horizon.max_jumps;
  return estimate_ruin_ladder(params, u, horizon, std::span<const std::uint64_t>(&h, 1), n_paths, seed,
                              options)
      .front();
}

Horizon default_curve_horizon(std::span<const double> u_grid, double barrier_factor) {
  Horizon h;
  h.max_jumps = 10000;
  if (!u_grid.empty()) h.upper_barrier = barrier_factor * *std::max_element(u_grid.begin(), u_grid.end());
  return h;
}

std::vector<MCEstimate> estimate_ruin_curve(const ModelParams& params, std::span<const double> u_grid,
                                            const Horizon& horizon, std::uint64_t n_paths_per_u,
                                            std::uint64_t seed, const MCOptions& options) {
  if (u_grid.empty()) throw Error(ErrorCode::InvalidInput, "u_grid is empty");
  for (std::size_t i = 0; i < u_grid.size(); ++i) {
    if (!(u_grid[i] > 0.0)) throw Error(ErrorCode::InvalidInput, "u_grid must be positive");
    if (i > 0 && !(u_grid[i] > u_grid[i - 1]))
      throw Error(ErrorCode::NonMonotoneGrid, "u_grid must be strictly increasing");
  }
  std::vector<MCEstimate> out;
  out.reserve(u_grid.size());
  for (double u : u_grid) out.push_back(estimate_ruin(params, u, horizon, n_paths_per_u, seed, options));
  return out;
}

PsiBracket bracket(const MCEstimate& est, double psi_at_barrier) {
  return {est.p_hat,
          std::min(1.0, est.p_hat + est.barrier_fraction * psi_at_barrier + est.censored_fraction)};
}

LowerBoundEstimate estimate_lower_bound(const ModelParams& params, double rho, double b, std::uint64_t n_samples,
                                        std::uint64_t seed, const MCOptions& options) {
  require_valid(params);
  if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorCode::InvalidInput, "rho must lie in ]0,1[");
  const double threshold = 1.0 / (rho * rho * (1.0 - rho));
  if (!(b > threshold)) throw Error(ErrorCode::InvalidInput, "b must exceed 1/(rho^2 (1 - rho))");
  if (n_samples < 1) throw Error(ErrorCode::InvalidInput, "n_samples must be >= 1");

  const double kappa = log_drift(params);
  const std::uint64_t key = derive_seed(seed, kLowerTag);
  std::vector<std::uint8_t> flags(n_samples);
  parallel_chunks(n_samples, options.workers, [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      RandomStream rng(key, i);
      const double dt = sample_interarrival(params, rng);
      const GbmStepSample step = sample_gbm_step(kappa, params.sigma, dt, options.nsub, rng);
      const double xi = sample_jump(params.alpha1, params.alpha2, params.mu1, params.mu2, rng);
      const double B = xi + params.c * step.J;
      std::uint8_t f = 0;
      if (step.A <= rho && B <= 1.0 / rho) f |= 1;
      if (step.A <= 1.0 / rho && B <= -b) f |= 2;
      flags[i] = f;
    }
  });

  LowerBoundEstimate lb;
  lb.rho = rho;
  lb.b = b;
  lb.n_samples = n_samples;
  for (auto f : flags) {
    lb.n_gamma += (f & 1) ? 1 : 0;
    lb.n_d += (f & 2) ? 1 : 0;
  }
  const double n = static_cast<double>(n_samples);
  lb.p_gamma = static_cast<double>(lb.n_gamma) / n;
  lb.p_d = static_cast<double>(lb.n_d) / n;
  lb.gamma_unobserved = lb.n_gamma == 0;
  lb.d_unobserved = lb.n_d == 0;
  lb.b1 = b - threshold;
  if (lb.p_gamma > 0.0) {
    lb.beta_star = lower_bound_exponent(lb.p_gamma, rho);
    lb.bound_constant = std::exp((2.0 + std::log(lb.b1) / std::log(rho)) * std::log(lb.p_gamma)) * lb.p_d;
  } else {
    lb.beta_star = std::numeric_limits<double>::infinity();
    lb.bound_constant = 0.0;
  }
  return lb;
}

LowerBoundCheck check_lower_bound(const LowerBoundEstimate& lb, std::span<const MCEstimate> curve) {
  LowerBoundCheck check;
  check.min_scaled = std::numeric_limits<double>::infinity();
  check.min_scaled_lower = std::numeric_limits<double>::infinity();
  check.consistent = std::isfinite(lb.beta_star) && !curve.empty();
  check.positive = !curve.empty();
  for (const auto& e : curve) {
    const double scale = std::pow(e.u, lb.beta_star);
    const double lower = e.p_hat - 3.0 * e.std_error;
    check.min_scaled = std::min(check.min_scaled, scale * e.p_hat);
    check.min_scaled_lower = std::min(check.min_scaled_lower, scale * lower);
    if (!(lower > 0.0)) check.positive = false;
    if (e.u > lb.b1 && scale * (e.p_hat + 3.0 * e.std_error) < lb.bound_constant) check.consistent = false;
  }
  return check;
}

LadderStats ladder_stats(const ModelParams& params, std::uint64_t n_walks, std::uint64_t max_len,
                         std::uint64_t seed, const MCOptions& options) {
  require_valid(params);
  const double kappa = log_drift(params);
  if (kappa > 0.0)
    throw Error(ErrorCode::InvalidRegime, "ladder statistics require beta <= 0 (non-positive log drift)");
  if (n_walks < 1 || max_len < 1) throw Error(ErrorCode::InvalidInput, "n_walks and max_len must be >= 1");

  LadderStats stats;
  stats.theta.assign(n_walks, 0);
  const std::uint64_t key = derive_seed(seed, kLadderTag);
  parallel_chunks(n_walks, options.workers, [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      RandomStream rng(key, i);
      double m = 0.0;
      for (std::uint64_t k = 1; k <= max_len; ++k) {
        const double dt = sample_interarrival(params, rng);
        m += kappa * dt;
        if (params.sigma > 0.0) m += params.sigma * std::sqrt(dt) * rng.normal();
        if (m < 0.0) {
          stats.theta[i] = k;
          break;
        }
      }
    }
  });

  std::vector<std::uint64_t> sorted(n_walks);
  for (std::uint64_t i = 0; i < n_walks; ++i) {
    sorted[i] = stats.theta[i] == 0 ? max_len + 1 : stats.theta[i];
    if (stats.theta[i] == 0) ++stats.censored;
  }
  std::sort(sorted.begin(), sorted.end());
  stats.median_theta = static_cast<double>(sorted[n_walks / 2]);
  for (std::uint64_t n = 1; n <= max_len; n *= 2) {
    const auto above = static_cast<double>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), n));
    const double tail = above / static_cast<double>(n_walks);
    stats.n_grid.push_back(n);
    stats.tail.push_back(tail);
    stats.scaled_tail.push_back(std::sqrt(static_cast<double>(n)) * tail);
  }
  return stats;
}

}  // namespace ruinkit
