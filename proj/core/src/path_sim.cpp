#include "ruinkit/path_sim.hpp"

#include <bit>
#include <cmath>

namespace ruinkit {

namespace {

int round_up_pow2(int n) {
  if (n < 1) n = 1;
  return static_cast<int>(std::bit_ceil(static_cast<unsigned>(n)));
}

GbmStepSample deterministic_step(double kappa, double dt) {
  GbmStepSample s;
  s.dt = dt;
  s.A = std::exp(kappa * dt);
  s.J = kappa == 0.0 ? dt : std::expm1(kappa * dt) / kappa;
  s.nsub = 0;
  return s;
}

// Fills w[0..n] with a Brownian path on [0, dt] by Levy midpoint refinement.
void fill_bridge(double dt, int n, RandomStream& rng, std::vector<double>& w) {
  w.assign(static_cast<std::size_t>(n) + 1, 0.0);
  w[0] = 0.0;
  w[n] = std::sqrt(dt) * rng.normal();
  const double h = dt / n;
  for (int half = n / 2; half >= 1; half /= 2) {
    // Midpoint of a bridge over 2*half cells has variance half * h / 2.
    const double sd = std::sqrt(0.5 * half * h);
    for (int i = half; i < n; i += 2 * half) w[i] = 0.5 * (w[i - half] + w[i + half]) + sd * rng.normal();
  }
}

}  // namespace

GbmStepSample sample_gbm_step(double kappa, double sigma, double dt, int nsub, RandomStream& rng,
                              std::vector<double>& eta) {
  const int n = round_up_pow2(nsub);
  if (sigma == 0.0 || dt == 0.0) {
    GbmStepSample s = deterministic_step(kappa, dt);
    s.nsub = n;
    eta.resize(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) eta[i] = kappa * dt * i / n;
    return s;
  }
  fill_bridge(dt, n, rng, eta);
  const double h = dt / n;
  for (int i = 0; i <= n; ++i) eta[i] = kappa * (h * i) + sigma * eta[i];
  const double end = eta[n];
  double sum = 0.5 * (std::exp(end - eta[0]) + 1.0);
  for (int i = 1; i < n; ++i) sum += std::exp(end - eta[i]);
  return GbmStepSample{.dt = dt, .A = std::exp(end), .J = h * sum, .nsub = n};
}

GbmStepSample sample_gbm_step(double kappa, double sigma, double dt, int nsub, RandomStream& rng) {
  if (sigma == 0.0 || dt == 0.0) {
    GbmStepSample s = deterministic_step(kappa, dt);
    s.nsub = round_up_pow2(nsub);
    return s;
  }
  thread_local std::vector<double> scratch;
  return sample_gbm_step(kappa, sigma, dt, nsub, rng, scratch);
}

double sample_jump(double alpha1, double alpha2, double mu1, double mu2, RandomStream& rng) {
  const double up = alpha2 / (alpha1 + alpha2);
  const double pick = rng.uniform();
  const double size = rng.exponential(1.0);
  return pick < up ? mu2 * size : -mu1 * size;
}

double sample_interarrival(const ModelParams& params, RandomStream& rng) {
  if (const auto* g = std::get_if<GammaArrivals>(&params.interarrival)) return rng.gamma(g->shape, g->scale);
  return rng.exponential(1.0 / params.alpha_total());
}

PathOutcome simulate_path(const ModelParams& params, double u, const Horizon& horizon, int nsub,
                          RandomStream& rng) {
  const double kappa = log_drift(params);
  PathOutcome out;
  double x = u;
  double t = 0.0;
  for (;;) {
    double dt = sample_interarrival(params, rng);
    const bool truncated = t + dt > horizon.max_time;
    if (truncated) dt = horizon.max_time - t;

    const GbmStepSample step = sample_gbm_step(kappa, params.sigma, dt, nsub, rng);
    const double x_pre = step.A * x + params.c * step.J;
    t += dt;
    if (x_pre <= 0.0) {
      out.status = PathStatus::Ruined;
      out.ruin_kind = RuinKind::BetweenJumps;
      out.tau = t;
      out.x_final = x_pre;
      return out;
    }
    if (truncated) {
      out.status = PathStatus::Censored;
      out.x_final = x_pre;
      return out;
    }

    const double xi = sample_jump(params.alpha1, params.alpha2, params.mu1, params.mu2, rng);
    x = x_pre + xi;
    ++out.n_jumps;
    out.x_final = x;
    if (x <= 0.0) {
      out.status = PathStatus::Ruined;
      out.ruin_kind = RuinKind::AtJump;
      out.tau = t;
      return out;
    }
    if (horizon.upper_barrier && x >= *horizon.upper_barrier) {
      out.status = PathStatus::SurvivedToBarrier;
      return out;
    }
    if (out.n_jumps >= horizon.max_jumps) {
      out.status = PathStatus::Censored;
      return out;
    }
  }
}

std::vector<double> embedded_chain_direct(double u, double c, std::span<const ChainCoefficients> samples) {
  const std::size_t n = samples.size();
  // log_e[k] = ln E_k, E_0 = 1.
  std::vector<double> log_e(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) log_e[k] = log_e[k - 1] + std::log(samples[k - 1].A);

  std::vector<double> x(n);
  for (std::size_t m = 1; m <= n; ++m) {
    double sum = u * std::exp(log_e[m]);
    for (std::size_t k = 1; k <= m; ++k) {
      const double b = samples[k - 1].xi + c * samples[k - 1].J;
      sum += b * std::exp(log_e[m] - log_e[k]);
    }
    x[m - 1] = sum;
  }
  return x;
}

}  // namespace ruinkit
