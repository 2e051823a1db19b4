#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ruinkit/model.hpp"
#include "ruinkit/rng.hpp"

namespace ruinkit {

inline constexpr int kDefaultSubdivisions = 64;

// Log-price increment and discounted premium functional over one interjump
// interval of length dt:
//   A = exp(eta_dt),  J ~ int_0^dt exp(eta_dt - eta_v) dv,  eta_t = kappa t + sigma W_t.
struct GbmStepSample {
  double dt = 0.0;
  double A = 1.0;
  double J = 0.0;
  int nsub = 0;  // subdivisions actually used (a power of two)
};

// Samples (A, J). log A is drawn exactly; the Brownian path is then filled in
// by midpoint bridge refinement down to `nsub` cells and J is the trapezoid sum
// on that path. nsub is rounded up to a power of two; draws are taken coarse
// level first, so 2*nsub on the same stream refines the same bridge. With
// sigma == 0 the closed forms are returned and no variates are consumed.
GbmStepSample sample_gbm_step(double kappa, double sigma, double dt, int nsub, RandomStream& rng);

// Same construction, additionally returning eta at the nsub + 1 bridge nodes.
GbmStepSample sample_gbm_step(double kappa, double sigma, double dt, int nsub, RandomStream& rng,
                              std::vector<double>& eta_nodes);

// Signed jump: +Exp(mu2) with probability alpha2 / (alpha1 + alpha2), else -Exp(mu1).
double sample_jump(double alpha1, double alpha2, double mu1, double mu2, RandomStream& rng);

double sample_interarrival(const ModelParams& params, RandomStream& rng);

struct EmbeddedStep {
  double x_pre;   // reserve just before the jump
  double x_post;  // reserve just after the jump
};

// One step of X_n = A X_{n-1} + c J + xi. Between jumps the reserve is
// S_t (x + c int_0^t S^-1), whose sign is monotone in t, so ruin inside the
// interval happened iff x_pre <= 0.
inline EmbeddedStep step_embedded(double x_prev, const GbmStepSample& step, double xi, double c) {
  const double x_pre = step.A * x_prev + c * step.J;
  return {x_pre, x_pre + xi};
}

struct Horizon {
  std::uint64_t max_jumps = 10000;
  double max_time = std::numeric_limits<double>::infinity();
  std::optional<double> upper_barrier;
};

enum class PathStatus { Ruined, SurvivedToBarrier, Censored };
enum class RuinKind { None, AtJump, BetweenJumps };

struct PathOutcome {
  PathStatus status = PathStatus::Censored;
  double tau = std::numeric_limits<double>::infinity();  // ruin time, interval endpoint for BetweenJumps
  std::uint64_t n_jumps = 0;
  double x_final = 0.0;
  RuinKind ruin_kind = RuinKind::None;

  friend bool operator==(const PathOutcome&, const PathOutcome&) = default;
};

// Simulates one reserve trajectory from X_0 = u. Works for sigma >= 0 and for
// both interarrival laws.
PathOutcome simulate_path(const ModelParams& params, double u, const Horizon& horizon, int nsub,
                          RandomStream& rng);

struct ChainCoefficients {
  double A;
  double J;
  double xi;
};

// Embedded chain from the closed product-sum form
//   X_n = E_n u + sum_k B_k E_n / E_k,  E_n = prod_{j<=n} A_j,  B_k = xi_k + c J_k,
// with the products accumulated in log space. Test oracle for step_embedded.
std::vector<double> embedded_chain_direct(double u, double c, std::span<const ChainCoefficients> samples);

}  // namespace ruinkit
