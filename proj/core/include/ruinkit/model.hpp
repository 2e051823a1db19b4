#pragma once

#include <string>
#include <variant>
#include <vector>

namespace ruinkit {

// Rate alpha1 + alpha2.
struct PoissonArrivals {
  friend bool operator==(const PoissonArrivals&, const PoissonArrivals&) = default;
};

// Sparre Andersen interarrival law. Only the simulators accept it.
struct GammaArrivals {
  double shape = 1.0;
  double scale = 1.0;

  friend bool operator==(const GammaArrivals&, const GammaArrivals&) = default;
};

using InterarrivalLaw = std::variant<PoissonArrivals, GammaArrivals>;

// Reserve dynamics dX = X dR + dP with R = a t + sigma W and P a compound
// Poisson process with drift c, downward Exp(mu1) jumps at rate alpha1 and
// upward Exp(mu2) jumps at rate alpha2.
struct ModelParams {
  double a = 0.0;
  double sigma = 0.0;
  double c = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double mu1 = 1.0;
  double mu2 = 1.0;
  InterarrivalLaw interarrival = PoissonArrivals{};

  double alpha_total() const { return alpha1 + alpha2; }
  bool poisson() const { return std::holds_alternative<PoissonArrivals>(interarrival); }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct DerivedParams {
  double beta;         // 2a/sigma^2 - 1
  double kappa;        // a - sigma^2/2
  double delta_mu;     // mu2 - mu1
  double mu_sq;        // mu1 mu2
  double alpha_total;  // alpha1 + alpha2
};

// Throws Error(InvalidInput) when sigma == 0 or the parameters are invalid.
DerivedParams derive(const ModelParams& params);

// Log-drift of the asset price; defined for sigma == 0 as well.
inline double log_drift(const ModelParams& p) { return p.a - 0.5 * p.sigma * p.sigma; }

enum class Severity { Error, Warning };

struct ValidationIssue {
  std::string code;
  Severity severity;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const;  // no Error-severity issue
  bool has(std::string_view code) const;
  bool empty() const { return issues.empty(); }
  std::string summary() const;
};

// Codes: NON_FINITE, NEGATIVE_JUMP_MEAN, NEGATIVE_INTENSITY, NO_JUMP_INTENSITY,
// NEGATIVE_VOLATILITY, INVALID_INTERARRIVAL (errors); NO_RUIN_POSSIBLE,
// SIMULATOR_ONLY (warnings).
ValidationReport validate(const ModelParams& params);

// Ruin is impossible: no downward jumps and non-negative premium drift.
inline bool no_ruin_possible(const ModelParams& p) { return p.alpha1 == 0.0 && p.c >= 0.0; }

}  // namespace ruinkit
