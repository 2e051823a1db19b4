#include "ruinkit/model.hpp"

#include <cmath>

#include "ruinkit/error.hpp"

namespace ruinkit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "INVALID_INPUT";
    case ErrorCode::InvalidRegime: return "INVALID_REGIME";
    case ErrorCode::NonConverged: return "NONCONVERGED";
    case ErrorCode::Stiffness: return "STIFFNESS";
    case ErrorCode::InsufficientRange: return "INSUFFICIENT_RANGE";
    case ErrorCode::NonMonotoneGrid: return "NON_MONOTONE_GRID";
  }
  return "UNKNOWN";
}

bool ValidationReport::ok() const {
  for (const auto& issue : issues)
    if (issue.severity == Severity::Error) return false;
  return true;
}

bool ValidationReport::has(std::string_view code) const {
  for (const auto& issue : issues)
    if (issue.code == code) return true;
  return false;
}

std::string ValidationReport::summary() const {
  std::string out;
  for (const auto& issue : issues) {
    if (!out.empty()) out += "; ";
    out += issue.code + " (" + issue.message + ")";
  }
  return out;
}

ValidationReport validate(const ModelParams& p) {
  ValidationReport report;
  auto error = [&](const char* code, std::string msg) {
    report.issues.push_back({code, Severity::Error, std::move(msg)});
  };
  auto warn = [&](const char* code, std::string msg) {
    report.issues.push_back({code, Severity::Warning, std::move(msg)});
  };

  for (double v : {p.a, p.sigma, p.c, p.alpha1, p.alpha2, p.mu1, p.mu2}) {
    if (!std::isfinite(v)) {
      error("NON_FINITE", "all model scalars must be finite");
      return report;
    }
  }
  if (p.mu1 <= 0.0 || p.mu2 <= 0.0) error("NEGATIVE_JUMP_MEAN", "mu1 and mu2 must be > 0");
  if (p.alpha1 < 0.0 || p.alpha2 < 0.0) error("NEGATIVE_INTENSITY", "alpha1 and alpha2 must be >= 0");
  if (p.alpha1 + p.alpha2 <= 0.0) error("NO_JUMP_INTENSITY", "alpha1 + alpha2 must be > 0");
  if (p.sigma < 0.0) error("NEGATIVE_VOLATILITY", "sigma must be >= 0");
  if (const auto* g = std::get_if<GammaArrivals>(&p.interarrival)) {
    if (!(g->shape > 0.0) || !(g->scale > 0.0) || !std::isfinite(g->shape) || !std::isfinite(g->scale))
      error("INVALID_INTERARRIVAL", "gamma shape and scale must be finite and > 0");
  }

  if (p.alpha1 == 0.0 && p.c >= 0.0)
    warn("NO_RUIN_POSSIBLE", "no downward jumps and c >= 0: the ruin probability is 0");
  if (p.sigma == 0.0) warn("SIMULATOR_ONLY", "sigma = 0 is accepted by the simulators only");
  return report;
}

DerivedParams derive(const ModelParams& p) {
  if (auto report = validate(p); !report.ok()) throw Error(ErrorCode::InvalidInput, report.summary());
  if (p.sigma == 0.0) throw Error(ErrorCode::InvalidInput, "sigma = 0: beta is undefined");
  const double s2 = p.sigma * p.sigma;
  return DerivedParams{
      .beta = 2.0 * p.a / s2 - 1.0,
      .kappa = p.a - 0.5 * s2,
      .delta_mu = p.mu2 - p.mu1,
      .mu_sq = p.mu1 * p.mu2,
      .alpha_total = p.alpha1 + p.alpha2,
  };
}

}  // namespace ruinkit
