#pragma once

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "ruinkit/model.hpp"

namespace ruinkit {

// Roots of lambda^3 + q2(u) lambda^2 + q1(u) lambda + q0(u) = 0, labelled so
// that lambda1 -> 1/mu2, lambda2 -> -1/mu1, lambda3 -> 0 as u -> infinity.
struct CharRoots {
  double u = 0.0;
  std::complex<double> lambda1, lambda2, lambda3;
  bool near_collision = false;  // two roots closer than the collision threshold

  std::array<std::complex<double>, 3> as_array() const { return {lambda1, lambda2, lambda3}; }
};

// Companion-matrix eigenvalues, Newton-polished. Labels come from continuity
// tracking down a geometric path from a point where every root sits next to
// its limit.
CharRoots characteristic_roots(const ModelParams& params, double u);

// Labels the roots at u by continuity from `previous` (a nearby point).
CharRoots characteristic_roots_near(const ModelParams& params, double u, const CharRoots& previous);

// Roots along an increasing grid, tracked from the top of the grid downward.
std::vector<CharRoots> track_roots(const ModelParams& params, std::span<const double> u_grid);

// Unlabelled eigenvalues of the 3x3 companion matrix of a monic cubic.
std::array<std::complex<double>, 3> companion_roots(double q2, double q1, double q0);

using Matrix3 = std::array<std::array<double, 3>, 3>;

// Limit of the first-order system matrix for y = (G, G', G'') as u -> infinity.
Matrix3 asymptotic_matrix(double mu1, double mu2);
// Columns: eigenvectors (1, l, l^2) for l = 1/mu2, -1/mu1, 0.
Matrix3 asymptotic_eigenvectors(double mu1, double mu2);
std::array<double, 3> asymptotic_eigenvalues(double mu1, double mu2);

enum class TailRegime { PowerLawDecay, CertainRuin };

struct TheoreticalTail {
  double beta;
  TailRegime regime;
};

TheoreticalTail theoretical_tail(const ModelParams& params);

struct FitRange {
  double lo;
  double hi;
};

struct PowerLawFit {
  double beta_hat = 0.0;
  double k_hat = 0.0;
  FitRange fit_range{};
  double r_squared = 0.0;
  std::size_t n_points = 0;
};

// Weighted least squares of ln psi on ln u over points inside fit_range.
// Weights are (psi / stderr)^2 when standard errors are given. Needs >= 4
// points spanning at least a decade (INSUFFICIENT_RANGE) and psi > 0 there.
PowerLawFit fit_power_law(std::span<const double> u, std::span<const double> psi, FitRange fit_range,
                          std::span<const double> std_errors = {});

}  // namespace ruinkit
