#include "ruinkit/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "ruinkit/error.hpp"
#include "ruinkit/solver.hpp"

namespace ruinkit {

namespace {

using cd = std::complex<double>;
using Roots = std::array<cd, 3>;

constexpr std::array<std::array<int, 3>, 6> kPermutations = {
    {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};

// Reorders `roots` to minimise the total distance to `reference`.
Roots match(const Roots& roots, const Roots& reference) {
  double best = std::numeric_limits<double>::infinity();
  Roots out = roots;
  for (const auto& perm : kPermutations) {
    double cost = 0.0;
    for (int k = 0; k < 3; ++k) cost += std::abs(roots[perm[k]] - reference[k]);
    if (cost < best) {
      best = cost;
      for (int k = 0; k < 3; ++k) out[k] = roots[perm[k]];
    }
  }
  return out;
}

Roots limits(const ModelParams& p) { return {cd(1.0 / p.mu2), cd(-1.0 / p.mu1), cd(0.0)}; }

double separation_scale(const ModelParams& p) { return std::min(1.0 / p.mu1, 1.0 / p.mu2); }

Roots raw_roots(const ModelParams& p, double u) {
  const OdeCoeffs k = ode_coefficients(p, u);
  return companion_roots(k.q2, k.q1, k.q0);
}

CharRoots make(const ModelParams& p, double u, const Roots& r) {
  CharRoots out;
  out.u = u;
  out.lambda1 = r[0];
  out.lambda2 = r[1];
  out.lambda3 = r[2];
  double gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) gap = std::min(gap, std::abs(r[i] - r[j]));
  out.near_collision = gap < 1e-6 * std::max(1.0 / p.mu1, 1.0 / p.mu2);
  return out;
}

// Every root within a quarter of the smallest limit separation of its limit.
bool labels_unambiguous(const ModelParams& p, const Roots& matched) {
  const Roots lim = limits(p);
  const double tol = 0.25 * separation_scale(p);
  for (int k = 0; k < 3; ++k)
    if (std::abs(matched[k] - lim[k]) >= tol) return false;
  return true;
}

}  // namespace

std::array<std::complex<double>, 3> companion_roots(double q2, double q1, double q0) {
  Eigen::Matrix3d companion;
  companion << 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, -q0, -q1, -q2;
  Eigen::EigenSolver<Eigen::Matrix3d> es(companion, false);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::NonConverged, "companion eigenvalue solve failed");
  Roots r;
  for (int k = 0; k < 3; ++k) r[k] = es.eigenvalues()[k];

  auto poly = [&](cd z) { return ((z + q2) * z + q1) * z + q0; };
  auto dpoly = [&](cd z) { return (3.0 * z + 2.0 * q2) * z + q1; };
  for (auto& z : r) {
    for (int it = 0; it < 3; ++it) {
      const cd d = dpoly(z);
      if (std::abs(d) == 0.0) break;
      const cd next = z - poly(z) / d;
      if (!(std::abs(poly(next)) < std::abs(poly(z)))) break;
      z = next;
    }
    if (std::abs(z.imag()) <= 1e-14 * std::max(1.0, std::abs(z.real()))) z = cd(z.real(), 0.0);
  }
  return r;
}

CharRoots characteristic_roots_near(const ModelParams& p, double u, const CharRoots& previous) {
  return make(p, u, match(raw_roots(p, u), previous.as_array()));
}

CharRoots characteristic_roots(const ModelParams& p, double u) {
  if (!(u > 0.0)) throw Error(ErrorCode::InvalidInput, "characteristic roots need u > 0");
  const Roots here = match(raw_roots(p, u), limits(p));
  if (labels_unambiguous(p, here)) return make(p, u, here);

  double u_ref = u;
  Roots ref{};
  for (int k = 0; k < 16; ++k) {
    u_ref *= 10.0;
    ref = match(raw_roots(p, u_ref), limits(p));
    if (labels_unambiguous(p, ref)) break;
  }
  const int steps = static_cast<int>(std::ceil(std::log(u_ref / u) / 0.02));
  const double ratio = std::exp(std::log(u / u_ref) / steps);
  double v = u_ref;
  for (int k = 1; k <= steps; ++k) {
    v = k == steps ? u : v * ratio;
    ref = match(raw_roots(p, v), ref);
  }
  return make(p, u, ref);
}

std::vector<CharRoots> track_roots(const ModelParams& p, std::span<const double> u_grid) {
  for (std::size_t i = 1; i < u_grid.size(); ++i)
    if (!(u_grid[i] > u_grid[i - 1])) throw Error(ErrorCode::NonMonotoneGrid, "u grid must be increasing");
  std::vector<CharRoots> out(u_grid.size());
  if (u_grid.empty()) return out;
  out.back() = characteristic_roots(p, u_grid.back());
  for (std::size_t i = u_grid.size() - 1; i-- > 0;) {
    // Sub-steps keep each match local even on a coarse grid.
    const int steps = std::max(1, static_cast<int>(std::ceil(std::log(u_grid[i + 1] / u_grid[i]) / 0.02)));
    CharRoots cur = out[i + 1];
    for (int k = 1; k <= steps; ++k) {
      const double v = k == steps ? u_grid[i] : u_grid[i + 1] * std::pow(u_grid[i] / u_grid[i + 1], double(k) / steps);
      cur = characteristic_roots_near(p, v, cur);
    }
    out[i] = cur;
  }
  return out;
}

Matrix3 asymptotic_matrix(double mu1, double mu2) {
  const double mu_sq = mu1 * mu2;
  return {{{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {0.0, 1.0 / mu_sq, -(mu2 - mu1) / mu_sq}}};
}

Matrix3 asymptotic_eigenvectors(double mu1, double mu2) {
  return {{{1.0, 1.0, 1.0},
           {1.0 / mu2, -1.0 / mu1, 0.0},
           {1.0 / (mu2 * mu2), 1.0 / (mu1 * mu1), 0.0}}};
}

std::array<double, 3> asymptotic_eigenvalues(double mu1, double mu2) { return {1.0 / mu2, -1.0 / mu1, 0.0}; }

TheoreticalTail theoretical_tail(const ModelParams& params) {
  const double beta = derive(params).beta;
  return {beta, beta > 0.0 ? TailRegime::PowerLawDecay : TailRegime::CertainRuin};
}

PowerLawFit fit_power_law(std::span<const double> u, std::span<const double> psi, FitRange range,
                          std::span<const double> std_errors) {
  if (u.size() != psi.size() || (!std_errors.empty() && std_errors.size() != u.size()))
    throw Error(ErrorCode::InvalidInput, "curve columns differ in length");

  std::vector<double> x, y, w;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] < range.lo || u[i] > range.hi) continue;
    if (!(psi[i] > 0.0) || !(u[i] > 0.0))
      throw Error(ErrorCode::InvalidInput, "psi must be > 0 inside the fit range");
    x.push_back(std::log(u[i]));
    y.push_back(std::log(psi[i]));
    double weight = 1.0;
    if (!std_errors.empty()) {
      const double rel = std_errors[i] / psi[i];
      weight = rel > 0.0 ? 1.0 / (rel * rel) : 1.0;
    }
    w.push_back(weight);
  }
  if (x.size() < 4) throw Error(ErrorCode::InsufficientRange, "fewer than 4 points in the fit range");
  const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
  if (*xmax - *xmin < std::log(10.0) * (1.0 - 1e-12))
    throw Error(ErrorCode::InsufficientRange, "fit range spans less than one decade");

  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double xbar = sx / sw, ybar = sy / sw;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - xbar) * (x[i] - xbar);
    sxy += w[i] * (x[i] - xbar) * (y[i] - ybar);
    syy += w[i] * (y[i] - ybar) * (y[i] - ybar);
  }
  const double slope = sxy / sxx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (ybar + slope * (x[i] - xbar));
    ss_res += w[i] * r * r;
  }

  PowerLawFit fit;
  fit.beta_hat = -slope;
  fit.k_hat = std::exp(ybar - slope * xbar);
  fit.fit_range = {std::exp(*xmin), std::exp(*xmax)};
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.n_points = x.size();
  return fit;
}

}  // namespace ruinkit
