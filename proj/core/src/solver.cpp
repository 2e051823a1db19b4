#include "ruinkit/solver.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <boost/numeric/odeint.hpp>

#include "ruinkit/asymptotics.hpp"
#include "ruinkit/error.hpp"

namespace ruinkit {

namespace {

// E_m = int_0^h t^m exp(-t/mu) dt for m = 0, 1, 2.
struct KernelMoments {
  double e0, e1, e2;
};

KernelMoments kernel_moments(double h, double mu) {
  const double x = h / mu;
  KernelMoments m{};
  if (x < 0.5) {
    // mu^{m+1} gamma(m+1, x) with the series x^s e^-x sum x^n / (s (s+1) ... (s+n)).
    auto lower_gamma = [x](int s) {
      double term = 1.0 / s;
      double sum = term;
      for (int n = 1; n < 40; ++n) {
        term *= x / (s + n);
        sum += term;
        if (term < 1e-18 * sum) break;
      }
      return std::pow(x, s) * std::exp(-x) * sum;
    };
    m.e0 = mu * lower_gamma(1);
    m.e1 = mu * mu * lower_gamma(2);
    m.e2 = mu * mu * mu * lower_gamma(3);
    return m;
  }
  const double ex = std::exp(-x);
  m.e0 = -mu * std::expm1(-x);
  m.e1 = mu * mu * (1.0 - ex * (1.0 + x));
  m.e2 = mu * mu * mu * (2.0 - ex * (x * x + 2.0 * x + 2.0));
  return m;
}

std::size_t stencil_start(std::size_t i, std::size_t n, std::size_t width) {
  const std::size_t half = width / 2;
  std::size_t start = i >= half ? i - half : 0;
  if (start + width > n) start = n - width;
  return start;
}

void require_grid(std::span<const double> u, std::size_t min_points) {
  if (u.size() < min_points)
    throw Error(ErrorCode::InvalidInput, "grid needs at least " + std::to_string(min_points) + " points");
  for (std::size_t i = 1; i < u.size(); ++i)
    if (!(u[i] > u[i - 1])) throw Error(ErrorCode::NonMonotoneGrid, "grid must be strictly increasing");
}

void require_solver_params(const ModelParams& params) {
  if (auto report = validate(params); !report.ok()) throw Error(ErrorCode::InvalidInput, report.summary());
  if (!(params.sigma > 0.0)) throw Error(ErrorCode::InvalidInput, "the solver requires sigma > 0");
  if (!params.poisson())
    throw Error(ErrorCode::InvalidInput, "the solver requires Poisson (exponential) interarrival times");
  if (no_ruin_possible(params))
    throw Error(ErrorCode::InvalidInput, "NO_RUIN_POSSIBLE: alpha1 = 0 and c >= 0, Psi is identically 0");
}

// Derivatives of order 1..max_order of f at every node, from `width`-point stencils.
std::vector<std::vector<double>> derivatives(std::span<const double> u, std::span<const double> f,
                                             std::size_t width, int max_order) {
  const std::size_t n = u.size();
  std::vector<std::vector<double>> d(static_cast<std::size_t>(max_order) + 1, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t s = stencil_start(i, n, width);
    const auto w = fd_weights(u[i], u.subspan(s, width), max_order);
    for (int k = 0; k <= max_order; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < width; ++j) acc += w[k][j] * f[s + j];
      d[k][i] = acc;
    }
  }
  return d;
}

// int over [u_j, u_j+1] of Phi(z) times the kernel, Phi quadratic through three
// nodes. `forward` selects exp(-(u_{j+1} - z)/mu) (I1), otherwise exp(-(z - u_j)/mu) (I2).
double quadratic_kernel_integral(std::span<const double> u, std::span<const double> phi, std::size_t j,
                                 double mu, bool forward) {
  const std::size_t n = u.size();
  const std::size_t s = j + 2 < n ? j : j - 1;
  const double origin = forward ? u[j + 1] : u[j];
  const double h = u[j + 1] - u[j];
  double t[3];
  for (int k = 0; k < 3; ++k) t[k] = forward ? origin - u[s + k] : u[s + k] - origin;
  const KernelMoments m = kernel_moments(h, mu);
  double total = 0.0;
  for (int k = 0; k < 3; ++k) {
    const int a = (k + 1) % 3, b = (k + 2) % 3;
    const double denom = (t[k] - t[a]) * (t[k] - t[b]);
    // (t - ta)(t - tb) = t^2 - (ta + tb) t + ta tb
    total += phi[s + k] * (m.e2 - (t[a] + t[b]) * m.e1 + t[a] * t[b] * m.e0) / denom;
  }
  return total;
}

}  // namespace

OdeCoeffs ode_coefficients(const ModelParams& p, double u) {
  if (!(u > 0.0)) throw Error(ErrorCode::InvalidInput, "ode coefficients need u > 0");
  if (!(p.sigma > 0.0)) throw Error(ErrorCode::InvalidInput, "ode coefficients need sigma > 0");
  const double s2 = p.sigma * p.sigma;
  const double dmu = p.mu2 - p.mu1;
  const double mu2 = p.mu1 * p.mu2;
  const double alpha = p.alpha1 + p.alpha2;
  const double cross = p.alpha1 * p.mu2 - p.alpha2 * p.mu1;

  OdeCoeffs k{};
  k.g3 = 0.5 * s2 * mu2 * u * u;
  k.g2 = mu2 * ((p.a + 2.0 * s2) * u + p.c) + 0.5 * dmu * s2 * u * u;
  k.g1 = mu2 * (2.0 * p.a + s2 - alpha) + dmu * (s2 * u + p.a * u + p.c) - 0.5 * s2 * u * u;
  k.g0 = -p.a * u - p.c + dmu * (p.a - alpha) + cross;

  const double inv_u = 1.0 / u;
  k.q2 = dmu / mu2 + 2.0 * (p.a + 2.0 * s2) / s2 * inv_u + 2.0 * p.c / s2 * inv_u * inv_u;
  k.q1 = -1.0 / mu2 + 2.0 * (p.a + s2) * dmu / (s2 * mu2) * inv_u +
         2.0 * (dmu * p.c + mu2 * (2.0 * p.a + s2 - alpha)) / (mu2 * s2) * inv_u * inv_u;
  k.q0 = -2.0 * p.a / (mu2 * s2) * inv_u + 2.0 * (dmu * (p.a - alpha) + cross - p.c) / (mu2 * s2) * inv_u * inv_u;
  return k;
}

std::vector<std::vector<double>> fd_weights(double x0, std::span<const double> x, int max_order) {
  const std::size_t n = x.size();
  const auto m = static_cast<std::size_t>(max_order);
  std::vector<std::vector<double>> c(m + 1, std::vector<double>(n, 0.0));
  double c1 = 1.0;
  double c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t k = mn; k >= 1; --k)
          c[k][i] = c1 * (static_cast<double>(k) * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (std::size_t k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - static_cast<double>(k) * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

std::vector<double> geometric_grid(double u_min, double u_max, std::size_t n_points) {
  if (!(u_min > 0.0 && u_max > u_min) || n_points < 2)
    throw Error(ErrorCode::InvalidInput, "geometric grid needs 0 < u_min < u_max and >= 2 points");
  std::vector<double> u(n_points);
  const double step = std::log(u_max / u_min) / static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n_points; ++i) u[i] = u_min * std::exp(step * static_cast<double>(i));
  u.back() = u_max;
  return u;
}

std::vector<double> ide_residual(std::span<const double> u, std::span<const double> phi, const ModelParams& p) {
  require_grid(u, 5);
  if (phi.size() != u.size()) throw Error(ErrorCode::InvalidInput, "phi and u differ in length");
  const std::size_t n = u.size();
  const auto d = derivatives(u, phi, 5, 2);

  std::vector<double> i1(n), i2(n);
  i1[0] = phi[0] * -p.mu1 * std::expm1(-u[0] / p.mu1);
  for (std::size_t j = 0; j + 1 < n; ++j)
    i1[j + 1] = std::exp(-(u[j + 1] - u[j]) / p.mu1) * i1[j] + quadratic_kernel_integral(u, phi, j, p.mu1, true);
  i2[n - 1] = p.mu2 * phi[n - 1];
  for (std::size_t j = n - 1; j-- > 0;)
    i2[j] = std::exp(-(u[j + 1] - u[j]) / p.mu2) * i2[j + 1] + quadratic_kernel_integral(u, phi, j, p.mu2, false);

  const double s2 = p.sigma * p.sigma;
  const double alpha = p.alpha1 + p.alpha2;
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = 0.5 * s2 * u[i] * u[i] * d[2][i] + (p.a * u[i] + p.c) * d[1][i] - alpha * phi[i] +
           p.alpha1 / p.mu1 * i1[i] + p.alpha2 / p.mu2 * i2[i];
  }
  return r;
}

std::vector<double> ide_residual(const GridSolution& s, const ModelParams& params) {
  return ide_residual(s.u, s.phi, params);
}

namespace {

struct Ode3Stencil {
  std::size_t stride;
  long first;  // offset of the first node, in strides
};

Ode3Stencil ode3_stencil(std::span<const double> u, std::size_t i, double scale, double min_spacing) {
  const std::size_t n = u.size();
  const double want = min_spacing * std::max(u[i], scale);
  std::size_t m = 1;
  while (6 * (m + 1) < n) {
    const std::size_t j = std::min(i + m, n - 1), k = i >= m ? i - m : 0;
    if (std::max(u[j] - u[i], u[i] - u[k]) >= want) break;
    ++m;
  }
  long k0 = -3;
  const long ii = static_cast<long>(i), mm = static_cast<long>(m), last = static_cast<long>(n) - 1;
  while (ii + mm * k0 < 0) ++k0;
  while (ii + mm * (k0 + 6) > last) --k0;
  return {m, k0};
}

}  // namespace

std::vector<double> ode3_residual(std::span<const double> u, std::span<const double> phi, const ModelParams& p,
                                  double min_spacing) {
  require_grid(u, 7);
  if (phi.size() != u.size()) throw Error(ErrorCode::InvalidInput, "phi and u differ in length");
  const std::size_t n = u.size();
  const double scale = std::min(p.mu1, p.mu2);
  std::vector<double> r(n);
  std::vector<double> nodes(7), vals(7);
  for (std::size_t i = 0; i < n; ++i) {
    const Ode3Stencil st = ode3_stencil(u, i, scale, min_spacing);
    for (std::size_t k = 0; k < 7; ++k) {
      const auto at = static_cast<std::size_t>(static_cast<long>(i) +
                                               static_cast<long>(st.stride) * (st.first + static_cast<long>(k)));
      nodes[k] = u[at];
      vals[k] = phi[at];
    }
    const auto w = fd_weights(u[i], nodes, 4);
    double d[5] = {};
    for (int o = 1; o <= 4; ++o)
      for (std::size_t k = 0; k < 7; ++k) d[o] += w[static_cast<std::size_t>(o)][k] * vals[k];
    const OdeCoeffs c = ode_coefficients(p, u[i]);
    r[i] = c.g3 * d[4] + c.g2 * d[3] + c.g1 * d[2] + c.g0 * d[1];
  }
  return r;
}

std::vector<bool> ode3_centered(std::span<const double> u, const ModelParams& p, double min_spacing) {
  require_grid(u, 7);
  std::vector<bool> mask(u.size());
  const double scale = std::min(p.mu1, p.mu2);
  for (std::size_t i = 0; i < u.size(); ++i) mask[i] = ode3_stencil(u, i, scale, min_spacing).first == -3;
  return mask;
}

double survival_at(const GridSolution& s, double x) {
  const std::size_t n = s.size();
  if (n < 3 || !(x >= s.u.front() && x <= s.u.back()))
    throw Error(ErrorCode::InvalidInput, "survival_at: point outside the solved grid");
  std::size_t k = static_cast<std::size_t>(std::upper_bound(s.u.begin(), s.u.end(), x) - s.u.begin());
  k = std::clamp<std::size_t>(k, 1, n - 1);  // u[k-1] <= x <= u[k]
  std::size_t first = k - 1;
  if (first + 2 >= n) first = n - 3;
  else if (first > 0 && x - s.u[k - 1] < s.u[k] - x) first -= 1;
  const double t = std::log(x);
  double total = 0.0;
  for (std::size_t a = first; a < first + 3; ++a) {
    double w = 1.0;
    for (std::size_t b = first; b < first + 3; ++b)
      if (b != a) w *= (t - std::log(s.u[b])) / (std::log(s.u[a]) - std::log(s.u[b]));
    total += w * s.phi[a];
  }
  return total;
}

std::vector<double> apply_kernel_operator(std::span<const double> u, std::span<const double> f, double mu1,
                                          double mu2) {
  require_grid(u, 5);
  const auto d = derivatives(u, f, 5, 2);
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = mu1 * mu2 * d[2][i] + (mu2 - mu1) * d[1][i] - f[i];
  return out;
}

namespace {

struct LinearSolve {
  std::vector<double> phi, i1, i2;
};

LinearSolve solve_collocation(const ModelParams& p, std::span<const double> u, bool left_equation,
                              double phi_right) {
  const std::size_t n = u.size();
  const auto dim = static_cast<Eigen::Index>(3 * n);
  auto phi_ix = [](std::size_t i) { return static_cast<Eigen::Index>(3 * i); };
  auto i1_ix = [](std::size_t i) { return static_cast<Eigen::Index>(3 * i + 1); };
  auto i2_ix = [](std::size_t i) { return static_cast<Eigen::Index>(3 * i + 2); };

  const double s2 = p.sigma * p.sigma;
  const double alpha = p.alpha1 + p.alpha2;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(12 * n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);

  auto equation_row = [&](std::size_t row_node, std::size_t first, std::size_t at) {
    const std::span<const double> nodes = u.subspan(first, 3);
    const auto w = fd_weights(u[at], nodes, 2);
    const double diff = 0.5 * s2 * u[at] * u[at];
    const double drift = p.a * u[at] + p.c;
    const Eigen::Index row = phi_ix(row_node);
    for (std::size_t j = 0; j < 3; ++j) t.emplace_back(row, phi_ix(first + j), diff * w[2][j] + drift * w[1][j]);
    t.emplace_back(row, phi_ix(at), -alpha);
    t.emplace_back(row, i1_ix(at), p.alpha1 / p.mu1);
    t.emplace_back(row, i2_ix(at), p.alpha2 / p.mu2);
  };

  // Phi rows.
  if (left_equation)
    equation_row(0, 0, 0);
  else
    t.emplace_back(phi_ix(0), phi_ix(0), 1.0);
  for (std::size_t i = 1; i + 1 < n; ++i) equation_row(i, i - 1, i);
  t.emplace_back(phi_ix(n - 1), phi_ix(n - 1), 1.0);
  rhs[phi_ix(n - 1)] = phi_right;

  // I1 rows: forward exponential recurrence, Phi constant on ]0, u_0].
  t.emplace_back(i1_ix(0), i1_ix(0), 1.0);
  t.emplace_back(i1_ix(0), phi_ix(0), p.mu1 * std::expm1(-u[0] / p.mu1));
  for (std::size_t i = 1; i < n; ++i) {
    const double h = u[i] - u[i - 1];
    const KernelMoments m = kernel_moments(h, p.mu1);
    const Eigen::Index row = i1_ix(i);
    t.emplace_back(row, i1_ix(i), 1.0);
    t.emplace_back(row, i1_ix(i - 1), -std::exp(-h / p.mu1));
    t.emplace_back(row, phi_ix(i - 1), -m.e1 / h);
    t.emplace_back(row, phi_ix(i), -(m.e0 - m.e1 / h));
  }

  // I2 rows: backward recurrence, closed by I2(u_max) = mu2 Phi(u_max).
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = u[i + 1] - u[i];
    const KernelMoments m = kernel_moments(h, p.mu2);
    const Eigen::Index row = i2_ix(i);
    t.emplace_back(row, i2_ix(i), 1.0);
    t.emplace_back(row, i2_ix(i + 1), -std::exp(-h / p.mu2));
    t.emplace_back(row, phi_ix(i), -(m.e0 - m.e1 / h));
    t.emplace_back(row, phi_ix(i + 1), -m.e1 / h);
  }
  t.emplace_back(i2_ix(n - 1), i2_ix(n - 1), 1.0);
  t.emplace_back(i2_ix(n - 1), phi_ix(n - 1), -p.mu2);

  Eigen::SparseMatrix<double> a(dim, dim);
  a.setFromTriplets(t.begin(), t.end());
  a.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::NonConverged, "sparse LU factorization failed");
  const Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite())
    throw Error(ErrorCode::NonConverged, "linear solve produced non-finite values");

  LinearSolve out;
  out.phi.resize(n);
  out.i1.resize(n);
  out.i2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.phi[i] = x[phi_ix(i)];
    out.i1[i] = x[i1_ix(i)];
    out.i2[i] = x[i2_ix(i)];
  }
  return out;
}

// K from Psi(u) ~ K (u^-beta - u_max^-beta), the shape of a solve whose right
// edge was pinned to Psi(u_max) = 0.
double estimate_tail_constant(std::span<const double> u, std::span<const double> phi, double beta) {
  const double u_max = u.back();
  const double hi = u_max / 100.0;
  const double lo = std::max(u.front() * 10.0, u_max / 1000.0);
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] < lo || u[i] > hi) continue;
    const double psi = 1.0 - phi[i];
    const double shape = std::pow(u[i], -beta) - std::pow(u_max, -beta);
    if (psi <= 0.0 || shape <= 0.0) return 0.0;
    sum += psi / shape;
    ++count;
  }
  return count > 0 ? sum / count : 0.0;
}

}  // namespace

GridSolution solve_survival(const ModelParams& params, double u_min, double u_max, std::size_t n_points,
                            const BoundaryPolicy& policy) {
  require_solver_params(params);
  const DerivedParams d = derive(params);
  if (d.beta <= 0.0)
    throw Error(ErrorCode::InvalidRegime, "beta = " + std::to_string(d.beta) + " <= 0: ruin is certain");
  if (n_points < 7) throw Error(ErrorCode::InvalidInput, "solve_survival needs at least 7 grid points");

  GridSolution s;
  s.u = geometric_grid(u_min, u_max, n_points);
  s.left_equation = policy.left == LeftBoundary::EquationPinned ||
                    (policy.left == LeftBoundary::Auto && params.c >= 0.0);

  double k = 0.0;
  switch (policy.tail) {
    case TailPolicy::None: break;
    case TailPolicy::Given: k = policy.tail_k; break;
    case TailPolicy::TwoPass: {
      const LinearSolve first = solve_collocation(params, s.u, s.left_equation, 1.0);
      k = estimate_tail_constant(s.u, first.phi, d.beta);
      break;
    }
  }
  s.tail_k = k;
  s.tail = std::clamp(k * std::pow(u_max, -d.beta), 0.0, 1.0);

  LinearSolve sol = solve_collocation(params, s.u, s.left_equation, 1.0 - s.tail);
  s.phi = std::move(sol.phi);
  s.i1 = std::move(sol.i1);
  s.i2 = std::move(sol.i2);
  s.g = derivatives(s.u, s.phi, 5, 1)[1];
  s.residual_ide = ide_residual(s.u, s.phi, params);
  s.residual_ode3 = ode3_residual(s.u, s.phi, params, policy.ode3_spacing);

  double worst = 0.0;
  for (double r : s.residual_ide) worst = std::max(worst, std::abs(r));
  worst /= d.alpha_total;
  if (!(worst <= policy.residual_threshold))
    throw Error(ErrorCode::NonConverged,
                "IDE residual " + std::to_string(worst) + " exceeds threshold " + std::to_string(policy.residual_threshold));
  return s;
}

namespace {

using State = std::array<double, 4>;  // (G, G', G'', H)

struct ThirdOrderSystem {
  const ModelParams* params;
  void operator()(const State& y, State& dy, double u) const {
    const OdeCoeffs k = ode_coefficients(*params, u);
    dy[0] = y[1];
    dy[1] = y[2];
    dy[2] = -k.q0 * y[0] - k.q1 * y[1] - k.q2 * y[2];
    dy[3] = -y[0];  // H(u) = int_u^inf G
  }
};

// Integrates from u_from to u_to (either direction), in pieces no longer than
// max_piece, calling after_piece(u, y) after each piece.
template <class AfterPiece>
void integrate_pieces(const ThirdOrderSystem& sys, State& y, double u_from, double u_to, double max_piece,
                      AfterPiece&& after_piece) {
  namespace odeint = boost::numeric::odeint;
  auto stepper = odeint::make_controlled(1e-11, 1e-11, odeint::runge_kutta_dopri5<State>());
  const double length = std::abs(u_to - u_from);
  const int pieces = std::max(1, static_cast<int>(std::ceil(length / max_piece)));
  double u = u_from;
  for (int k = 1; k <= pieces; ++k) {
    const double next = k == pieces ? u_to : u_from + (u_to - u_from) * k / pieces;
    const double dt0 = (next - u) / 8.0;
    try {
      odeint::integrate_adaptive(stepper, sys, y, u, next, dt0);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::Stiffness, std::string("step control failed: ") + e.what());
    }
    for (double v : y)
      if (!std::isfinite(v)) throw Error(ErrorCode::Stiffness, "non-finite state during integration");
    u = next;
    after_piece(u, y);
  }
}

// Rescales y to unit max-norm of its (G, G', G'') part and returns ln of the factor removed.
double renormalize(State& y) {
  const double scale = std::max({std::abs(y[0]), std::abs(y[1]), std::abs(y[2])});
  if (scale == 0.0) return 0.0;
  for (double& v : y) v /= scale;
  return std::log(scale);
}

}  // namespace

FundamentalSolutions fundamental_solutions(const ModelParams& params, double u_min, double u_max,
                                           std::size_t n_points) {
  require_solver_params(params);
  const DerivedParams d = derive(params);
  if (d.beta <= 0.0) throw Error(ErrorCode::InvalidRegime, "fundamental solutions require beta > 0");

  FundamentalSolutions f;
  f.u = geometric_grid(u_min, u_max, n_points);
  const std::size_t n = f.u.size();
  f.log_h1.resize(n);
  f.log_h2.resize(n);
  f.log_h3.resize(n);
  f.log_H2.resize(n);
  f.log_H3.resize(n);

  const ThirdOrderSystem sys{&params};
  const double piece = 2.0 * std::min(params.mu1, params.mu2);

  // h1, forward.
  {
    State y = {1.0, 1.0 / params.mu2, 1.0 / (params.mu2 * params.mu2), 0.0};
    double log_scale = 0.0;
    f.log_h1[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      integrate_pieces(sys, y, f.u[i - 1], f.u[i], piece, [&](double, State& s) { log_scale += renormalize(s); });
      f.log_h1[i] = std::log(std::abs(y[0])) + log_scale;
    }
  }

  // h2, backward; H2(u_max) from h2 ~ exp(-u/mu1).
  {
    State y = {1.0, -1.0 / params.mu1, 1.0 / (params.mu1 * params.mu1), params.mu1};
    double log_scale = -u_max / params.mu1;
    f.log_h2[n - 1] = log_scale;
    f.log_H2[n - 1] = std::log(y[3]) + log_scale;
    for (std::size_t i = n - 1; i-- > 0;) {
      integrate_pieces(sys, y, f.u[i + 1], f.u[i], piece, [&](double, State& s) { log_scale += renormalize(s); });
      f.log_h2[i] = std::log(std::abs(y[0])) + log_scale;
      f.log_H2[i] = std::log(std::abs(y[3])) + log_scale;
    }
  }

  // h3, backward from the slow eigendirection with the h2 component removed
  // after every piece; H3(u_max) from h3 ~ u^-(beta + 1).
  {
    const CharRoots top = characteristic_roots(params, u_max);
    const double l3 = top.lambda3.real();
    State y = {1.0, l3, l3 * l3, u_max / d.beta};
    double log_scale = -(d.beta + 1.0) * std::log(u_max);
    f.log_h3[n - 1] = log_scale;
    f.log_H3[n - 1] = std::log(y[3]) + log_scale;
    CharRoots roots = top;
    auto project = [&](double u, State& s) {
      roots = characteristic_roots_near(params, u, roots);
      const std::complex<double> a1 = roots.lambda1, a3 = roots.lambda3;
      const double a2 = roots.lambda2.real();
      // The left eigenvector for lambda2 annihilates (1, l, l^2) for l = lambda1, lambda3;
      // its entries are real even when lambda1, lambda3 are a conjugate pair.
      const double p0 = (a1 * a3).real(), p1 = (a1 + a3).real();
      const double along = p0 * s[0] - p1 * s[1] + s[2];
      const double norm = a2 * a2 - p1 * a2 + p0;
      const double coef = along / norm;
      s[0] -= coef;
      s[1] -= coef * a2;
      s[2] -= coef * a2 * a2;
      log_scale += renormalize(s);
    };
    for (std::size_t i = n - 1; i-- > 0;) {
      integrate_pieces(sys, y, f.u[i + 1], f.u[i], piece, project);
      f.log_h3[i] = std::log(std::abs(y[0])) + log_scale;
      f.log_H3[i] = std::log(std::abs(y[3])) + log_scale;
    }
  }
  return f;
}

}  // namespace ruinkit
