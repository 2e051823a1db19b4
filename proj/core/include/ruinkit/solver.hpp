#pragma once

#include <span>
#include <vector>

#include "ruinkit/model.hpp"

namespace ruinkit {

// Coefficients of the third-order equation for G = Phi',
//   g3 G''' + g2 G'' + g1 G' + g0 G = 0,   qj = gj / g3.
struct OdeCoeffs {
  double q0, q1, q2;
  double g0, g1, g2, g3;
};

// Requires u > 0 and sigma > 0.
OdeCoeffs ode_coefficients(const ModelParams& params, double u);

struct GridSolution {
  std::vector<double> u;
  std::vector<double> phi;
  std::vector<double> g;   // Phi'
  std::vector<double> i1;  // int_{-inf}^u Phi(z) exp(-(u - z)/mu1) dz
  std::vector<double> i2;  // int_u^inf Phi(z) exp(-(z - u)/mu2) dz
  std::vector<double> residual_ide;
  std::vector<double> residual_ode3;
  double tail = 0.0;    // Psi(u_max) imposed at the right edge
  double tail_k = 0.0;  // K used for the tail, tail = K u_max^-beta
  bool left_equation = false;  // left edge pinned by the equation rather than Phi = 0

  std::size_t size() const { return u.size(); }
};

enum class LeftBoundary {
  Auto,            // ZeroDirichlet for c < 0, EquationPinned otherwise
  ZeroDirichlet,   // Phi(u_min) = 0
  EquationPinned,  // Phi(u_min) free; the IDE is imposed at u_min
};

enum class TailPolicy {
  None,     // Phi(u_max) = 1
  Given,    // Phi(u_max) = 1 - tail_k u_max^-beta
  TwoPass,  // tail_k estimated from a first solve with TailPolicy::None
};

struct BoundaryPolicy {
  LeftBoundary left = LeftBoundary::Auto;
  TailPolicy tail = TailPolicy::TwoPass;
  double tail_k = 0.0;
  // Max |IDE residual| / (alpha1 + alpha2) above which the solve is NONCONVERGED.
  double residual_threshold = 1e-2;
  // Minimum relative stencil spacing for residual_ode3.
  double ode3_spacing = 0.01;
};

// Geometric grid with n_points nodes from u_min to u_max.
std::vector<double> geometric_grid(double u_min, double u_max, std::size_t n_points);

// Survival probability on a geometric grid. The state (Phi, I1, I2) is solved
// jointly: second-order collocation of
//   1/2 sigma^2 u^2 Phi'' + (a u + c) Phi' - (alpha1 + alpha2) Phi
//     + (alpha1/mu1) I1 + (alpha2/mu2) I2 = 0
// at interior nodes, and exact exponential-kernel recurrences for I1 (forward)
// and I2 (backward) with Phi piecewise linear. Phi = 0 below zero; I2 is closed
// at the right edge by I2(u_max) = mu2 Phi(u_max).
// Throws INVALID_REGIME when beta <= 0, INVALID_INPUT for non-Poisson arrivals
// or sigma = 0, NONCONVERGED on a failed factorization or a large residual.
GridSolution solve_survival(const ModelParams& params, double u_min, double u_max, std::size_t n_points,
                            const BoundaryPolicy& policy = {});

// Phi at a point inside the grid: quadratic interpolation in ln u through the
// three nearest nodes. INVALID_INPUT outside [u.front(), u.back()].
double survival_at(const GridSolution& solution, double u);

// IDE residual of a tabulated Phi, evaluated independently of the solver's
// discretization: five-point derivatives and quadratic interpolation of Phi
// inside the exponential kernels. Needs >= 5 strictly increasing nodes.
std::vector<double> ide_residual(std::span<const double> u, std::span<const double> phi,
                                 const ModelParams& params);
std::vector<double> ide_residual(const GridSolution& solution, const ModelParams& params);

// g3 G''' + g2 G'' + g1 G' + g0 G with G = Phi' from seven-point derivatives.
// This is the kernel-operator T applied to the IDE, so it carries the same units.
// Stencil nodes are strided so neighbours sit at least
// min_spacing * max(u, min(mu1, mu2)) apart; a fourth derivative over a very
// fine grid is otherwise pure rounding noise. Nodes closer than three strides
// to either edge fall back to one-sided stencils and are far less accurate.
std::vector<double> ode3_residual(std::span<const double> u, std::span<const double> phi,
                                  const ModelParams& params, double min_spacing = 0.0);

// Nodes where ode3_residual used a centred stencil.
std::vector<bool> ode3_centered(std::span<const double> u, const ModelParams& params, double min_spacing = 0.0);

// Finite-difference weights (Fornberg) for derivatives 0..max_order at x0.
std::vector<std::vector<double>> fd_weights(double x0, std::span<const double> nodes, int max_order);

// Applies T f = mu1 mu2 f'' + (mu2 - mu1) f' - f with five-point derivatives.
std::vector<double> apply_kernel_operator(std::span<const double> u, std::span<const double> f, double mu1,
                                          double mu2);

struct FundamentalSolutions {
  std::vector<double> u;
  // ln |h_j(u)|; the solutions are carried with running renormalization.
  std::vector<double> log_h1, log_h2, log_h3;
  // ln H_j(u), H_j(u) = int_u^inf h_j, the part beyond u_max from the
  // asymptotic form of h_j.
  std::vector<double> log_H2, log_H3;
};

// Integrates G''' + q2 G'' + q1 G' + q0 G = 0 on a geometric grid over
// [u_min, u_max]: h1 forward from (1, 1/mu2, 1/mu2^2), h2 backward from
// (1, -1/mu1, 1/mu1^2), and h3 backward from the lambda3(u_max) eigendirection
// with the h2 component projected out every couple of kernel lengths.
// Throws STIFFNESS when the step control fails.
FundamentalSolutions fundamental_solutions(const ModelParams& params, double u_min, double u_max,
                                           std::size_t n_points);

}  // namespace ruinkit
