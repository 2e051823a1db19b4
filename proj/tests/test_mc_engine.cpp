#include <doctest.h>

#include <cmath>
#include <vector>

#include "ruinkit/mc_engine.hpp"
#include "support.hpp"

using namespace ruinkit;
using testing::error_code_of;

namespace {

// P(A <= rho) for A = exp(kappa T + sigma W_T), T ~ Exp(alpha), by Simpson on t.
double prob_a_below(double kappa, double sigma, double alpha, double rho) {
  const int n = 200000;
  const double t_max = 60.0 / alpha;
  const double h = t_max / n;
  auto f = [&](double t) {
    if (t <= 0.0) return 0.0;
    const double z = (std::log(rho) - kappa * t) / (sigma * std::sqrt(t));
    return alpha * std::exp(-alpha * t) * 0.5 * std::erfc(-z / std::sqrt(2.0));
  };
  double s = f(0.0) + f(t_max);
  for (int i = 1; i < n; ++i) s += f(i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("no ruin possible gives exactly zero") {
  ModelParams p = testing::beta_one();
  p.alpha1 = 0.0;
  Horizon h;
  h.max_jumps = 100;
  const auto e = estimate_ruin(p, 0.5, h, 5000, 3);
  CHECK(e.p_hat == 0.0);
  CHECK(e.n_ruined == 0);
  CHECK(e.ci_lo == 0.0);
}

TEST_CASE("classical Cramer-Lundberg value within 3 standard errors") {
  const ModelParams p = testing::cramer_lundberg();
  for (double u : {1.0, 3.0}) {
    Horizon h;
    h.upper_barrier = 100.0;
    const auto e = estimate_ruin(p, u, h, 20000, 7);
    const double exact = testing::cramer_lundberg_psi(1.0, 1.0, 1.5, u);
    CHECK(std::abs(e.p_hat - exact) <= 3.0 * e.std_error);
    CHECK(e.n_censored == 0);
  }
}

TEST_CASE("estimate does not depend on the worker count") {
  const ModelParams p = testing::beta_one();
  Horizon h;
  h.max_jumps = 300;
  const auto one = estimate_ruin(p, 2.0, h, 4000, 42, {.workers = 1});
  for (int w : {2, 3, 8}) {
    const auto many = estimate_ruin(p, 2.0, h, 4000, 42, {.workers = w});
    CHECK(one.same_result(many));
  }
}

TEST_CASE("Wilson interval covers the true value") {
  const ModelParams p = testing::cramer_lundberg();
  const double exact = testing::cramer_lundberg_psi(1.0, 1.0, 1.5, 2.0);
  Horizon h;
  h.upper_barrier = 60.0;
  int covered = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto e = estimate_ruin(p, 2.0, h, 1000, seed);
    covered += e.ci_lo <= exact && exact <= e.ci_hi;
  }
  CHECK(covered >= 90);
}

TEST_CASE("wilson_interval edge values") {
  const auto z = wilson_interval(0, 100);
  CHECK(z.lo == 0.0);
  CHECK(z.hi > 0.0);
  const auto f = wilson_interval(100, 100);
  CHECK(f.hi == 1.0);
  const auto m = wilson_interval(50, 100);
  CHECK(m.lo == doctest::Approx(1.0 - m.hi));
}

TEST_CASE("censoring is counted and flagged") {
  const ModelParams p = testing::certain_ruin();
  Horizon h;
  h.max_jumps = 2;
  const auto e = estimate_ruin(p, 50.0, h, 2000, 5);
  CHECK(e.n_ruined + e.n_censored + e.n_barrier == e.n_paths);
  CHECK(e.censored_fraction > 0.01);
  CHECK(e.censoring_warning);
}

TEST_CASE("ladder horizons equal independent estimates and are monotone") {
  const ModelParams p = testing::certain_ruin();
  const std::vector<std::uint64_t> js = {10, 100, 1000};
  Horizon h;
  const auto ladder = estimate_ruin_ladder(p, 10.0, h, js, 2000, 9);
  REQUIRE(ladder.size() == 3);
  for (std::size_t k = 0; k < js.size(); ++k) {
    Horizon hk;
    hk.max_jumps = js[k];
    CHECK(ladder[k].same_result(estimate_ruin(p, 10.0, hk, 2000, 9)));
    if (k > 0) CHECK(ladder[k].p_hat >= ladder[k - 1].p_hat);
  }
  CHECK(error_code_of([&] {
          const std::vector<std::uint64_t> bad = {100, 10};
          estimate_ruin_ladder(p, 10.0, h, bad, 10, 1);
        }) == ErrorCode::InvalidInput);
}

TEST_CASE("curve is monotone under common random numbers") {
  const ModelParams p = testing::beta_one();
  const std::vector<double> grid = {0.5, 1, 2, 4, 8, 16, 32};
  const auto curve = estimate_ruin_curve(p, grid, default_curve_horizon(grid), 5000, 13);
  REQUIRE(curve.size() == grid.size());
  for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].p_hat <= curve[i - 1].p_hat);
  const std::vector<double> bad = {1, 1};
  CHECK(error_code_of([&] { estimate_ruin_curve(p, bad, Horizon{}, 10, 1); }) == ErrorCode::NonMonotoneGrid);
}

TEST_CASE("beta <= 0 curve approaches one") {
  const ModelParams p = testing::certain_ruin();
  const std::vector<double> grid = {1.0, 10.0};
  Horizon h;
  h.max_jumps = 3000;
  for (const auto& e : estimate_ruin_curve(p, grid, h, 2000, 17)) CHECK(e.p_hat >= 0.95);
}

TEST_CASE("beta = 1 curve decays like 1/u over a decade") {
  const ModelParams p = testing::beta_one();
  const std::vector<double> grid = {10.0, 100.0};
  const auto c = estimate_ruin_curve(p, grid, default_curve_horizon(grid), 40000, 19);
  REQUIRE(c[1].p_hat > 0.0);
  const double slope = std::log(c[1].p_hat / c[0].p_hat) / std::log(10.0);
  CHECK(slope == doctest::Approx(-1.0).epsilon(0.15));
}

TEST_CASE("bracket contains p_hat and widens with censoring") {
  MCEstimate e;
  e.p_hat = 0.2;
  e.barrier_fraction = 0.5;
  e.censored_fraction = 0.1;
  const auto b = bracket(e, 0.01);
  CHECK(b.lo == 0.2);
  CHECK(b.hi == doctest::Approx(0.2 + 0.005 + 0.1));
}

TEST_CASE("lower bound exponent and preconditions") {
  CHECK(lower_bound_exponent(0.25, 0.5) == doctest::Approx(2.0));
  const ModelParams p = testing::beta_one();
  CHECK(error_code_of([&] { estimate_lower_bound(p, 1.0, 9.0, 10, 1); }) == ErrorCode::InvalidInput);
  CHECK(error_code_of([&] { estimate_lower_bound(p, 0.5, 8.0, 10, 1); }) == ErrorCode::InvalidInput);
  CHECK(error_code_of([&] { estimate_lower_bound(p, 0.5, 9.0, 0, 1); }) == ErrorCode::InvalidInput);
}

TEST_CASE("P(Gamma) matches the integral when B <= 0 surely") {
  ModelParams p = testing::beta_one();
  p.c = 0.0;
  p.alpha1 = 1.0;
  p.alpha2 = 0.0;
  const double rho = 0.5;
  const auto lb = estimate_lower_bound(p, rho, 9.0, 200000, 23);
  const double exact = prob_a_below(log_drift(p), p.sigma, p.alpha1 + p.alpha2, rho);
  const double se = std::sqrt(exact * (1 - exact) / lb.n_samples);
  CHECK(std::abs(lb.p_gamma - exact) <= 3.0 * se);
  CHECK(lb.beta_star == doctest::Approx(std::log(lb.p_gamma) / std::log(rho)));
}

TEST_CASE("negative premium gives P(D) > 0") {
  ModelParams p = testing::beta_one();
  p.c = -0.5;
  const auto lb = estimate_lower_bound(p, 0.5, 9.0, 200000, 29);
  CHECK(lb.p_d > 0.0);
  CHECK(lb.p_gamma > 0.0);
  CHECK(lb.bound_constant > 0.0);
  CHECK(lb.b1 == doctest::Approx(1.0));
}

TEST_CASE("ladder epochs of a driftless walk follow Sparre Andersen") {
  // Symmetric continuous increments: P(theta > n) = C(2n, n) / 4^n.
  ModelParams p = testing::beta_one();
  p.a = 0.5;
  const auto s = ladder_stats(p, 50000, 64, 31);
  for (std::size_t k = 0; k < s.n_grid.size(); ++k) {
    const double n = static_cast<double>(s.n_grid[k]);
    const double exact = std::exp(std::lgamma(2 * n + 1) - 2 * std::lgamma(n + 1) - n * std::log(4.0));
    const double se = std::sqrt(exact * (1 - exact) / 50000.0);
    CHECK(std::abs(s.tail[k] - exact) <= 3.0 * se);
    CHECK(s.scaled_tail[k] == doctest::Approx(std::sqrt(n) * s.tail[k]));
  }
}

TEST_CASE("ladder statistics limits") {
  ModelParams p = testing::cramer_lundberg();
  p.a = -0.1;
  const auto det = ladder_stats(p, 100, 16, 1);
  for (auto t : det.theta) CHECK(t == 1);

  ModelParams neg = testing::certain_ruin();
  CHECK(ladder_stats(neg, 5000, 1024, 3).median_theta <= 3.0);

  CHECK(error_code_of([&] { ladder_stats(testing::beta_one(), 10, 10, 1); }) == ErrorCode::InvalidRegime);
}
