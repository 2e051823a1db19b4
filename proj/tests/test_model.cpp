#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "ruinkit/config.hpp"
#include "ruinkit/error.hpp"
#include "ruinkit/model.hpp"
#include "support.hpp"

using namespace ruinkit;

TEST_CASE("derive: beta and kappa from the drift and volatility") {
  ModelParams p = testing::beta_one();
  auto d = derive(p);
  CHECK(d.beta == doctest::Approx(1.0));
  CHECK(d.kappa == doctest::Approx(0.5));
  CHECK(d.delta_mu == doctest::Approx(1.0));
  CHECK(d.mu_sq == doctest::Approx(2.0));
  CHECK(d.alpha_total == doctest::Approx(1.5));

  p.a = 0.5;
  d = derive(p);
  CHECK(d.beta == 0.0);
  CHECK(d.kappa == 0.0);
}

TEST_CASE("derive rejects sigma = 0 and invalid parameters") {
  ModelParams p = testing::cramer_lundberg();
  CHECK_THROWS_AS(derive(p), Error);
  p = testing::beta_one();
  p.mu1 = -1.0;
  CHECK_THROWS_AS(derive(p), Error);
}

TEST_CASE("kappa equals sigma^2 beta / 2 over random draws") {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> a(-3.0, 3.0), s(0.05, 3.0);
  for (int k = 0; k < 10000; ++k) {
    ModelParams p = testing::beta_one();
    p.a = a(gen);
    p.sigma = s(gen);
    const auto d = derive(p);
    const double rhs = 0.5 * p.sigma * p.sigma * d.beta;
    CHECK(std::abs(d.kappa - rhs) <= 1e-14 * std::max(1.0, std::abs(d.kappa)));
  }
}

TEST_CASE("validate reports each violated invariant by code") {
  ModelParams p = testing::beta_one();
  CHECK(validate(p).empty());

  p.mu1 = -1.0;
  auto r = validate(p);
  CHECK_FALSE(r.ok());
  CHECK(r.has("NEGATIVE_JUMP_MEAN"));

  p = testing::beta_one();
  p.alpha1 = 0.0;
  p.c = 1.0;
  r = validate(p);
  CHECK(r.ok());
  CHECK(r.has("NO_RUIN_POSSIBLE"));

  p = testing::cramer_lundberg();
  r = validate(p);
  CHECK(r.ok());
  CHECK(r.has("SIMULATOR_ONLY"));

  p = testing::beta_one();
  p.alpha1 = p.alpha2 = 0.0;
  CHECK(validate(p).has("NO_JUMP_INTENSITY"));

  p = testing::beta_one();
  p.alpha2 = -0.1;
  CHECK(validate(p).has("NEGATIVE_INTENSITY"));

  p = testing::beta_one();
  p.sigma = -1.0;
  CHECK(validate(p).has("NEGATIVE_VOLATILITY"));

  p = testing::beta_one();
  p.a = std::numeric_limits<double>::quiet_NaN();
  CHECK(validate(p).has("NON_FINITE"));

  p = testing::beta_one();
  p.interarrival = GammaArrivals{-1.0, 1.0};
  CHECK(validate(p).has("INVALID_INTERARRIVAL"));
}

TEST_CASE("model JSON round trip is the identity") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> x(-5.0, 5.0), pos(1e-3, 10.0);
  for (int k = 0; k < 500; ++k) {
    ModelParams p;
    p.a = x(gen);
    p.sigma = pos(gen);
    p.c = x(gen);
    p.alpha1 = pos(gen);
    p.alpha2 = pos(gen);
    p.mu1 = pos(gen);
    p.mu2 = pos(gen);
    if (k % 2) p.interarrival = GammaArrivals{pos(gen), pos(gen)};
    const ModelParams back = model_from_json(model_to_json(p));
    CHECK(back == p);
  }
}

TEST_CASE("model JSON rejects unknown and missing keys") {
  const std::string ok = R"({"a":1,"sigma":1,"c":1,"alpha1":1,"alpha2":0.5,"mu1":1,"mu2":2})";
  CHECK_NOTHROW(model_from_json(ok));
  CHECK(model_from_json(ok).poisson());
  CHECK_THROWS_WITH_AS(model_from_json(R"({"a":1,"sigma":1,"c":1,"alpha1":1,"alpha2":0.5,"mu1":1,"mu2":2,"mu3":1})"),
                       doctest::Contains("unknown key 'mu3'"), Error);
  CHECK_THROWS_WITH_AS(model_from_json(R"({"a":1,"sigma":1,"c":1,"alpha1":1,"alpha2":0.5,"mu1":1})"),
                       doctest::Contains("missing key 'mu2'"), Error);
  CHECK_THROWS_AS(model_from_json(R"({"a":"1","sigma":1,"c":1,"alpha1":1,"alpha2":0.5,"mu1":1,"mu2":2})"), Error);
  CHECK_THROWS_AS(model_from_json("{not json"), Error);
  CHECK_THROWS_AS(
      model_from_json(
          R"({"a":1,"sigma":1,"c":1,"alpha1":1,"alpha2":0.5,"mu1":1,"mu2":2,"interarrival":{"kind":"weibull"}})"),
      Error);
  const auto g = model_from_json(
      R"({"a":1,"sigma":1,"c":1,"alpha1":1,"alpha2":0.5,"mu1":1,"mu2":2,"interarrival":{"kind":"gamma","shape":2,"scale":0.25}})");
  CHECK_FALSE(g.poisson());
}

TEST_CASE("no_ruin_possible matches the degenerate configuration") {
  ModelParams p = testing::beta_one();
  CHECK_FALSE(no_ruin_possible(p));
  p.alpha1 = 0.0;
  CHECK(no_ruin_possible(p));
  p.c = -0.1;
  CHECK_FALSE(no_ruin_possible(p));
}
