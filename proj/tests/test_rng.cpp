#include <doctest.h>

#include <cmath>
#include <vector>

#include "ruinkit/rng.hpp"

using namespace ruinkit;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::block(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::block(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("splitmix64 reference output") {
  // First output of the reference generator seeded with 0.
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
}

TEST_CASE("streams are reproducible and distinct") {
  RandomStream a(5, 17), b(5, 17), c(5, 18), d(6, 17);
  std::vector<std::uint64_t> xa, xb, xc, xd;
  for (int i = 0; i < 64; ++i) {
    xa.push_back(a.next_u64());
    xb.push_back(b.next_u64());
    xc.push_back(c.next_u64());
    xd.push_back(d.next_u64());
  }
  CHECK(xa == xb);
  CHECK(xa != xc);
  CHECK(xa != xd);
  CHECK(a.blocks_consumed() == 32);
}

namespace {

struct Moments {
  double mean = 0, var = 0, m4 = 0;
};

template <class F>
Moments moments(int n, F draw) {
  std::vector<double> x(static_cast<std::size_t>(n));
  double s = 0;
  for (auto& v : x) s += (v = draw());
  Moments m;
  m.mean = s / n;
  for (double v : x) {
    const double d = v - m.mean;
    m.var += d * d;
    m.m4 += d * d * d * d;
  }
  m.var /= n - 1;
  m.m4 /= n;
  return m;
}

}  // namespace

TEST_CASE("uniform lies in (0,1) with the right mean and variance") {
  RandomStream r(1, 0);
  double lo = 1, hi = 0;
  const auto m = moments(1000000, [&] {
    const double u = r.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    return u;
  });
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  CHECK(std::abs(m.mean - 0.5) < 3 * std::sqrt(1.0 / 12 / 1e6));
  CHECK(m.var == doctest::Approx(1.0 / 12).epsilon(0.01));
}

TEST_CASE("normal moments and tail mass") {
  RandomStream r(2, 0);
  const int n = 2000000;
  int beyond3 = 0;
  const auto m = moments(n, [&] {
    const double z = r.normal();
    beyond3 += std::abs(z) > 3.0;
    return z;
  });
  CHECK(std::abs(m.mean) < 3 / std::sqrt(n));
  CHECK(std::abs(m.var - 1.0) < 3 * std::sqrt(2.0 / n));
  CHECK(m.m4 / (m.var * m.var) == doctest::Approx(3.0).epsilon(0.02));
  const double p3 = std::erfc(3.0 / std::sqrt(2.0));
  CHECK(std::abs(beyond3 / double(n) - p3) < 3 * std::sqrt(p3 / n));
}

TEST_CASE("exponential and gamma means and variances") {
  RandomStream r(3, 0);
  const int n = 1000000;
  auto e = moments(n, [&] { return r.exponential(2.0); });
  CHECK(std::abs(e.mean - 2.0) < 3 * 2.0 / std::sqrt(n));
  CHECK(e.var == doctest::Approx(4.0).epsilon(0.02));
  for (double shape : {0.3, 1.0, 4.5}) {
    const double scale = 0.7;
    auto g = moments(n, [&] { return r.gamma(shape, scale); });
    const double sd = std::sqrt(shape) * scale;
    CHECK(std::abs(g.mean - shape * scale) < 3 * sd / std::sqrt(n));
    CHECK(g.var == doctest::Approx(shape * scale * scale).epsilon(0.03));
  }
}
