#include "oracles.hpp"

#include <aqbx/special.hpp>

#include <catch_amalgamated.hpp>

#include <random>

using namespace aqbx;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("Gauss-Legendre closed forms", "[special]") {
  const auto& r1 = gauss_legendre(1);
  REQUIRE(r1.nodes.size() == 1);
  CHECK(r1.nodes[0] == 0.0);
  CHECK_THAT(r1.weights[0], WithinAbs(2.0, 1e-15));

  const auto& r2 = gauss_legendre(2);
  CHECK_THAT(r2.nodes[0], WithinAbs(-0.5773502691896257, 1e-15));
  CHECK_THAT(r2.nodes[1], WithinAbs(0.5773502691896257, 1e-15));
  CHECK_THAT(r2.weights[0], WithinAbs(1.0, 1e-15));
  CHECK_THAT(r2.weights[1], WithinAbs(1.0, 1e-15));

  const auto& r16 = gauss_legendre(16);
  double s = 0.0;
  for (int i = 0; i < 16; ++i) s += r16.weights[i] * r16.nodes[i] * r16.nodes[i];
  CHECK_THAT(s, WithinAbs(2.0 / 3.0, 1e-14));
}

TEST_CASE("Gauss-Legendre rule structure", "[special]") {
  for (int n : {1, 3, 16, 33, 64, 128}) {
    const auto& r = gauss_legendre(n);
    double sw = 0.0;
    for (int i = 0; i < n; ++i) {
      sw += r.weights[i];
      CHECK(r.weights[i] > 0.0);
      CHECK_THAT(r.nodes[i], WithinAbs(-r.nodes[n - 1 - i], 1e-15));
      CHECK_THAT(r.weights[i], WithinAbs(r.weights[n - 1 - i], 1e-15));
      if (i > 0) CHECK(r.nodes[i] > r.nodes[i - 1]);
    }
    CHECK_THAT(sw, WithinAbs(2.0, 1e-14));
  }
}

TEST_CASE("Gauss-Legendre integrates monomials up to degree 2n-1", "[special]") {
  for (int n = 1; n <= 32; ++n) {
    const auto& r = gauss_legendre(n);
    for (int j = 0; j <= 2 * n - 1; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.nodes[i], j);
      const double exact = j % 2 ? 0.0 : 2.0 / (j + 1);
      CHECK_THAT(s, WithinAbs(exact, 1e-13));
    }
  }
}

TEST_CASE("Gauss-Legendre is exact for random polynomials of degree 2n-1", "[special][property]") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 20;
    std::vector<double> c(2 * n);
    for (auto& v : c) v = u(rng);
    double exact = 0.0;
    for (int j = 0; j < 2 * n; ++j)
      if (j % 2 == 0) exact += c[j] * 2.0 / (j + 1);
    const auto& r = gauss_legendre(n);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      double p = 0.0;
      for (int j = 2 * n - 1; j >= 0; --j) p = p * r.nodes[i] + c[j];
      s += r.weights[i] * p;
    }
    CHECK_THAT(s, WithinAbs(exact, 1e-13));
  }
}

TEST_CASE("Gauss-Legendre rejects orders outside 1..128", "[special]") {
  CHECK_THROWS_AS(gauss_legendre(0), Error);
  CHECK_THROWS_AS(gauss_legendre(129), Error);
}

TEST_CASE("Legendre sequence values", "[special]") {
  const auto a = legendre_sequence<double>(0.5, 2);
  CHECK_THAT(a[0], WithinAbs(1.0, 1e-16));
  CHECK_THAT(a[1], WithinAbs(0.5, 1e-16));
  CHECK_THAT(a[2], WithinAbs(-0.125, 1e-16));

  const auto b = legendre_sequence<cplx>(cplx(0.0, 1.0), 2);
  CHECK(std::abs(b[0] - 1.0) < 1e-16);
  CHECK(std::abs(b[1] - cplx(0.0, 1.0)) < 1e-16);
  CHECK(std::abs(b[2] - (-2.0)) < 1e-15);

  for (double v : legendre_sequence<double>(1.0, 64)) CHECK_THAT(v, WithinAbs(1.0, 1e-13));
}

TEST_CASE("Legendre polynomials are bounded by one on [-1, 1]", "[special][property]") {
  for (int i = 0; i <= 200; ++i) {
    const double t = -1.0 + i / 100.0;
    for (double v : legendre_sequence<double>(t, 64)) CHECK(std::abs(v) <= 1.0 + 1e-13);
  }
}

TEST_CASE("Bessel J values", "[special]") {
  CHECK(bessel_j(0, 0.0) == 1.0);
  for (int m = 1; m <= 10; ++m) CHECK(bessel_j(m, 0.0) == 0.0);
  CHECK(std::abs(bessel_j(0, 2.404825557695773)) < 1e-12);
  // 60-term series, frozen
  CHECK_THAT(double(oracle::bessel_j(1, 1.0L)), WithinAbs(0.4400505857449335, 1e-16));
  CHECK_THAT(bessel_j(1, 1.0), WithinRel(0.4400505857449335, 1e-14));
}

TEST_CASE("Bessel J agrees with the power series", "[special]") {
  for (int m : {0, 1, 2, 5, 10, 20, 30})
    for (double x : {0.01, 0.3, 1.0, 2.5, 5.0, 8.0, 12.0}) {
      const double ref = double(oracle::bessel_j(m, x));
      CHECK_THAT(bessel_j(m, x), WithinAbs(ref, 1e-14 + 1e-12 * std::abs(ref)));
    }
}

TEST_CASE("Bessel J three-term recurrence", "[special][property]") {
  for (double x : {0.5, 3.0, 17.0, 60.0, 150.0})
    for (int m = 1; m < 40; ++m) {
      const double jm = bessel_j(m, x);
      const double lhs = bessel_j(m - 1, x) + bessel_j(m + 1, x);
      CHECK_THAT(lhs, WithinAbs(2.0 * m / x * jm, 1e-10 * std::max(1.0, std::abs(lhs))));
    }
}

TEST_CASE("Hankel function values", "[special]") {
  // series oracles, frozen
  CHECK_THAT(double(oracle::bessel_j(0, 1.0L)), WithinAbs(0.7651976865579666, 1e-16));
  CHECK_THAT(double(oracle::bessel_y0(1.0L)), WithinAbs(0.0882569642156770, 1e-16));
  const cplx h = hankel1(0, 1.0);
  CHECK_THAT(h.real(), WithinRel(0.7651976865579666, 1e-12));
  CHECK_THAT(h.imag(), WithinRel(0.0882569642156770, 1e-12));
  CHECK_THROWS_AS(hankel1(0, 0.0), Error);
  CHECK_THROWS_AS(hankel1(1, -1.0), Error);
}

TEST_CASE("Neumann functions agree with the series", "[special]") {
  for (double x : {1e-3, 0.1, 0.7, 2.0, 5.0, 9.0}) {
    CHECK_THAT(bessel_y(0, x), WithinRel(double(oracle::bessel_y0(x)), 1e-10));
    CHECK_THAT(bessel_y(1, x), WithinRel(double(oracle::bessel_y1(x)), 1e-10));
  }
}

TEST_CASE("Hankel Wronskian", "[special][property]") {
  for (int m = 0; m <= 30; m += 3)
    for (double x : {0.1, 0.5, 1.0, 3.7, 10.0, 24.9, 25.1, 50.0}) {
      const double w = bessel_j(m + 1, x) * bessel_y(m, x) - bessel_j(m, x) * bessel_y(m + 1, x);
      CHECK_THAT(w, WithinRel(2.0 / (pi * x), 1e-10));
    }
}

TEST_CASE("Hankel small-argument leading term", "[special]") {
  // H_2(x) ~ -i 2^2 1! / (pi x^2)
  const cplx h = hankel1(2, 0.01);
  const double lead = -4.0 / (pi * 0.01 * 0.01);
  CHECK(std::abs(h.imag() - lead) < 0.01 * std::abs(lead));
}

TEST_CASE("Hankel pair matches the individual orders", "[special]") {
  for (double x : {0.2, 3.0, 24.0, 26.0, 100.0, 200.0}) {
    const auto [h0, h1] = hankel01(x);
    CHECK(std::abs(h0 - hankel1(0, x)) < 1e-12 * std::abs(h0));
    CHECK(std::abs(h1 - hankel1(1, x)) < 1e-12 * std::abs(h1));
  }
}

TEST_CASE("Factorials", "[special]") {
  CHECK(factorial(0) == 1.0);
  CHECK(factorial(5) == 120.0);
  CHECK_THAT(factorial(60), WithinRel(std::tgamma(61.0), 1e-13));
}
