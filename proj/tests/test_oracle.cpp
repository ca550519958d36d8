#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracle.hpp"

TEST_CASE("cox_de_boor known values") {
  CHECK(oracle::cox_de_boor(0, 0.5) == 1.0);
  CHECK(oracle::cox_de_boor(0, 1.0) == 0.0);
  CHECK(oracle::cox_de_boor(1, 1.0) == 1.0);
  CHECK(oracle::cox_de_boor(3, 2.0) == doctest::Approx(4.0 / 6.0).epsilon(1e-15));
  CHECK(oracle::cox_de_boor(3, 1.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(oracle::cox_de_boor(3, -0.1) == 0.0);
  CHECK(oracle::cox_de_boor(3, 4.0) == 0.0);
}

TEST_CASE("cox_de_boor is symmetric about the support center") {
  for (int q = 0; q <= 5; ++q) {
    for (double t = 0.01; t < 0.5 * (q + 1); t += 0.13) {
      CHECK(std::abs(oracle::cox_de_boor(q, t) - oracle::cox_de_boor(q, q + 1 - t)) < 1e-14);
    }
  }
}

TEST_CASE("gauss_legendre integrates polynomials exactly") {
  const auto& rule = oracle::gauss_legendre(64);
  REQUIRE(rule.nodes.size() == 64);
  double sum_w = 0.0;
  double x126 = 0.0;
  for (std::size_t k = 0; k < 64; ++k) {
    sum_w += rule.weights[k];
    x126 += rule.weights[k] * std::pow(rule.nodes[k], 126);
  }
  CHECK(sum_w == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(x126 == doctest::Approx(2.0 / 127.0).epsilon(1e-12));
}

TEST_CASE("quadrature_integrate examples") {
  CHECK(oracle::quadrature_integrate(3, 1.2, 1.2, 0) == 0.0);
  for (int q = 0; q <= 5; ++q) {
    CHECK(std::abs(oracle::quadrature_integrate(q, -3.0, q + 5.0, 0) - 1.0) < 1e-13);
    CHECK(std::abs(oracle::quadrature_integrate(q, 7.0 - 0.3, 7.0 + q + 1.4, 7) - 1.0) < 1e-13);
  }
  // Hat function: area over its left half is 1/2, and reversal negates.
  CHECK(std::abs(oracle::quadrature_integrate(1, 0.0, 1.0, 0) - 0.5) < 1e-15);
  CHECK(std::abs(oracle::quadrature_integrate(1, 1.0, 0.0, 0) + 0.5) < 1e-15);
  // Cubic over [0, 1]: integral of x^3 / 6 is 1/24.
  CHECK(std::abs(oracle::quadrature_integrate(3, 0.0, 1.0, 0) - 1.0 / 24.0) < 1e-15);
}

TEST_CASE("compensated replay recovers cancelling sums") {
  std::vector<oracle::Deposit> trace{{0, 1e16}, {0, 1.0}, {0, -1e16}, {1, 0.1}, {1, 0.2}};
  const auto out = oracle::replay_compensated(3, trace);
  CHECK(out[0] == 1.0);
  CHECK(std::abs(out[1] - 0.3) < 1e-16);
  CHECK(out[2] == 0.0);
}
