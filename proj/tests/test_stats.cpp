#include <doctest.h>

#include <cmath>

#include "fpcaband/stats.hpp"

using fpcaband::stats::chi_squared_quantile;
using fpcaband::stats::normal_cdf;
using fpcaband::stats::normal_quantile;

TEST_CASE("normal quantile against reference values") {
  CHECK(normal_quantile(0.9) == doctest::Approx(1.2815515655446004).epsilon(1e-12));
  CHECK(normal_quantile(0.95) == doctest::Approx(1.6448536269514722).epsilon(1e-12));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(normal_quantile(0.01) == doctest::Approx(-2.3263478740408408).epsilon(1e-12));
  CHECK(normal_quantile(1e-6) == doctest::Approx(-4.753424308822899).epsilon(1e-11));
}

TEST_CASE("normal quantile symmetry and inversion") {
  for (const double p : {0.001, 0.05, 0.21, 0.5, 0.77, 0.9, 0.9999}) {
    CHECK(normal_quantile(p) ==
          doctest::Approx(-normal_quantile(1.0 - p)).epsilon(1e-10));
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK_THROWS_AS(normal_quantile(0.0), std::invalid_argument);
  CHECK_THROWS_AS(normal_quantile(1.0), std::invalid_argument);
}

TEST_CASE("chi-squared quantile against reference values") {
  CHECK(chi_squared_quantile(1, 0.95) ==
        doctest::Approx(3.841458820694124).epsilon(1e-10));
  CHECK(chi_squared_quantile(2, 0.9) ==
        doctest::Approx(-2.0 * std::log(0.1)).epsilon(1e-10));
  CHECK(chi_squared_quantile(5, 0.5) ==
        doctest::Approx(4.351460191095526).epsilon(1e-10));
  CHECK(chi_squared_quantile(50, 0.9) ==
        doctest::Approx(63.167121005726315).epsilon(1e-10));
  CHECK(chi_squared_quantile(10, 0.99) ==
        doctest::Approx(23.209251158954356).epsilon(1e-10));
  CHECK(chi_squared_quantile(3, 0.025) ==
        doctest::Approx(0.21579528262389785).epsilon(1e-9));
  CHECK_THROWS_AS(chi_squared_quantile(0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(chi_squared_quantile(2, 1.0), std::invalid_argument);
}
