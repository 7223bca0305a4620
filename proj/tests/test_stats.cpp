#include <doctest.h>

#include <cmath>
#include <initializer_list>

#include "brcat/stats.hpp"

using namespace brcat;

TEST_CASE("normal cdf and two-sided p") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
  CHECK(two_sided_normal_p(0.0) == doctest::Approx(1.0));
  // -2.001/1.552 = -1.289...: p = 0.197
  const double z = -2.001 / 1.552;
  CHECK(two_sided_normal_p(z) == doctest::Approx(0.197).epsilon(2e-3));
}

TEST_CASE("normal quantile inverts the cdf") {
  for (double p : {0.001, 0.025, 0.3, 0.5, 0.84, 0.975, 0.999})
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-9));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-5));
}

TEST_CASE("chi-squared tail and quantile") {
  // Closed form for even df: Q(x; 6) = exp(-x/2) (1 + x/2 + x^2/8)
  for (double x : {0.5, 1.067, 4.0, 12.592}) {
    const double h = 0.5 * x;
    CHECK(chisq_upper_tail(x, 6) ==
          doctest::Approx(std::exp(-h) * (1 + h + h * h / 2)).epsilon(1e-12));
  }
  CHECK(chisq_quantile(0.95, 6) == doctest::Approx(12.592).epsilon(1e-4));
  CHECK(chisq_upper_tail(1.067, 6) == doctest::Approx(0.983).epsilon(1e-3));
  // df = 1 matches the squared-normal identity.
  CHECK(chisq_upper_tail(1.96 * 1.96, 1) == doctest::Approx(0.05).epsilon(1e-3));
}

TEST_CASE("regularized gamma complementarity") {
  for (double a : {0.5, 3.0, 10.0})
    for (double x : {0.1, 2.0, 9.0, 30.0})
      CHECK(gamma_p(a, x) + gamma_q(a, x) == doctest::Approx(1.0).epsilon(1e-12));
}
