#include <doctest.h>

#include <cmath>
#include <random>

#include "dpre/stats.hpp"

using namespace dpre;

TEST_CASE("summary statistics") {
  const double v[] = {1, 2, 3, 4};
  const SampleSummary s = summarize(v);
  CHECK(s.count == 4);
  CHECK(s.mean == 2.5);
  CHECK(s.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
}

TEST_CASE("Kolmogorov tail reference values") {
  // Q_KS(t) = 1 - K(t); K(1) = 0.7300003283, K(1.36) = 0.9505
  CHECK(kolmogorov_tail(1.0) == doctest::Approx(0.2699996717).epsilon(1e-8));
  CHECK(kolmogorov_tail(1.358) == doctest::Approx(0.05).epsilon(2e-3));
  CHECK(kolmogorov_tail(0.0) == 1.0);
  CHECK(kolmogorov_tail(5.0) < 1e-20);
}

TEST_CASE("two-sample KS") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  std::vector<double> a(2000), b(2000), c(2000);
  for (auto& v : a) v = z(rng);
  for (auto& v : b) v = z(rng);
  for (auto& v : c) v = z(rng) + 0.3;
  CHECK(ks_two_sample(a, a).statistic == 0.0);
  CHECK(ks_two_sample(a, b).p_value > 0.001);
  CHECK(ks_two_sample(a, c).p_value < 1e-6);
  CHECK(ks_critical_value(1000, 1000, 0.01) == doctest::Approx(1.628 * std::sqrt(2.0 / 1000)).epsilon(1e-3));
}

TEST_CASE("Wilson interval") {
  const Interval i = wilson_interval(50, 100);
  CHECK(i.lo == doctest::Approx(0.4038).epsilon(1e-3));
  CHECK(i.hi == doctest::Approx(0.5962).epsilon(1e-3));
  const Interval z = wilson_interval(0, 500);
  CHECK(z.lo == doctest::Approx(0.0).scale(1));
  CHECK(z.hi == doctest::Approx(0.00762).epsilon(1e-2));
}

TEST_CASE("chi-squared goodness of fit") {
  const double obs[] = {18, 22, 20, 40};
  const double exp[] = {20, 20, 20, 40};
  const ChiSquaredResult r = chi_squared_gof(obs, exp);
  CHECK(r.statistic == doctest::Approx(0.4));
  CHECK(r.dof == 3);
  CHECK(r.p_value == doctest::Approx(0.94024).epsilon(1e-4));
  const double sparse_obs[] = {1, 2, 30, 11};
  const double sparse_exp[] = {1.5, 1.5, 30, 10};
  CHECK(chi_squared_gof(sparse_obs, sparse_exp).dof == 1);
}
