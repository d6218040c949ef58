#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dpre {

struct SampleSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(count)
};

/// Mean and standard error, accumulated in index order.
SampleSummary summarize(std::span<const double> values);

/// Q_KS(t) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 t^2), the asymptotic
/// Kolmogorov tail.
double kolmogorov_tail(double t);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// Q_KS((sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) D), ne = n m / (n + m).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Critical value of the two-sample statistic at level alpha (asymptotic).
double ks_critical_value(std::size_t n, std::size_t m, double alpha);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::int64_t successes, std::int64_t trials, double z = 1.959963984540054);

struct ChiSquaredResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Pearson goodness of fit. Adjacent cells are pooled left to right until
/// every pooled expected count is at least min_expected.
ChiSquaredResult chi_squared_gof(std::span<const double> observed, std::span<const double> expected,
                                 double min_expected = 5.0);

}  // namespace dpre
