#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dpre/continuum.hpp"
#include "oracles.hpp"

using namespace dpre;

TEST_CASE("beta_n wiring") {
  for (const std::int64_t n : {1, 2, 4, 16, 64, 81, 100, 256, 1000, 4096}) {
    const IntermediateDisorderRun run{n, 2.0, Law::gaussian, 0.0, std::nullopt};
    CHECK(std::abs(std::pow(run.beta(), 4) * static_cast<double>(n) - 1.0) < 1e-12);
  }
  for (const std::int64_t n : {16, 81, 256}) CHECK(n_from_beta(beta_from_n(n)) == n);
  CHECK(beta_from_n(1) == 1.0);
}

TEST_CASE("lattice start and steps") {
  const auto run = [](double T, double x) { return IntermediateDisorderRun{64, T, Law::gaussian, x, std::nullopt}; };
  CHECK(run(2.0, 0.0).steps() == 128);
  CHECK(run(0.3, 0.0).steps() == 19);
  CHECK(run(1.0, 0.3).lattice_start() == 2);
  CHECK(run(1.0, 0.4).lattice_start() == 2);
  CHECK(run(1.0, -0.1).lattice_start() == -2);
  CHECK(run(1.0, 0.5).lattice_start() == 4);
}

TEST_CASE("n = 1 is the ordinary polymer at beta = 1") {
  const EnvironmentField env(4, Law::rademacher);
  const IntermediateDisorderRun run{1, 12.0, Law::rademacher, 0.0, std::nullopt};
  CHECK(intermediate_partition(run, env) == doctest::Approx(partition_function(env, 1.0, 12, 0)).epsilon(1e-14));
  CHECK_THROWS_AS(intermediate_partition(IntermediateDisorderRun{1, 1.0, Law::gaussian, 0.0, std::nullopt}, env),
                  std::invalid_argument);
}

TEST_CASE("endpoint windows") {
  const EnvironmentField env(8, Law::gaussian);
  const IntermediateDisorderRun open{16, 2.0, Law::gaussian, 0.0, std::nullopt};
  IntermediateDisorderRun whole = open;
  whole.window = std::pair{-1e6, 1e6};
  CHECK(intermediate_partition(whole, env) == intermediate_partition(open, env));

  // beta = 0 limit through the walk law: P(S_16 in [2, 6])
  IntermediateDisorderRun w{16, 1.0, Law::gaussian, 0.0, std::pair{0.5, 1.5}};
  const auto row = oracle::pascal_row(16);
  double p = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    const auto y = -16 + 2 * static_cast<std::int64_t>(j);
    if (y >= 2 && y <= 6) p += row[j];
  }
  CHECK(std::exp(partition_function(env, 0.0, w.steps(), w.lattice_start(), w.endpoint_constraint())) ==
        doctest::Approx(p).epsilon(1e-14));

  const auto logs = intermediate_log_samples(w, 4000, 33, 2);
  std::vector<double> vals;
  for (const double v : logs) vals.push_back(std::exp(v));
  const SampleSummary s = summarize(vals);
  CHECK(std::abs(s.mean - p) < 3.0 * s.std_error);
}

TEST_CASE("normalization of the unwindowed partition function") {
  const IntermediateDisorderRun run{16, 2.0, Law::gaussian, 0.0, std::nullopt};
  std::vector<double> vals;
  for (const double v : intermediate_log_samples(run, 10000, 5, 2)) vals.push_back(std::exp(v));
  const SampleSummary s = summarize(vals);
  CHECK(std::abs(s.mean - 1.0) < 3.0 * s.std_error);
}

TEST_CASE("continuum constant estimate") {
  const double Ts[] = {2.0, 0.5, 1.0};
  CHECK_THROWS_AS(continuum_constant_estimate(16, Ts, 10, Law::gaussian, 1), std::invalid_argument);
  const auto a = continuum_constant_estimate(16, Ts, 60, Law::gaussian, 1, 1);
  const auto b = continuum_constant_estimate(16, Ts, 60, Law::gaussian, 1, 3);
  REQUIRE(a.points.size() == 3);
  CHECK(a.points[0].T == 0.5);
  CHECK(a.points[2].T == 2.0);
  CHECK(a.points[2].N == 32);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.points[i].mean == b.points[i].mean);
    CHECK(a.points[i].mean < 0.0);
    CHECK(a.points[i].std_error > 0.0);
  }
  // the same environments back every T
  const IntermediateDisorderRun run{16, 1.0, Law::gaussian, 0.0, std::nullopt};
  const auto logs = intermediate_log_samples(run, 60, 1);
  CHECK(a.points[1].mean == doctest::Approx(summarize(logs).mean).epsilon(1e-14));

  std::ostringstream out;
  write_continuum_csv(out, a);
  CHECK(out.str().rfind("n,T,law,samples,mean,stderr\n16,0.5,gaussian,60,", 0) == 0);
}

TEST_CASE("universality check") {
  const KsResult same = universality_distribution_check(16, 1.0, Law::gaussian, Law::gaussian, 200, 3, 3);
  CHECK(same.statistic == 0.0);
  const KsResult diff = universality_distribution_check(16, 1.0, Law::gaussian, Law::gaussian, 200, 3, 4);
  CHECK(diff.statistic > 0.0);
}

TEST_CASE("infimum over starts") {
  const std::int64_t n = 16;
  const double T = 2.0, delta = 0.2;
  const auto est = infimum_field_estimate(n, T, delta, 0.5, 30, Law::gaussian, 21);
  CHECK(est.starts == 5);
  CHECK(est.log_threshold == doctest::Approx(2.0 * (-1.0 / 6.0 - 0.25)));
  for (std::size_t i = 0; i < est.log_inf.size(); ++i) {
    const EnvironmentField env(derive_seed(21, i), Law::gaussian);
    // B_1 = [(0.4 - 1) 4, (0.4 + 1) 4] = [-2.4, 5.6]
    const PathConstraint c = endpoint_interval(-2, 5);
    double lowest = std::numeric_limits<double>::infinity();
    for (const std::int64_t x : {-4, -2, 0, 2, 4}) {
      const double v = partition_function(env, beta_from_n(n), 32, x, c);
      CHECK(est.log_inf[i] <= v + 1e-12);
      lowest = std::min(lowest, v);
    }
    CHECK(est.log_inf[i] == doctest::Approx(lowest).epsilon(1e-12));
  }
  const auto single = infimum_field_estimate(1, 4.0, 0.5, 0.5, 10, Law::gaussian, 2);
  CHECK(single.starts == 1);
  for (std::size_t i = 0; i < single.log_inf.size(); ++i) {
    const EnvironmentField env(derive_seed(2, i), Law::gaussian);
    CHECK(single.log_inf[i] == doctest::Approx(partition_function(env, 1.0, 4, 0, endpoint_interval(1, 3))).epsilon(1e-13));
  }
}
