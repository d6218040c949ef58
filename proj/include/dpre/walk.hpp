#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpre/stats.hpp"

namespace dpre {

/// Thrown when a computation would exceed its size guard.
class CostRefusal : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// P(S_i = d) for simple random walk from 0: 2^-i binom(i, (i+d)/2), zero
/// for incompatible parity or |d| > i. Evaluated in log space.
double srw_pmf(std::int64_t i, std::int64_t d);
double srw_log_pmf(std::int64_t i, std::int64_t d);

/// Row i of the pmf by repeated convolution; entry j is d = -i + 2 j.
Eigen::ArrayXd srw_pmf_row(std::int64_t i);

struct EnvelopeReport {
  std::int64_t i_max = 0;
  double c = 0.0;             // smallest c with max_d pmf(i, d) <= c / sqrt(i), 2 <= i <= i_max
  std::int64_t argmax_i = 0;  // where the supremum is attained
  double plateau = 0.0;       // max_d pmf(i_max, d) sqrt(i_max)
  bool below_one = false;
};

EnvelopeReport llt_envelope_check(std::int64_t i_max);

/// P(max_{i <= N} |S_i| >= a) for the walk from 0, by absorbing DP.
/// Refuses (CostRefusal) when N (2a + 1) exceeds max_cells.
double exit_probability_exact(std::int64_t N, std::int64_t a, double max_cells = 1e8);

/// -(1/T) log P(exit), with N = floor(T n) steps and half-width
/// a = floor(L T sqrt(n)). +inf when the exit is unreachable.
double exit_rate_estimate(double T, std::int64_t n, double L);

/// Reflection-coupled pair: S from x, S~ from y mirrored about (x + y) / 2
/// until S first visits it, identical afterwards.
struct CoupledWalkPair {
  std::int64_t start_x = 0;
  std::int64_t start_y = 0;
  std::vector<std::int64_t> s;
  std::vector<std::int64_t> s_tilde;
  std::optional<std::int64_t> meeting_time;  // empty if S never hits the midpoint
};

/// Builds the pair from the +-1 increments of S. Requires x = y (mod 2).
CoupledWalkPair reflection_couple(std::int64_t x, std::int64_t y, std::span<const int> steps);

template <class Rng>
CoupledWalkPair reflection_coupling_sample(std::int64_t x, std::int64_t y, std::int64_t N, Rng& rng) {
  std::vector<int> steps(static_cast<std::size_t>(N));
  std::bernoulli_distribution coin(0.5);
  for (auto& s : steps) s = coin(rng) ? 1 : -1;
  return reflection_couple(x, y, steps);
}

struct CouplingMarginalReport {
  std::int64_t N = 0;
  double tv_distance = 0.0;      // path-space TV between the law of S~ and SRW from y
  std::size_t paths_enumerated = 0;
  bool pathwise_identity = true;  // reflection identity held on every enumerated path
};

/// Enumerates all 2^N increment sequences of S (N <= 20).
CouplingMarginalReport coupling_marginal_exact(std::int64_t x, std::int64_t y, std::int64_t N);

/// Pearson test of the law of S~_N against binom from y, over `samples`
/// sampled pairs (mt19937_64 seeded with `seed`).
ChiSquaredResult coupling_endpoint_chi_squared(std::int64_t x, std::int64_t y, std::int64_t N,
                                               std::int64_t samples, std::uint64_t seed);

/// P(tau_{x,y} >= i), tau = first n >= 0 with S_n = (x + y) / 2, S from x.
double meeting_time_tail(std::int64_t x, std::int64_t y, std::int64_t i);
/// P(tau >= i) for i = 0..i_max by one first-passage sweep.
std::vector<double> meeting_time_tail_series(std::int64_t x, std::int64_t y, std::int64_t i_max);
/// P_0(-d < S_i <= d), d = |x - y| / 2, summed from srw_pmf.
double meeting_window_probability(std::int64_t x, std::int64_t y, std::int64_t i);

struct MeetingIdentityReport {
  double max_abs_difference = 0.0;  // max_i |P(tau > i) - P_0(-d < S_i <= d)|
  double c4_hat = 0.0;              // max_{i >= 1} P(tau > i) sqrt(i) / |x - y|
  bool nonincreasing = true;
};

MeetingIdentityReport meeting_time_identity(std::int64_t x, std::int64_t y, std::int64_t i_max);

/// Piecewise-linear function on [-1, 1] through (knots[j], values[j]).
struct PiecewiseLinear {
  std::vector<double> knots;  // strictly increasing, knots.front() = -1, knots.back() = 1
  std::vector<double> values;
  double operator()(double t) const;
};

PiecewiseLinear random_piecewise_linear(std::mt19937_64& rng, int pieces, double amplitude = 1.0);

/// Gamma = int int_{[-1,1]^2} (|f(t) - f(s)| / |t - s|^q)^p ds dt.
double grr_integral(const PiecewiseLinear& f, double p, double q);
/// 2^{2/p + q + 3} / (lambda^{1/p} (q - 2/p)).
double grr_prefactor(double p, double q, double lambda = 1.0);

struct GrrOptions {
  double p = 4.0;
  double q = 0.625;
  double lambda = 1.0;
  int pairs = 1000;
  std::uint64_t seed = 1;
};

struct GrrReport {
  std::size_t functions = 0;
  std::size_t pairs_checked = 0;
  std::size_t violations = 0;
  std::size_t skipped = 0;
  double worst_ratio = 0.0;  // max |f(x) - f(y)| / bound
  std::vector<std::string> diagnostics;
};

/// Checks |f(x) - f(y)| <= prefactor |x - y|^{q - 2/p} Gamma^{1/p} at random
/// pairs. Requires p >= 1, q > 0, p q > 2.
GrrReport grr_bound_check(std::span<const PiecewiseLinear> functions, const GrrOptions& options);

}  // namespace dpre
