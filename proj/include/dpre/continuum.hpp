#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dpre/coarse_grain.hpp"
#include "dpre/environment.hpp"
#include "dpre/polymer.hpp"
#include "dpre/stats.hpp"

namespace dpre {

/// Intermediate-disorder scaling: lattice scale n, beta_n = n^{-1/4}, N = floor(T n)
/// steps, start floor(x sqrt n) moved down to even, optional endpoint window
/// [a, b] in continuum units (lattice [ceil(a sqrt n), floor(b sqrt n)]).
struct IntermediateDisorderRun {
  std::int64_t n = 1;
  double T = 1.0;
  Law law = Law::gaussian;
  double start = 0.0;
  std::optional<std::pair<double, double>> window;

  double beta() const { return beta_from_n(n); }
  std::int64_t steps() const;
  std::int64_t lattice_start() const;
  /// Constraint carrying the endpoint window; unconstrained without one.
  PathConstraint endpoint_constraint() const;
};

/// log W^{start}_{beta_n, N}(S_N in window). Requires N >= 2.
template <Environment E>
double intermediate_partition(const IntermediateDisorderRun& run, const E& env) {
  if (run.steps() < 2) throw std::invalid_argument("intermediate_partition: T n must be at least 2");
  return partition_function(env, run.beta(), run.steps(), run.lattice_start(), run.endpoint_constraint());
}

/// Per-sample log W for EnvironmentField(derive_seed(seed, i), run.law).
std::vector<double> intermediate_log_samples(const IntermediateDisorderRun& run, std::int64_t samples,
                                             std::uint64_t seed, int threads = 1);

struct ContinuumPoint {
  double T = 0.0;
  std::int64_t N = 0;
  double mean = 0.0;  // (1/T) mean log W
  double std_error = 0.0;
};

struct ContinuumConstantEstimate {
  std::int64_t n = 0;
  Law law = Law::gaussian;
  std::int64_t samples = 0;
  std::vector<ContinuumPoint> points;  // increasing T
};

/// Every T uses the same environments (sample i seeded by derive_seed(seed, i)).
ContinuumConstantEstimate continuum_constant_estimate(std::int64_t n, std::span<const double> T_list,
                                                      std::int64_t samples, Law law, std::uint64_t seed,
                                                      int threads = 1);

/// CSV with header n,T,law,samples,mean,stderr.
void write_continuum_csv(std::ostream& out, const ContinuumConstantEstimate& estimate);

/// Two-sample KS between log W under law_a (seed_a) and law_b (seed_b).
KsResult universality_distribution_check(std::int64_t n, double T, Law law_a, Law law_b, std::int64_t samples,
                                         std::uint64_t seed_a, std::uint64_t seed_b, int threads = 1);

struct InfimumFieldEstimate {
  std::vector<double> log_inf;  // per environment: min over even x in B_0 of log W^x(S_N in B_1)
  double log_threshold = 0.0;   // T (-1/6 - eps / 2)
  double exceedance = 0.0;
  double std_error = 0.0;
  std::size_t starts = 0;
};

/// Geometry with segment spacing delta at scale n and N = T n rounded down to
/// even; throws std::invalid_argument when B_0 has no even point.
InfimumFieldEstimate infimum_field_estimate(std::int64_t n, double T, double delta, double eps,
                                            std::int64_t samples, Law law, std::uint64_t seed, int threads = 1);

}  // namespace dpre
