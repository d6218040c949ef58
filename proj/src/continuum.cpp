#include "dpre/continuum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "dpre/csv.hpp"
#include "dpre/parallel.hpp"

namespace dpre {

std::int64_t IntermediateDisorderRun::steps() const {
  return static_cast<std::int64_t>(std::floor(T * static_cast<double>(n) * (1.0 + 1e-12)));
}

std::int64_t IntermediateDisorderRun::lattice_start() const {
  const auto x = static_cast<std::int64_t>(std::floor(start * std::sqrt(static_cast<double>(n))));
  return x % 2 == 0 ? x : x - 1;
}

PathConstraint IntermediateDisorderRun::endpoint_constraint() const {
  if (!window) return unconstrained();
  const double s = std::sqrt(static_cast<double>(n));
  return endpoint_interval(static_cast<std::int64_t>(std::ceil(window->first * s)),
                           static_cast<std::int64_t>(std::floor(window->second * s)));
}

std::vector<double> intermediate_log_samples(const IntermediateDisorderRun& run, std::int64_t samples,
                                             std::uint64_t seed, int threads) {
  return parallel_map(static_cast<std::size_t>(samples), threads, [&](std::size_t i) {
    return intermediate_partition(run, EnvironmentField(derive_seed(seed, i), run.law));
  });
}

ContinuumConstantEstimate continuum_constant_estimate(std::int64_t n, std::span<const double> T_list,
                                                      std::int64_t samples, Law law, std::uint64_t seed,
                                                      int threads) {
  if (samples < 50) throw std::invalid_argument("continuum_constant_estimate: need at least 50 samples");
  std::vector<double> times(T_list.begin(), T_list.end());
  std::sort(times.begin(), times.end());
  ContinuumConstantEstimate est;
  est.n = n;
  est.law = law;
  est.samples = samples;
  for (const double T : times) {
    const IntermediateDisorderRun run{n, T, law, 0.0, std::nullopt};
    auto logs = intermediate_log_samples(run, samples, seed, threads);
    for (auto& v : logs) v /= T;
    const SampleSummary s = summarize(logs);
    est.points.push_back({T, run.steps(), s.mean, s.std_error});
  }
  return est;
}

void write_continuum_csv(std::ostream& out, const ContinuumConstantEstimate& e) {
  out << "n,T,law,samples,mean,stderr\n";
  for (const auto& p : e.points)
    out << e.n << ',' << format_real(p.T) << ',' << to_string(e.law) << ',' << e.samples << ','
        << format_real(p.mean) << ',' << format_real(p.std_error) << '\n';
}

KsResult universality_distribution_check(std::int64_t n, double T, Law law_a, Law law_b, std::int64_t samples,
                                         std::uint64_t seed_a, std::uint64_t seed_b, int threads) {
  auto a = intermediate_log_samples({n, T, law_a, 0.0, std::nullopt}, samples, seed_a, threads);
  auto b = intermediate_log_samples({n, T, law_b, 0.0, std::nullopt}, samples, seed_b, threads);
  return ks_two_sample(std::move(a), std::move(b));
}

InfimumFieldEstimate infimum_field_estimate(std::int64_t n, double T, double delta, double eps,
                                            std::int64_t samples, Law law, std::uint64_t seed, int threads) {
  if (samples < 2) throw std::invalid_argument("infimum_field_estimate: need at least 2 samples");
  const CGGeometry g{T, n, delta, std::numeric_limits<double>::infinity(), beta_from_n(n)};
  const auto starts = segment_points(g, 0, 0);
  if (starts.empty()) throw std::invalid_argument("infimum_field_estimate: B_0 has no admissible start");
  const SiteInterval target = segment_interval(g, 1);
  const PathConstraint c = endpoint_interval(target.lo, target.hi);

  InfimumFieldEstimate est;
  est.starts = starts.size();
  est.log_threshold = T * (kContinuumFreeEnergy - 0.5 * eps);
  est.log_inf = parallel_map(static_cast<std::size_t>(samples), threads, [&](std::size_t i) {
    const EnvironmentField env(derive_seed(seed, i), law);
    return backward_profile(env, g.beta, g.block(), c, starts.front(), starts.back()).min();
  });
  std::vector<double> hits;
  hits.reserve(est.log_inf.size());
  for (const double v : est.log_inf) hits.push_back(v >= est.log_threshold ? 1.0 : 0.0);
  const SampleSummary s = summarize(hits);
  est.exceedance = s.mean;
  est.std_error = s.std_error;
  return est;
}

}  // namespace dpre
