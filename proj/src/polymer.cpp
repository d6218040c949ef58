#include "dpre/polymer.hpp"

#include <memory>

#include "dpre/parallel.hpp"
#include "dpre/stats.hpp"

namespace dpre {

PathConstraint unconstrained() { return {}; }

PathConstraint time_band(std::int64_t first_time, std::int64_t last_time, double center,
                         double half_width) {
  const auto inside = [center, half_width](std::int64_t l) {
    return std::abs(static_cast<double>(l) - center) <= half_width;
  };
  SiteInterval band{1, 0};
  if (std::isfinite(half_width) && half_width >= 0.0) {
    auto lo = static_cast<std::int64_t>(std::ceil(center - half_width));
    auto hi = static_cast<std::int64_t>(std::floor(center + half_width));
    while (lo <= hi && !inside(lo)) ++lo;
    while (inside(lo - 1)) --lo;
    while (hi >= lo && !inside(hi)) --hi;
    while (inside(hi + 1)) ++hi;
    band = {lo, hi};
  } else if (half_width == std::numeric_limits<double>::infinity()) {
    band = SiteInterval{};
  }
  PathConstraint c;
  c.allowed = [=](std::int64_t k, std::int64_t l) {
    return k < first_time || k > last_time || (l >= band.lo && l <= band.hi);
  };
  c.window = [=](std::int64_t k) {
    return (k < first_time || k > last_time) ? SiteInterval{} : band;
  };
  return c;
}

PathConstraint endpoint_interval(std::int64_t lo, std::int64_t hi) {
  PathConstraint c;
  c.endpoint = [=](std::int64_t l) { return l >= lo && l <= hi; };
  return c;
}

PathConstraint site_path(std::vector<std::int64_t> sites) {
  auto path = std::make_shared<const std::vector<std::int64_t>>(std::move(sites));
  PathConstraint c;
  c.allowed = [path](std::int64_t k, std::int64_t l) {
    return k >= 0 && k < static_cast<std::int64_t>(path->size()) && (*path)[k] == l;
  };
  c.window = [path](std::int64_t k) {
    if (k < 0 || k >= static_cast<std::int64_t>(path->size())) return SiteInterval{1, 0};
    return SiteInterval{(*path)[k], (*path)[k]};
  };
  return c;
}

PathConstraint operator&(const PathConstraint& a, const PathConstraint& b) {
  PathConstraint c;
  if (a.allowed && b.allowed)
    c.allowed = [fa = a.allowed, fb = b.allowed](std::int64_t k, std::int64_t l) { return fa(k, l) && fb(k, l); };
  else
    c.allowed = a.allowed ? a.allowed : b.allowed;
  if (a.endpoint && b.endpoint)
    c.endpoint = [fa = a.endpoint, fb = b.endpoint](std::int64_t l) { return fa(l) && fb(l); };
  else
    c.endpoint = a.endpoint ? a.endpoint : b.endpoint;
  if (a.window && b.window)
    c.window = [wa = a.window, wb = b.window](std::int64_t k) {
      const SiteInterval x = wa(k), y = wb(k);
      return SiteInterval{std::max(x.lo, y.lo), std::min(x.hi, y.hi)};
    };
  else
    c.window = a.window ? a.window : b.window;
  return c;
}

std::vector<double> log_partition_samples(Law law, double beta, std::int64_t N, std::int64_t samples,
                                          std::uint64_t seed, int threads) {
  return parallel_map(static_cast<std::size_t>(samples), threads, [&](std::size_t i) {
    const EnvironmentField env(derive_seed(seed, i), law);
    return partition_function(env, beta, N);
  });
}

FreeEnergyEstimate free_energy_estimate(Law law, double beta, std::int64_t N, std::int64_t samples,
                                        std::uint64_t seed, int threads) {
  if (samples < 2) throw std::invalid_argument("free_energy_estimate: need at least 2 samples");
  if (N < 1) throw std::invalid_argument("free_energy_estimate: N must be positive");
  auto values = log_partition_samples(law, beta, N, samples, seed, threads);
  for (auto& v : values) v /= static_cast<double>(N);
  const SampleSummary s = summarize(values);
  return {beta, N, samples, s.mean, s.std_error};
}

SuperadditivityReport superadditivity_check(Law law, double beta, std::int64_t N, std::int64_t M,
                                            std::int64_t samples, std::uint64_t seed, int threads) {
  if (N < 1 || M < 1) throw std::invalid_argument("superadditivity_check: N and M must be positive");
  const auto estimate = [&](std::int64_t horizon, std::uint64_t tag) {
    const auto values = log_partition_samples(law, beta, horizon, samples, derive_seed(seed, tag), threads);
    return summarize(values);
  };
  const SampleSummary a = estimate(N, 1), b = estimate(M, 2), ab = estimate(N + M, 3);
  SuperadditivityReport r;
  r.N = N;
  r.M = M;
  r.mean_n = a.mean;
  r.se_n = a.std_error;
  r.mean_m = b.mean;
  r.se_m = b.std_error;
  r.mean_nm = ab.mean;
  r.se_nm = ab.std_error;
  r.margin = ab.mean - a.mean - b.mean;
  r.combined_se = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error + ab.std_error * ab.std_error);
  r.holds = r.margin >= -3.0 * r.combined_se;
  return r;
}

}  // namespace dpre
