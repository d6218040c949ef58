#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "dpre/environment.hpp"

namespace dpre {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Closed integer interval [lo, hi]; empty when lo > hi.
struct SiteInterval {
  std::int64_t lo = std::numeric_limits<std::int64_t>::min() / 4;
  std::int64_t hi = std::numeric_limits<std::int64_t>::max() / 4;
  bool empty() const noexcept { return lo > hi; }
};

/// Allowed space-time region for walk paths, plus an optional endpoint set
/// checked at the final time only. An empty predicate allows everything.
/// `window`, when set, must return an interval containing every allowed site
/// at time k; the engines clip storage to it.
struct PathConstraint {
  std::function<bool(std::int64_t k, std::int64_t l)> allowed;
  std::function<bool(std::int64_t l)> endpoint;
  std::function<SiteInterval(std::int64_t k)> window;

  bool admits(std::int64_t k, std::int64_t l) const { return !allowed || allowed(k, l); }
  bool admits_endpoint(std::int64_t l) const { return !endpoint || endpoint(l); }
  SiteInterval bounds(std::int64_t k) const { return window ? window(k) : SiteInterval{}; }
};

PathConstraint unconstrained();
/// { (k, l) : first_time <= k <= last_time implies |l - center| <= half_width }.
PathConstraint time_band(std::int64_t first_time, std::int64_t last_time, double center,
                         double half_width);
/// Endpoint restricted to [lo, hi].
PathConstraint endpoint_interval(std::int64_t lo, std::int64_t hi);
/// Exactly one allowed site per time: sites[k] at time k.
PathConstraint site_path(std::vector<std::int64_t> sites);
/// Both constraints at once.
PathConstraint operator&(const PathConstraint& a, const PathConstraint& b);

/// One time slice of Z(n, .) in log-scaled form: the value at
/// first_site + 2 i is mantissa[i] * 2^scale_exponent. Only sites of the
/// reachable parity are stored. An empty mantissa means the slice vanishes
/// identically (flagged empty, log value -inf).
template <class Scalar = double>
struct PartitionSlice {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  std::int64_t time = 0;
  std::int64_t first_site = 0;
  Array mantissa;
  std::int64_t scale_exponent = 0;

  static PartitionSlice point(std::int64_t x) {
    PartitionSlice s;
    s.first_site = x;
    s.mantissa = Array::Ones(1);
    return s;
  }

  bool empty() const noexcept { return mantissa.size() == 0; }
  Eigen::Index size() const noexcept { return mantissa.size(); }
  std::int64_t site(Eigen::Index i) const noexcept { return first_site + 2 * i; }
  std::int64_t last_site() const noexcept { return first_site + 2 * (mantissa.size() - 1); }
  double log_offset() const noexcept { return static_cast<double>(scale_exponent) * std::numbers::ln2; }

  /// Log of the represented value at x; -inf off the stored support.
  double log_value(std::int64_t x) const {
    if (empty() || x < first_site || x > last_site() || (x - first_site) % 2 != 0) return kNegInf;
    const Scalar m = mantissa[(x - first_site) / 2];
    return m > Scalar(0) ? static_cast<double>(std::log(m)) + log_offset() : kNegInf;
  }

  double log_total() const {
    if (empty()) return kNegInf;
    const Scalar total = mantissa.sum();
    return total > Scalar(0) ? static_cast<double>(std::log(total)) + log_offset() : kNegInf;
  }

  /// Rescales by a power of two so the largest mantissa lies in [1/2, 1).
  /// Represented values are unchanged bit for bit.
  void renormalize() {
    if (empty()) return;
    const Scalar peak = mantissa.maxCoeff();
    if (!(peak > Scalar(0))) return;
    int e = 0;
    std::frexp(peak, &e);
    for (auto& m : mantissa) m = std::ldexp(m, -e);
    scale_exponent += e;
  }

  void renormalize_if_needed() {
    if (empty()) return;
    const Scalar peak = mantissa.maxCoeff();
    if (peak > Scalar(0x1.0p16) || peak < Scalar(0x1.0p-16)) renormalize();
  }

  /// Drops exact zeros at both ends; clears entirely if nothing survives.
  void trim() {
    Eigen::Index a = 0, b = mantissa.size();
    while (a < b && mantissa[a] == Scalar(0)) ++a;
    while (b > a && mantissa[b - 1] == Scalar(0)) --b;
    if (a == 0 && b == mantissa.size()) return;
    Array kept = mantissa.segment(a, b - a);
    first_site += 2 * a;
    mantissa.swap(kept);
  }
};

using Slice = PartitionSlice<double>;

namespace detail {

inline std::int64_t ceil_to_parity(std::int64_t v, std::int64_t parity_ref) {
  return ((v - parity_ref) % 2 == 0) ? v : v + 1;
}
inline std::int64_t floor_to_parity(std::int64_t v, std::int64_t parity_ref) {
  return ((v - parity_ref) % 2 == 0) ? v : v - 1;
}

// Z(t+1, x) = 1/2 (Z(t, x-1) + Z(t, x+1)) * zeta_{t+1, x}, masked after the step.
template <Environment E, class Scalar>
PartitionSlice<Scalar> advance(const PartitionSlice<Scalar>& in, const E& env, double beta,
                               double lambda, const PathConstraint& c) {
  PartitionSlice<Scalar> out;
  out.time = in.time + 1;
  out.scale_exponent = in.scale_exponent;
  if (in.empty()) return out;

  const std::int64_t ref = in.first_site - 1;
  const SiteInterval b = c.bounds(out.time);
  const std::int64_t lo = std::max(in.first_site - 1, ceil_to_parity(b.lo, ref));
  const std::int64_t hi = std::min(in.last_site() + 1, floor_to_parity(b.hi, ref));
  if (lo > hi) return out;

  const Eigen::Index m = (hi - lo) / 2 + 1;
  out.first_site = lo;
  out.mantissa.resize(m);
  const Eigen::Index n_in = in.mantissa.size();
  const bool masked = static_cast<bool>(c.allowed);
  for (Eigen::Index i = 0; i < m; ++i) {
    const std::int64_t x = lo + 2 * i;
    const std::int64_t jl = (x - 1 - in.first_site) / 2;  // exact: same parity
    const Scalar left = (x - 1 >= in.first_site && jl < n_in) ? in.mantissa[jl] : Scalar(0);
    const Scalar right = (x + 1 >= in.first_site && jl + 1 < n_in) ? in.mantissa[jl + 1] : Scalar(0);
    Scalar v = Scalar(0.5) * (left + right);
    if (v != Scalar(0)) {
      if (masked && !c.allowed(out.time, x))
        v = Scalar(0);
      else if (beta != 0.0)
        v *= static_cast<Scalar>(std::exp(beta * env.eta(out.time, x) - lambda));
    }
    out.mantissa[i] = v;
  }
  out.trim();
  out.renormalize_if_needed();
  return out;
}

}  // namespace detail

/// One transfer step. The allowed-site mask of `constraint` is applied at the
/// new time; its endpoint set is not (see final_slice). A slice annihilated by
/// the mask comes back flagged empty.
template <Environment E, class Scalar>
PartitionSlice<Scalar> evolve_slice(const PartitionSlice<Scalar>& slice, const E& env, double beta,
                                    const PathConstraint& constraint = {}) {
  return detail::advance(slice, env, beta, log_mgf(env.law(), beta), constraint);
}

/// Z(N, .) for the walk started at start_x, including the endpoint mask.
template <class Scalar = double, Environment E>
PartitionSlice<Scalar> final_slice(const E& env, double beta, std::int64_t N, std::int64_t start_x,
                                   const PathConstraint& constraint = {}) {
  if (N < 0) throw std::invalid_argument("final_slice: negative horizon");
  const double lambda = log_mgf(env.law(), beta);
  auto slice = PartitionSlice<Scalar>::point(start_x);
  if (!constraint.admits(0, start_x)) slice.mantissa.resize(0);
  for (std::int64_t k = 0; k < N && !slice.empty(); ++k)
    slice = detail::advance(slice, env, beta, lambda, constraint);
  slice.time = N;
  if (constraint.endpoint && !slice.empty()) {
    for (Eigen::Index i = 0; i < slice.size(); ++i)
      if (!constraint.endpoint(slice.site(i))) slice.mantissa[i] = Scalar(0);
    slice.trim();
    slice.renormalize_if_needed();
  }
  return slice;
}

/// log W_{beta,N}(A) for the walk from start_x; -inf when the constraint
/// annihilates every path.
template <Environment E>
double partition_function(const E& env, double beta, std::int64_t N, std::int64_t start_x = 0,
                          const PathConstraint& constraint = {}) {
  return final_slice(env, beta, N, start_x, constraint).log_total();
}

/// log of the point-to-point value W_{beta,N}(S_N = end_y) from start_x.
template <Environment E>
double point_to_point(const E& env, double beta, std::int64_t N, std::int64_t start_x,
                      std::int64_t end_y) {
  const std::int64_t d = end_y - start_x;
  if (N < 0 || std::abs(d) > N || (N + d) % 2 != 0)
    throw std::domain_error("point_to_point: endpoint unreachable in N steps (parity or range)");
  return final_slice(env, beta, N, start_x).log_value(end_y);
}

/// log W^x for every start x in [lo, hi] with x = lo (mod 2), from a single
/// backward sweep. Entry i belongs to the start lo + 2 i.
struct StartProfile {
  std::int64_t first_site = 0;
  std::vector<double> log_values;

  std::int64_t site(std::size_t i) const noexcept { return first_site + 2 * static_cast<std::int64_t>(i); }
  double min() const {
    return log_values.empty() ? kNegInf : *std::min_element(log_values.begin(), log_values.end());
  }
};

template <Environment E>
StartProfile backward_profile(const E& env, double beta, std::int64_t N, const PathConstraint& c,
                              std::int64_t lo, std::int64_t hi) {
  if (N < 0) throw std::invalid_argument("backward_profile: negative horizon");
  hi = detail::floor_to_parity(hi, lo);
  StartProfile profile;
  profile.first_site = lo;
  if (lo > hi) return profile;
  const double lambda = log_mgf(env.law(), beta);
  const auto weight = [&](std::int64_t k, std::int64_t l) {
    return beta == 0.0 ? 1.0 : std::exp(beta * env.eta(k, l) - lambda);
  };

  // cur holds U_k(l) = zeta(k,l) 1_A(k,l) V_k(l) on sites first + 2 i.
  Slice cur;
  cur.time = N;
  {
    const SiteInterval b = c.bounds(N);
    const std::int64_t a = std::max(lo - N, detail::ceil_to_parity(b.lo, lo + N));
    const std::int64_t z = std::min(hi + N, detail::floor_to_parity(b.hi, lo + N));
    if (a <= z) {
      cur.first_site = a;
      cur.mantissa.resize((z - a) / 2 + 1);
      for (Eigen::Index i = 0; i < cur.size(); ++i) {
        const std::int64_t y = cur.site(i);
        const bool ok = c.admits(N, y) && c.admits_endpoint(y);
        cur.mantissa[i] = ok ? (N > 0 ? weight(N, y) : 1.0) : 0.0;
      }
    }
    cur.trim();
    cur.renormalize_if_needed();
  }

  for (std::int64_t k = N; k >= 1 && !cur.empty(); --k) {
    const std::int64_t t = k - 1;
    const SiteInterval b = t > 0 ? c.bounds(t) : SiteInterval{lo, hi};
    const std::int64_t a = std::max({lo - t, cur.first_site - 1, detail::ceil_to_parity(b.lo, lo + t)});
    const std::int64_t z = std::min({hi + t, cur.last_site() + 1, detail::floor_to_parity(b.hi, lo + t)});
    Slice next;
    next.time = t;
    next.scale_exponent = cur.scale_exponent;
    if (a <= z) {
      next.first_site = a;
      next.mantissa.resize((z - a) / 2 + 1);
      for (Eigen::Index i = 0; i < next.size(); ++i) {
        const std::int64_t l = next.site(i);
        const std::int64_t jl = (l - 1 - cur.first_site) / 2;
        const double left = (l - 1 >= cur.first_site && jl < cur.size()) ? cur.mantissa[jl] : 0.0;
        const double right = (l + 1 >= cur.first_site && jl + 1 < cur.size()) ? cur.mantissa[jl + 1] : 0.0;
        double v = 0.5 * (left + right);
        if (v != 0.0 && !c.admits(t, l)) v = 0.0;
        if (v != 0.0 && t > 0) v *= weight(t, l);
        next.mantissa[i] = v;
      }
      next.trim();
      next.renormalize_if_needed();
    }
    cur = std::move(next);
  }

  profile.log_values.assign(static_cast<std::size_t>((hi - lo) / 2 + 1), kNegInf);
  if (N == 0 || !cur.empty()) {
    for (std::size_t i = 0; i < profile.log_values.size(); ++i)
      profile.log_values[i] = cur.log_value(profile.site(i));
  }
  return profile;
}

struct FreeEnergyEstimate {
  double beta = 0.0;
  std::int64_t N = 0;
  std::int64_t samples = 0;
  double mean = 0.0;       // sample mean of (1/N) log W_{beta,N}
  double std_error = 0.0;
};

/// Sample i uses EnvironmentField(derive_seed(seed, i), law).
FreeEnergyEstimate free_energy_estimate(Law law, double beta, std::int64_t N, std::int64_t samples,
                                        std::uint64_t seed, int threads = 1);

/// Per-sample log W_{beta,N} (not divided by N), in sample order.
std::vector<double> log_partition_samples(Law law, double beta, std::int64_t N, std::int64_t samples,
                                          std::uint64_t seed, int threads = 1);

struct SuperadditivityReport {
  std::int64_t N = 0, M = 0;
  double mean_n = 0, se_n = 0;    // Q[log W_N]
  double mean_m = 0, se_m = 0;    // Q[log W_M]
  double mean_nm = 0, se_nm = 0;  // Q[log W_{N+M}]
  double margin = 0;              // mean_nm - mean_n - mean_m
  double combined_se = 0;
  bool holds = false;             // margin >= -3 combined_se
};

/// The three expectations are estimated on independent sample streams with
/// masters derive_seed(seed, 1), derive_seed(seed, 2), derive_seed(seed, 3).
SuperadditivityReport superadditivity_check(Law law, double beta, std::int64_t N, std::int64_t M,
                                            std::int64_t samples, std::uint64_t seed, int threads = 1);

}  // namespace dpre
