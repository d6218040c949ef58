#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "dpre/environment.hpp"
#include "dpre/polymer.hpp"
#include "dpre/walk.hpp"

namespace dpre {

/// A set of walk paths described by a path constraint: the paths that stay in
/// its allowed region (and land in its endpoint set), or the complement.
struct EventMask {
  PathConstraint region;
  bool complement = false;

  static EventMask everything() { return {}; }
  static EventMask inside(PathConstraint c) { return {std::move(c), false}; }
  static EventMask escaping(PathConstraint c) { return {std::move(c), true}; }

  /// path[k] is the position at time k, k = 0..N.
  bool contains(std::span<const std::int64_t> path) const;
};

/// Escape from the tube {0 < k <= duration, |l| <= half_width} around the origin.
EventMask tube_escape(std::int64_t duration, double half_width);

inline constexpr std::int64_t kMaxChaosHorizon = 8;
inline constexpr std::size_t kMaxDisorderSites = 24;

/// W(E) = P_S[prod zeta : E], summed path by path (N <= 20).
template <Environment E>
double brute_force_partition(const E& env, double beta, std::int64_t N, std::int64_t start,
                             const EventMask& event) {
  if (N < 0 || N > 20) throw CostRefusal("brute_force_partition: horizon must lie in [0, 20]");
  const double lambda = log_mgf(env.law(), beta);
  std::vector<std::int64_t> path(static_cast<std::size_t>(N + 1));
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << N); ++mask) {
    path[0] = start;
    double w = 1.0;
    for (std::int64_t k = 1; k <= N; ++k) {
      path[k] = path[k - 1] + (((mask >> (k - 1)) & 1U) ? 1 : -1);
      w *= std::exp(beta * env.eta(k, path[k]) - lambda);
    }
    if (event.contains(path)) total += w;
  }
  return std::ldexp(total, static_cast<int>(-N));
}

/// W(E) by transfer matrix; an escape event is W minus the staying part.
template <Environment E>
double event_partition(const E& env, double beta, std::int64_t N, std::int64_t start, const EventMask& event) {
  const double stay = std::exp(partition_function(env, beta, N, start, event.region));
  if (!event.complement) return stay;
  return std::exp(partition_function(env, beta, N, start)) - stay;
}

/// Theta^(k) for k = 0..N on one environment.
struct ChaosDecomposition {
  std::int64_t N = 0;
  std::int64_t start = 0;
  Eigen::VectorXd components;

  double total() const { return components.sum(); }
};

/// Theta^(k) = sum over paths in E of 2^-N e_k(zeta(1, s_1) - 1, ..., zeta(N, s_N) - 1),
/// with e_k the elementary symmetric polynomial. Refuses N > 8.
template <Environment E>
ChaosDecomposition chaos_expand(const E& env, double beta, std::int64_t N, std::int64_t start,
                                const EventMask& event) {
  if (N < 0 || N > kMaxChaosHorizon) throw CostRefusal("chaos_expand: horizon must lie in [0, 8]");
  const double lambda = log_mgf(env.law(), beta);
  ChaosDecomposition d;
  d.N = N;
  d.start = start;
  d.components = Eigen::VectorXd::Zero(N + 1);
  std::vector<std::int64_t> path(static_cast<std::size_t>(N + 1));
  Eigen::VectorXd e(N + 1);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << N); ++mask) {
    path[0] = start;
    for (std::int64_t k = 1; k <= N; ++k) path[k] = path[k - 1] + (((mask >> (k - 1)) & 1U) ? 1 : -1);
    if (!event.contains(path)) continue;
    e.setZero();
    e[0] = 1.0;
    for (std::int64_t k = 1; k <= N; ++k) {
      const double c = std::expm1(beta * env.eta(k, path[k]) - lambda);
      for (std::int64_t j = k; j >= 1; --j) e[j] += c * e[j - 1];
    }
    d.components += e;
  }
  d.components = d.components.unaryExpr([N](double v) { return std::ldexp(v, static_cast<int>(-N)); });
  return d;
}

/// Space-time sites (k, l), 1 <= k <= N, reachable in k steps from x or y.
std::vector<std::pair<std::int64_t, std::int64_t>> reachable_sites(std::int64_t N, std::int64_t x,
                                                                   std::int64_t y);

struct OrthogonalityReport {
  Eigen::MatrixXd cross;  // Q[Theta^(k)(x) Theta^(l)(y)]
  Eigen::VectorXd mean_x;  // Q[Theta^(k)(x)]
  Eigen::VectorXd mean_y;
  double max_off_diagonal = 0.0;
  double max_mean_nonzero_degree = 0.0;  // max_{k >= 1} |Q[Theta^(k)]|
  std::size_t disorder_sites = 0;
};

/// Exact Q-expectations over all 2^m sign configurations. Refuses laws other
/// than rademacher (std::domain_error) and more than 24 sites (CostRefusal).
OrthogonalityReport orthogonality_exact(Law law, double beta, std::int64_t N, std::int64_t x, std::int64_t y,
                                        const EventMask& event);

struct SecondMomentDecomposition {
  Eigen::VectorXd lambda;            // Lambda^(k)(x, y), k = 0..N
  Eigen::VectorXd chaos_difference;  // Q[(Theta^(k)(x) - Theta^(k)(y))^2] by enumeration
  double direct = 0.0;               // Q[|W^x(E) - W^y(E)|^2] by enumeration
  double sigma2 = 0.0;               // Q[(zeta - 1)^2]
  std::size_t disorder_sites = 0;

  double total() const { return lambda.sum(); }
};

/// Lambda^(k) = sigma^{2k} sum over k-subsets of times and site tuples of the
/// squared kernel differences (P^x(S_I = z, E) - P^y(S_I = z, E))^2.
SecondMomentDecomposition second_moment_decompose(Law law, double beta, std::int64_t N, std::int64_t x,
                                                  std::int64_t y, const EventMask& event);

enum class MomentMethod { automatic, closed_form, quadrature };

/// Q[|zeta - 1|^p]. Closed forms: rademacher (any p), gaussian (even integer p).
/// Quadrature covers every law. +inf when the moment diverges
/// (shifted_exponential with p beta >= 1).
double centered_weight_abs_moment(Law law, double beta, double p, MomentMethod method = MomentMethod::automatic);

/// kappa_p = 2 sqrt(p - 1) Q[|zeta - 1|^p]^{1/p} / Q[|zeta - 1|^2]^{1/2} at fixed beta.
/// beta = 0 gives 0/0 and throws std::domain_error.
double kappa_p(Law law, double beta, double p, MomentMethod method = MomentMethod::automatic);

/// sup over n = 1..n_max of kappa_p at beta_n = n^{-1/4}; +inf if any term diverges.
double kappa_p_scaling_sup(Law law, double p, std::int64_t n_max = 10000);

struct MomentBoundReport {
  double p = 2.0;
  double lhs = 0.0;    // Q[|W^x(E) - W^y(E)|^p] by enumeration
  double rhs = 0.0;    // (sum_k kappa^k sqrt(Lambda^(k)))^p
  double kappa = 0.0;  // NaN when beta = 0 (only the k = 0 term survives)
  bool holds = false;
};

MomentBoundReport moment_bound_check(Law law, double beta, std::int64_t N, std::int64_t x, std::int64_t y,
                                     double p, const EventMask& event);

}  // namespace dpre
