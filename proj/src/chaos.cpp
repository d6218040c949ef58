#include "dpre/chaos.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/binomial.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <stdexcept>

namespace dpre {

bool EventMask::contains(std::span<const std::int64_t> path) const {
  bool stays = region.admits_endpoint(path.back());
  for (std::size_t k = 0; stays && k < path.size(); ++k) stays = region.admits(static_cast<std::int64_t>(k), path[k]);
  return stays != complement;
}

EventMask tube_escape(std::int64_t duration, double half_width) {
  return EventMask::escaping(time_band(1, duration, 0.0, half_width));
}

std::vector<std::pair<std::int64_t, std::int64_t>> reachable_sites(std::int64_t N, std::int64_t x,
                                                                   std::int64_t y) {
  std::set<std::pair<std::int64_t, std::int64_t>> sites;
  for (std::int64_t k = 1; k <= N; ++k)
    for (const std::int64_t s : {x, y})
      for (std::int64_t l = s - k; l <= s + k; l += 2) sites.insert({k, l});
  return {sites.begin(), sites.end()};
}

namespace {

// Calls fn(table) once per sign assignment on the reachable sites; every
// assignment has probability 2^-m.
template <class Fn>
std::size_t for_each_sign_configuration(Law law, std::int64_t N, std::int64_t x, std::int64_t y, Fn&& fn) {
  if (law != Law::rademacher)
    throw std::domain_error("exact enumeration requires the rademacher law (finite sample space)");
  const auto sites = reachable_sites(N, x, y);
  if (sites.size() > kMaxDisorderSites) throw CostRefusal("exact enumeration: more than 24 disorder sites");
  const std::int64_t lo = std::min(x, y) - N, hi = std::max(x, y) + N;
  TableEnvironment table(law, std::max<std::int64_t>(N, 1), lo, hi);
  for (std::uint64_t cfg = 0; cfg < (std::uint64_t{1} << sites.size()); ++cfg) {
    for (std::size_t i = 0; i < sites.size(); ++i)
      table.set(sites[i].first, sites[i].second, ((cfg >> i) & 1U) ? 1.0 : -1.0);
    fn(static_cast<const TableEnvironment&>(table));
  }
  return sites.size();
}

// Kernel K^x(I, z) = P^x(S_{i_j} = z_j for all j, E), keyed by the time
// subset mask followed by the positions at those times.
std::map<std::vector<std::int64_t>, double> chaos_kernel(std::int64_t N, std::int64_t start, const EventMask& event) {
  std::map<std::vector<std::int64_t>, double> kernel;
  std::vector<std::int64_t> path(static_cast<std::size_t>(N + 1));
  const double weight = std::ldexp(1.0, static_cast<int>(-N));
  for (std::uint64_t steps = 0; steps < (std::uint64_t{1} << N); ++steps) {
    path[0] = start;
    for (std::int64_t k = 1; k <= N; ++k) path[k] = path[k - 1] + (((steps >> (k - 1)) & 1U) ? 1 : -1);
    if (!event.contains(path)) continue;
    for (std::uint64_t times = 0; times < (std::uint64_t{1} << N); ++times) {
      std::vector<std::int64_t> key{static_cast<std::int64_t>(times)};
      for (std::int64_t k = 1; k <= N; ++k)
        if ((times >> (k - 1)) & 1U) key.push_back(path[k]);
      kernel[key] += weight;
    }
  }
  return kernel;
}

double sigma_squared(Law law, double beta) {
  return std::expm1(log_mgf(law, 2.0 * beta) - 2.0 * log_mgf(law, beta));
}

double gaussian_even_moment(double beta, int p) {
  // Q[(zeta - 1)^p] = sum_j binom(p, j) (-1)^{p-j} Q[zeta^j], Q[zeta^j] = exp(beta^2 j (j - 1) / 2).
  double total = 0.0;
  for (int j = 0; j <= p; ++j) {
    const double term = boost::math::binomial_coefficient<double>(static_cast<unsigned>(p), static_cast<unsigned>(j)) *
                        std::exp(0.5 * beta * beta * j * (j - 1));
    total += ((p - j) % 2 == 0) ? term : -term;
  }
  return total;
}

double integrate(auto f, double a, double b) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}

double quadrature_moment(Law law, double beta, double p) {
  const double lambda = log_mgf(law, beta);
  const auto dev = [&](double eta) { return std::pow(std::abs(std::expm1(beta * eta - lambda)), p); };
  const double root = lambda / beta;  // zeta = 1 here
  switch (law) {
    case Law::gaussian: {
      const auto f = [&](double z) { return dev(z) * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); };
      return integrate(f, root - 40.0, root) + integrate(f, root, root + 40.0 + p * beta);
    }
    case Law::rademacher:
      return 0.5 * (dev(1.0) + dev(-1.0));
    case Law::shifted_exponential: {
      if (p * beta >= 1.0) return std::numeric_limits<double>::infinity();
      const auto f = [&](double eta) { return dev(eta) * std::exp(-(eta + 1.0)); };
      // log|expm1(a)| = a + log1p(-e^-a) keeps the far tail finite
      const auto tail = [&](double u) {
        const double a = beta * (root + u) - lambda;
        if (a < 1.0) return f(root + u);
        return std::exp(p * (a + std::log1p(-std::exp(-a))) - (root + u + 1.0));
      };
      boost::math::quadrature::exp_sinh<double> half_line;
      return integrate(f, -1.0, root) + half_line.integrate(tail, 1e-14);
    }
    case Law::centered_uniform: {
      const double a = std::sqrt(3.0);
      const auto f = [&](double eta) { return dev(eta) / (2.0 * a); };
      return integrate(f, -a, root) + integrate(f, root, a);
    }
  }
  throw std::invalid_argument("unknown law");
}

bool has_closed_form(Law law, double p) {
  if (law == Law::rademacher) return true;
  return law == Law::gaussian && p == std::round(p) && static_cast<long>(p) % 2 == 0;
}

}  // namespace

OrthogonalityReport orthogonality_exact(Law law, double beta, std::int64_t N, std::int64_t x, std::int64_t y,
                                        const EventMask& event) {
  if (N < 0 || N > kMaxChaosHorizon) throw CostRefusal("orthogonality_exact: horizon must lie in [0, 8]");
  OrthogonalityReport r;
  r.cross = Eigen::MatrixXd::Zero(N + 1, N + 1);
  r.mean_x = Eigen::VectorXd::Zero(N + 1);
  r.mean_y = Eigen::VectorXd::Zero(N + 1);
  std::uint64_t configs = 0;
  r.disorder_sites = for_each_sign_configuration(law, N, x, y, [&](const TableEnvironment& env) {
    const auto tx = chaos_expand(env, beta, N, x, event).components;
    const auto ty = chaos_expand(env, beta, N, y, event).components;
    r.cross += tx * ty.transpose();
    r.mean_x += tx;
    r.mean_y += ty;
    ++configs;
  });
  const double inv = 1.0 / static_cast<double>(configs);
  r.cross *= inv;
  r.mean_x *= inv;
  r.mean_y *= inv;
  for (Eigen::Index k = 0; k <= N; ++k) {
    for (Eigen::Index l = 0; l <= N; ++l)
      if (k != l) r.max_off_diagonal = std::max(r.max_off_diagonal, std::abs(r.cross(k, l)));
    if (k >= 1)
      r.max_mean_nonzero_degree =
          std::max({r.max_mean_nonzero_degree, std::abs(r.mean_x[k]), std::abs(r.mean_y[k])});
  }
  return r;
}

SecondMomentDecomposition second_moment_decompose(Law law, double beta, std::int64_t N, std::int64_t x,
                                                  std::int64_t y, const EventMask& event) {
  if (N < 0 || N > kMaxChaosHorizon) throw CostRefusal("second_moment_decompose: horizon must lie in [0, 8]");
  SecondMomentDecomposition d;
  d.sigma2 = sigma_squared(law, beta);
  d.chaos_difference = Eigen::VectorXd::Zero(N + 1);
  std::uint64_t configs = 0;
  d.disorder_sites = for_each_sign_configuration(law, N, x, y, [&](const TableEnvironment& env) {
    const double diff = event_partition(env, beta, N, x, event) - event_partition(env, beta, N, y, event);
    d.direct += diff * diff;
    const Eigen::VectorXd delta =
        chaos_expand(env, beta, N, x, event).components - chaos_expand(env, beta, N, y, event).components;
    d.chaos_difference += delta.cwiseAbs2();
    ++configs;
  });
  d.direct /= static_cast<double>(configs);
  d.chaos_difference /= static_cast<double>(configs);

  auto kx = chaos_kernel(N, x, event);
  const auto ky = chaos_kernel(N, y, event);
  for (const auto& [key, v] : ky) kx.try_emplace(key, 0.0);
  d.lambda = Eigen::VectorXd::Zero(N + 1);
  for (const auto& [key, vx] : kx) {
    const auto it = ky.find(key);
    const double diff = vx - (it == ky.end() ? 0.0 : it->second);
    d.lambda[static_cast<Eigen::Index>(key.size()) - 1] += diff * diff;
  }
  for (Eigen::Index k = 1; k <= N; ++k) d.lambda[k] *= std::pow(d.sigma2, static_cast<double>(k));
  return d;
}

double centered_weight_abs_moment(Law law, double beta, double p, MomentMethod method) {
  if (!(p >= 1.0)) throw std::invalid_argument("centered_weight_abs_moment: p must be >= 1");
  if (!in_mgf_domain(law, beta)) throw std::domain_error("centered_weight_abs_moment: beta outside the mgf domain");
  const bool closed = method == MomentMethod::closed_form ||
                      (method == MomentMethod::automatic && has_closed_form(law, p));
  if (!closed) return quadrature_moment(law, beta, p);
  if (!has_closed_form(law, p)) throw std::domain_error("centered_weight_abs_moment: no closed form for this law and p");
  if (law == Law::gaussian) return gaussian_even_moment(beta, static_cast<int>(p));
  const double lambda = log_mgf(law, beta);
  return 0.5 * (std::pow(std::abs(std::expm1(beta - lambda)), p) + std::pow(std::abs(std::expm1(-beta - lambda)), p));
}

double kappa_p(Law law, double beta, double p, MomentMethod method) {
  if (!(p >= 2.0)) throw std::invalid_argument("kappa_p: p must be >= 2");
  if (beta == 0.0) throw std::domain_error("kappa_p: beta = 0 makes zeta - 1 vanish, ratio 0/0 undefined");
  const double mp = centered_weight_abs_moment(law, beta, p, method);
  const double m2 = centered_weight_abs_moment(law, beta, 2.0, method);
  return 2.0 * std::sqrt(p - 1.0) * std::pow(mp, 1.0 / p) / std::sqrt(m2);
}

double kappa_p_scaling_sup(Law law, double p, std::int64_t n_max) {
  double sup = 0.0;
  for (std::int64_t n = 1; n <= n_max; ++n) {
    const double beta = std::pow(static_cast<double>(n), -0.25);
    if (!in_mgf_domain(law, 2.0 * beta)) return std::numeric_limits<double>::infinity();
    sup = std::max(sup, kappa_p(law, beta, p));
    if (std::isinf(sup)) return sup;
  }
  return sup;
}

MomentBoundReport moment_bound_check(Law law, double beta, std::int64_t N, std::int64_t x, std::int64_t y,
                                     double p, const EventMask& event) {
  MomentBoundReport r;
  r.p = p;
  const SecondMomentDecomposition d = second_moment_decompose(law, beta, N, x, y, event);
  std::uint64_t configs = 0;
  for_each_sign_configuration(law, N, x, y, [&](const TableEnvironment& env) {
    const double diff = event_partition(env, beta, N, x, event) - event_partition(env, beta, N, y, event);
    r.lhs += std::pow(std::abs(diff), p);
    ++configs;
  });
  r.lhs /= static_cast<double>(configs);
  r.kappa = beta == 0.0 ? std::numeric_limits<double>::quiet_NaN() : kappa_p(law, beta, p);
  double sum = std::sqrt(d.lambda[0]);
  for (Eigen::Index k = 1; k < d.lambda.size() && beta != 0.0; ++k)
    sum += std::pow(r.kappa, static_cast<double>(k)) * std::sqrt(d.lambda[k]);
  r.rhs = std::pow(sum, p);
  r.holds = r.lhs <= r.rhs * (1.0 + 1e-12) + 1e-300;
  return r;
}

}  // namespace dpre
