#include "dpre/walk.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace dpre {

double srw_log_pmf(std::int64_t i, std::int64_t d) {
  if (i < 0 || std::abs(d) > i || (i + d) % 2 != 0) return -std::numeric_limits<double>::infinity();
  const long double k = static_cast<long double>((i + d) / 2);
  const long double n = static_cast<long double>(i);
  const long double lb = std::lgamma(n + 1.0L) - std::lgamma(k + 1.0L) - std::lgamma(n - k + 1.0L);
  return static_cast<double>(lb - n * std::numbers::ln2_v<long double>);
}

double srw_pmf(std::int64_t i, std::int64_t d) {
  const double lp = srw_log_pmf(i, d);
  return std::isfinite(lp) ? std::exp(lp) : 0.0;
}

Eigen::ArrayXd srw_pmf_row(std::int64_t i) {
  if (i < 0) throw std::invalid_argument("srw_pmf_row: negative step count");
  Eigen::ArrayXd row = Eigen::ArrayXd::Ones(1);
  for (std::int64_t k = 0; k < i; ++k) {
    Eigen::ArrayXd next = Eigen::ArrayXd::Zero(row.size() + 1);
    next.head(row.size()) += 0.5 * row;
    next.tail(row.size()) += 0.5 * row;
    row.swap(next);
  }
  return row;
}

EnvelopeReport llt_envelope_check(std::int64_t i_max) {
  if (i_max < 2) throw std::invalid_argument("llt_envelope_check: i_max must be at least 2");
  EnvelopeReport r;
  r.i_max = i_max;
  for (std::int64_t i = 2; i <= i_max; ++i) {
    // the binomial mode sits at d = 0 or d = +-1
    const double peak = srw_pmf(i, i % 2) * std::sqrt(static_cast<double>(i));
    if (peak > r.c) {
      r.c = peak;
      r.argmax_i = i;
    }
    if (i == i_max) r.plateau = peak;
  }
  r.below_one = r.c < 1.0;
  return r;
}

double exit_probability_exact(std::int64_t N, std::int64_t a, double max_cells) {
  if (N < 0) throw std::invalid_argument("exit_probability_exact: negative horizon");
  if (a <= 0) return 1.0;
  if (a > N) return 0.0;
  if (static_cast<double>(N) * static_cast<double>(2 * a + 1) > max_cells)
    throw CostRefusal("exit_probability_exact: N (2a+1) exceeds the DP cell budget");
  // alive mass on sites -(a-1)..(a-1), index l + a - 1
  const std::int64_t width = 2 * a - 1;
  std::vector<double> alive(static_cast<std::size_t>(width), 0.0), next(alive.size());
  alive[static_cast<std::size_t>(a - 1)] = 1.0;
  double exited = 0.0;
  for (std::int64_t step = 0; step < N; ++step) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::int64_t j = 0; j < width; ++j) {
      const double m = alive[static_cast<std::size_t>(j)];
      if (m == 0.0) continue;
      for (std::int64_t to : {j - 1, j + 1}) {
        if (to < 0 || to >= width)
          exited += 0.5 * m;
        else
          next[static_cast<std::size_t>(to)] += 0.5 * m;
      }
    }
    alive.swap(next);
  }
  return exited;
}

double exit_rate_estimate(double T, std::int64_t n, double L) {
  const auto N = static_cast<std::int64_t>(std::floor(T * static_cast<double>(n) + 1e-9));
  const auto a = static_cast<std::int64_t>(std::floor(L * T * std::sqrt(static_cast<double>(n)) + 1e-9));
  const double p = exit_probability_exact(N, a);
  return p > 0.0 ? -std::log(p) / T : std::numeric_limits<double>::infinity();
}

CoupledWalkPair reflection_couple(std::int64_t x, std::int64_t y, std::span<const int> steps) {
  if ((x - y) % 2 != 0) throw std::domain_error("reflection_couple: x and y must have the same parity");
  CoupledWalkPair pair;
  pair.start_x = x;
  pair.start_y = y;
  pair.s.reserve(steps.size() + 1);
  pair.s_tilde.reserve(steps.size() + 1);
  const std::int64_t mirror = x + y;  // twice the midpoint
  std::int64_t pos = x;
  for (std::size_t n = 0; n <= steps.size(); ++n) {
    if (n > 0) pos += steps[n - 1];
    if (!pair.meeting_time && 2 * pos == mirror) pair.meeting_time = static_cast<std::int64_t>(n);
    pair.s.push_back(pos);
    pair.s_tilde.push_back(pair.meeting_time ? pos : mirror - pos);
  }
  return pair;
}

CouplingMarginalReport coupling_marginal_exact(std::int64_t x, std::int64_t y, std::int64_t N) {
  if ((x - y) % 2 != 0) throw std::domain_error("coupling_marginal_exact: parity mismatch");
  if (N < 0 || N > 20) throw CostRefusal("coupling_marginal_exact: N must lie in [0, 20]");
  const std::uint64_t paths = std::uint64_t{1} << N;
  std::vector<std::uint32_t> hits(paths, 0);
  std::vector<int> steps(static_cast<std::size_t>(N));
  CouplingMarginalReport r;
  r.N = N;
  for (std::uint64_t mask = 0; mask < paths; ++mask) {
    for (std::int64_t j = 0; j < N; ++j) steps[j] = (mask >> j) & 1 ? 1 : -1;
    const CoupledWalkPair pair = reflection_couple(x, y, steps);
    std::uint64_t tilde_mask = 0;
    bool ok = pair.s_tilde.front() == y;
    for (std::int64_t j = 0; j < N; ++j) {
      const std::int64_t inc = pair.s_tilde[j + 1] - pair.s_tilde[j];
      ok = ok && (inc == 1 || inc == -1);
      if (inc == 1) tilde_mask |= std::uint64_t{1} << j;
      const bool before = !pair.meeting_time || j + 1 <= *pair.meeting_time;
      const std::int64_t expect = before ? x + y - pair.s[j + 1] : pair.s[j + 1];
      ok = ok && pair.s_tilde[j + 1] == expect;
    }
    r.pathwise_identity = r.pathwise_identity && ok;
    ++hits[tilde_mask];
    ++r.paths_enumerated;
  }
  const double unit = std::ldexp(1.0, -static_cast<int>(N));
  double tv = 0.0;
  for (std::uint32_t h : hits) tv += std::abs(static_cast<double>(h) * unit - unit);
  r.tv_distance = 0.5 * tv;
  return r;
}

ChiSquaredResult coupling_endpoint_chi_squared(std::int64_t x, std::int64_t y, std::int64_t N,
                                               std::int64_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> observed(static_cast<std::size_t>(N + 1), 0.0), expected(observed.size());
  for (std::int64_t s = 0; s < samples; ++s) {
    const auto pair = reflection_coupling_sample(x, y, N, rng);
    observed[static_cast<std::size_t>((pair.s_tilde.back() - y + N) / 2)] += 1.0;
  }
  for (std::int64_t j = 0; j <= N; ++j)
    expected[static_cast<std::size_t>(j)] = static_cast<double>(samples) * srw_pmf(N, 2 * j - N);
  return chi_squared_gof(observed, expected);
}

std::vector<double> meeting_time_tail_series(std::int64_t x, std::int64_t y, std::int64_t i_max) {
  if ((x - y) % 2 != 0) throw std::domain_error("meeting_time_tail: parity mismatch");
  if (i_max < 0) throw std::invalid_argument("meeting_time_tail: negative index");
  std::vector<double> tail(static_cast<std::size_t>(i_max + 1), 0.0);
  tail[0] = 1.0;
  if (x == y) return tail;
  // distance r = |S - midpoint| >= 1 while alive; index r - 1
  const std::int64_t d = std::abs(x - y) / 2;
  std::vector<double> alive(static_cast<std::size_t>(d + i_max + 1), 0.0), next(alive.size());
  alive[static_cast<std::size_t>(d - 1)] = 1.0;
  double mass = 1.0;
  for (std::int64_t i = 1; i <= i_max; ++i) {
    tail[static_cast<std::size_t>(i)] = mass;  // S_0..S_{i-1} all avoid the midpoint
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t j = 0; j + 1 < alive.size(); ++j) {
      const double m = alive[j];
      if (m == 0.0) continue;
      next[j + 1] += 0.5 * m;
      if (j > 0) next[j - 1] += 0.5 * m;
    }
    // only the step from distance 1 onto the midpoint removes mass
    mass = std::max(0.0, mass - 0.5 * alive[0]);
    alive.swap(next);
  }
  return tail;
}

double meeting_time_tail(std::int64_t x, std::int64_t y, std::int64_t i) {
  return meeting_time_tail_series(x, y, i).back();
}

double meeting_window_probability(std::int64_t x, std::int64_t y, std::int64_t i) {
  const std::int64_t d = std::abs(x - y) / 2;
  double sum = 0.0;
  for (std::int64_t s = -d + 1; s <= d; ++s) sum += srw_pmf(i, s);
  return sum;
}

MeetingIdentityReport meeting_time_identity(std::int64_t x, std::int64_t y, std::int64_t i_max) {
  const auto tail = meeting_time_tail_series(x, y, i_max + 1);
  MeetingIdentityReport r;
  for (std::int64_t i = 0; i <= i_max; ++i) {
    const double strict = tail[static_cast<std::size_t>(i + 1)];  // P(tau > i)
    r.max_abs_difference = std::max(r.max_abs_difference, std::abs(strict - meeting_window_probability(x, y, i)));
    if (i >= 1 && x != y)
      r.c4_hat = std::max(r.c4_hat, strict * std::sqrt(static_cast<double>(i)) / static_cast<double>(std::abs(x - y)));
    if (tail[static_cast<std::size_t>(i + 1)] > tail[static_cast<std::size_t>(i)] + 1e-15) r.nonincreasing = false;
  }
  return r;
}

double PiecewiseLinear::operator()(double t) const {
  if (t <= knots.front()) return values.front();
  if (t >= knots.back()) return values.back();
  const auto it = std::upper_bound(knots.begin(), knots.end(), t);
  const auto j = static_cast<std::size_t>(it - knots.begin()) - 1;
  const double w = (t - knots[j]) / (knots[j + 1] - knots[j]);
  return values[j] + w * (values[j + 1] - values[j]);
}

PiecewiseLinear random_piecewise_linear(std::mt19937_64& rng, int pieces, double amplitude) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  PiecewiseLinear f;
  f.knots.push_back(-1.0);
  std::vector<double> interior;
  for (int j = 1; j < pieces; ++j) interior.push_back(unit(rng));
  std::sort(interior.begin(), interior.end());
  for (double k : interior)
    if (k > f.knots.back() + 1e-9) f.knots.push_back(k);
  f.knots.push_back(1.0);
  for (std::size_t j = 0; j < f.knots.size(); ++j) f.values.push_back(amplitude * unit(rng));
  return f;
}

double grr_integral(const PiecewiseLinear& f, double p, double q) {
  using boost::math::quadrature::gauss_kronrod;
  constexpr unsigned kDepth = 10;
  constexpr double kTol = 1e-10;
  const auto& k = f.knots;
  const std::size_t pieces = k.size() - 1;
  const double r = p * (1.0 - q);  // |t - s|^r is the integrand on a single piece
  if (!(r > -1.0)) return std::numeric_limits<double>::infinity();

  double total = 0.0;
  for (std::size_t i = 0; i < pieces; ++i) {
    const double h = k[i + 1] - k[i];
    const double slope = (f.values[i + 1] - f.values[i]) / h;
    total += 2.0 * std::pow(std::abs(slope), p) * std::pow(h, r + 2.0) / ((r + 1.0) * (r + 2.0));
  }
  // Blocks s in piece i, t in piece j > i, counted twice by symmetry.
  for (std::size_t j = 1; j < pieces; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const auto inner = [&](double t) {
        const double ft = f(t);
        const auto g = [&](double s) {
          const double gap = t - s;
          return gap > 0.0 ? std::pow(std::abs(ft - f(s)), p) * std::pow(gap, -p * q) : 0.0;
        };
        return gauss_kronrod<double, 21>::integrate(g, k[i], k[i + 1], kDepth, kTol);
      };
      total += 2.0 * gauss_kronrod<double, 21>::integrate(inner, k[j], k[j + 1], kDepth, kTol);
    }
  }
  return total;
}

double grr_prefactor(double p, double q, double lambda) {
  return std::pow(2.0, 2.0 / p + q + 3.0) / (std::pow(lambda, 1.0 / p) * (q - 2.0 / p));
}

GrrReport grr_bound_check(std::span<const PiecewiseLinear> functions, const GrrOptions& o) {
  if (!(o.p >= 1.0 && o.q > 0.0 && o.p * o.q > 2.0))
    throw std::invalid_argument("grr_bound_check: requires p >= 1, q > 0, p q > 2");
  GrrReport r;
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double prefactor = grr_prefactor(o.p, o.q, o.lambda);
  const double exponent = o.q - 2.0 / o.p;
  for (const auto& f : functions) {
    ++r.functions;
    const double gamma = grr_integral(f, o.p, o.q);
    if (!std::isfinite(gamma)) {
      ++r.skipped;
      r.diagnostics.push_back("function " + std::to_string(r.functions - 1) + ": increment integral not finite");
      continue;
    }
    const double scale = prefactor * std::pow(gamma, 1.0 / o.p);
    for (int k = 0; k < o.pairs; ++k) {
      const double x = unit(rng), y = unit(rng);
      const double lhs = std::abs(f(x) - f(y));
      const double rhs = scale * std::pow(std::abs(x - y), exponent);
      ++r.pairs_checked;
      if (lhs > rhs * (1.0 + 1e-12)) ++r.violations;
      if (rhs > 0.0) r.worst_ratio = std::max(r.worst_ratio, lhs / rhs);
    }
  }
  return r;
}

}  // namespace dpre
