#include "dpre/coarse_grain.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "dpre/csv.hpp"
#include "dpre/parallel.hpp"
#include "dpre/philox.hpp"
#include "dpre/stats.hpp"

namespace dpre {

namespace {

// Integer bounds of a real interval, rounded inward with a small slack so that
// endpoints which are integers up to rounding are kept.
SiteInterval inward(double lo, double hi) {
  const double slack = 1e-9 * std::max({1.0, std::abs(lo), std::abs(hi)});
  return {static_cast<std::int64_t>(std::ceil(lo - slack)), static_cast<std::int64_t>(std::floor(hi + slack))};
}

bool even(std::int64_t v) { return v % 2 == 0; }

}  // namespace

std::int64_t n_from_beta(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("n_from_beta: beta must be positive");
  return static_cast<std::int64_t>(std::floor(std::pow(beta, -4.0) * (1.0 + 1e-12)));
}

double beta_from_n(std::int64_t n) {
  if (n < 1) throw std::invalid_argument("beta_from_n: n must be positive");
  return std::pow(static_cast<double>(n), -0.25);
}

CGGeometry CGGeometry::from_beta(double beta, double T, double delta, double L) {
  CGGeometry g{T, 0, delta, L, beta};
  g.n = n_from_beta(beta);
  g.validate();
  return g;
}

void CGGeometry::validate() const {
  if (!(T >= 1.0) || !std::isfinite(T)) throw std::invalid_argument("CGGeometry: T must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("CGGeometry: delta must lie in (0, 1)");
  if (!(L > 2.0 * delta + 1.0)) throw std::invalid_argument("CGGeometry: L must exceed 2 delta + 1");
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("CGGeometry: beta must lie in (0, 1]");
  if (n != n_from_beta(beta)) throw std::invalid_argument("CGGeometry: n must equal floor(beta^-4)");
}

double CGGeometry::sqrt_n() const { return std::sqrt(static_cast<double>(n)); }

std::int64_t CGGeometry::block() const {
  const auto raw = static_cast<std::int64_t>(std::floor(T * static_cast<double>(n) * (1.0 + 1e-12)));
  return std::max<std::int64_t>(2, raw - raw % 2);
}

bool in_cg_lattice(const CGSite& s) noexcept {
  return s.I >= 0 && std::abs(s.X) <= s.I && even(s.I - std::abs(s.X));
}

bool is_cg_bond(const CGBond& b) noexcept {
  return in_cg_lattice({b.I, b.X}) && std::abs(b.X - b.Y) == 1;
}

SiteInterval segment_interval(const CGGeometry& g, std::int64_t j) {
  const double c = static_cast<double>(j) * g.delta * g.T;
  return inward((c - 1.0) * g.sqrt_n(), (c + 1.0) * g.sqrt_n());
}

std::vector<std::int64_t> segment_points(const CGGeometry& g, std::int64_t j, std::int64_t time_anchor) {
  const SiteInterval s = segment_interval(g, j);
  std::vector<std::int64_t> points;
  for (std::int64_t x = s.lo; x <= s.hi; ++x)
    if (even(x - time_anchor)) points.push_back(x);
  return points;
}

bool in_tube(const CGGeometry& g, const CGSite& site, std::int64_t k, std::int64_t l) {
  const std::int64_t B = g.block();
  if (!(k > site.I * B && k <= (site.I + 1) * B)) return false;
  return std::abs(static_cast<double>(l) - g.segment_center(site.X)) <= g.tube_half_width();
}

PathConstraint tube_constraint(const CGGeometry& g, std::int64_t X) {
  return time_band(1, g.block(), g.segment_center(X), g.tube_half_width());
}

PathConstraint bond_constraint(const CGGeometry& g, const CGBond& bond, const BondOptions& options) {
  PathConstraint c = options.restrict_tube ? tube_constraint(g, bond.X) : unconstrained();
  if (options.restrict_endpoint) {
    const SiteInterval target = segment_interval(g, bond.Y);
    c = c & endpoint_interval(target.lo, target.hi);
  }
  return c;
}

DensityEstimate good_density_estimate(Law law, const CGGeometry& g, double eps, std::int64_t samples,
                                      std::uint64_t seed, int threads) {
  if (samples < 2) throw std::invalid_argument("good_density_estimate: need at least 2 samples");
  const auto flags = parallel_map(static_cast<std::size_t>(samples), threads, [&](std::size_t i) {
    const EnvironmentField env(derive_seed(seed, i), law);
    return is_good(env, g, CGBond{0, 0, 1}, eps).good ? 1.0 : 0.0;
  });
  const SampleSummary s = summarize(flags);
  return {s.mean, s.std_error, samples};
}

PathConstraint chain_constraint(const CGGeometry& g, std::span<const std::int64_t> path) {
  const std::vector<std::int64_t> route(path.begin(), path.end());
  const std::int64_t B = g.block();
  const auto levels = static_cast<std::int64_t>(route.size()) - 1;
  std::vector<SiteInterval> landing;
  for (const std::int64_t X : route) landing.push_back(segment_interval(g, X));
  const double half = g.tube_half_width();

  PathConstraint c;
  c.allowed = [=](std::int64_t k, std::int64_t l) {
    if (k <= 0 || k > levels * B) return true;
    const std::int64_t J = (k - 1) / B;
    if (std::abs(static_cast<double>(l) - g.segment_center(route[J])) > half) return false;
    if (k % B == 0) {
      const SiteInterval& s = landing[k / B];
      return l >= s.lo && l <= s.hi;
    }
    return true;
  };
  c.window = [=](std::int64_t k) {
    if (k <= 0 || k > levels * B) return SiteInterval{};
    const std::int64_t J = (k - 1) / B;
    const double centre = g.segment_center(route[J]);
    SiteInterval w = inward(centre - half, centre + half);
    if (k % B == 0) {
      const SiteInterval& s = landing[k / B];
      w.lo = std::max(w.lo, s.lo);
      w.hi = std::min(w.hi, s.hi);
    }
    return w;
  };
  return c;
}

double lss_threshold(std::int64_t k) {
  if (k < 1) throw std::invalid_argument("lss_threshold: k must be >= 1");
  const double kd = static_cast<double>(k);
  return 1.0 - std::pow(kd / (kd + 1.0), kd) / (kd + 1.0);
}

// Level I holds sites X = -I, -I + 2, ..., I, each with a left (Y = X - 1)
// and a right (Y = X + 1) bond; level I starts at flat offset I (I + 1).
BondField::BondField(std::int64_t levels, bool open) : levels_(levels) {
  if (levels < 0) throw std::invalid_argument("BondField: negative level count");
  states_.assign(static_cast<std::size_t>(levels * (levels + 1)), open ? 1 : 0);
}

std::size_t BondField::index(const CGBond& b) const {
  if (!is_cg_bond(b) || b.I >= levels_) throw std::out_of_range("BondField: bond outside the field");
  return static_cast<std::size_t>(b.I * (b.I + 1) + (b.X + b.I) + (b.Y > b.X ? 1 : 0));
}

CGBond BondField::bond_at(std::size_t index) const {
  if (index >= states_.size()) throw std::out_of_range("BondField: index out of range");
  const auto flat = static_cast<std::int64_t>(index);
  std::int64_t I = 0;
  while ((I + 1) * (I + 2) <= flat) ++I;
  const std::int64_t r = flat - I * (I + 1);
  const std::int64_t X = -I + 2 * (r / 2);
  return {I, X, r % 2 == 1 ? X + 1 : X - 1};
}

std::optional<std::vector<std::int64_t>> oriented_percolation_survive(const BondField& field,
                                                                      std::int64_t horizon) {
  if (horizon < 0 || horizon > field.levels())
    throw std::invalid_argument("oriented_percolation_survive: horizon beyond the defined levels");
  // reach[I][(X + I) / 2]: (I, X) is joined to the origin by an open path.
  std::vector<std::vector<char>> reach(static_cast<std::size_t>(horizon + 1));
  reach[0] = {1};
  for (std::int64_t I = 0; I < horizon; ++I) {
    auto& next = reach[I + 1];
    next.assign(static_cast<std::size_t>(I + 2), 0);
    bool any = false;
    for (std::int64_t X = -I; X <= I; X += 2) {
      if (!reach[I][(X + I) / 2]) continue;
      for (const std::int64_t Y : {X - 1, X + 1}) {
        if (field.is_open({I, X, Y})) {
          next[(Y + I + 1) / 2] = 1;
          any = true;
        }
      }
    }
    if (!any) return std::nullopt;
  }

  // Walking back from the leftmost reached site at the horizon and always
  // taking the leftmost reached open predecessor gives the pointwise-leftmost
  // open path: any open path lies weakly to the right of it at every level.
  std::vector<std::int64_t> path(static_cast<std::size_t>(horizon + 1));
  std::int64_t X = -horizon;
  while (!reach[horizon][(X + horizon) / 2]) X += 2;
  path[horizon] = X;
  for (std::int64_t I = horizon - 1; I >= 0; --I) {
    std::int64_t chosen = std::numeric_limits<std::int64_t>::max();
    for (const std::int64_t P : {X - 1, X + 1}) {
      if (std::abs(P) > I || !reach[I][(P + I) / 2]) continue;
      if (field.is_open({I, P, X})) chosen = std::min(chosen, P);
    }
    X = chosen;
    path[I] = X;
  }
  return path;
}

BondField bernoulli_bond_field(std::int64_t levels, double p, std::uint64_t seed) {
  BondField field(levels);
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  for (std::size_t i = 0; i < field.bond_count(); ++i) {
    const auto out = Philox4x32::block({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32), 0, 0}, key);
    const std::uint64_t bits = (static_cast<std::uint64_t>(out[0]) << 32 | out[1]) >> 11;
    const double u = (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    field.set(field.bond_at(i), u < p);
  }
  return field;
}

namespace {

std::int64_t count_survivals(double p, std::int64_t horizon, std::int64_t trials, std::uint64_t seed,
                             int threads) {
  const auto hits = parallel_map(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
    const BondField field = bernoulli_bond_field(horizon, p, derive_seed(seed, t));
    return oriented_percolation_survive(field, horizon).has_value() ? 1 : 0;
  });
  std::int64_t total = 0;
  for (const int h : hits) total += h;
  return total;
}

}  // namespace

SurvivalEstimate bernoulli_survival(double p, std::int64_t horizon, std::int64_t trials, std::uint64_t seed,
                                    int threads) {
  if (trials < 1) throw std::invalid_argument("bernoulli_survival: need at least one trial");
  SurvivalEstimate e;
  e.p = p;
  e.horizon = horizon;
  e.trials = trials;
  e.survived = count_survivals(p, horizon, trials, seed, threads);
  e.frequency = static_cast<double>(e.survived) / static_cast<double>(trials);
  const Interval ci = wilson_interval(e.survived, trials);
  e.ci_lo = ci.lo;
  e.ci_hi = ci.hi;
  return e;
}

double bernoulli_half_survival_p(std::int64_t horizon, std::int64_t trials, std::uint64_t seed, int iterations,
                                 int threads) {
  double lo = 0.5, hi = 1.0;
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (2 * count_survivals(mid, horizon, trials, seed, threads) >= trials)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

void write_bond_csv(std::ostream& out, std::span<const BondRecord> records) {
  out << "I,X,Y,log_w_min,threshold,good\n";
  for (const auto& r : records)
    out << r.bond.I << ',' << r.bond.X << ',' << r.bond.Y << ',' << format_real(r.log_w_min) << ','
        << format_real(r.threshold) << ',' << (r.good ? 1 : 0) << '\n';
}

bool tubes_disjoint(const CGGeometry& g, const CGSite& a, const CGSite& b) {
  if (a.I != b.I) return true;
  const double h = g.tube_half_width();
  const SiteInterval ra = inward(g.segment_center(a.X) - h, g.segment_center(a.X) + h);
  const SiteInterval rb = inward(g.segment_center(b.X) - h, g.segment_center(b.X) + h);
  return ra.hi < rb.lo || rb.hi < ra.lo;
}

DependenceReport dependence_structure_check(Law law, const CGGeometry& g, double eps, std::int64_t samples,
                                            std::uint64_t seed, int threads) {
  if (samples < 2) throw std::invalid_argument("dependence_structure_check: need at least 2 samples");
  DependenceReport report;
  report.samples = samples;
  report.dependence_range = 2.0 * g.L / g.delta;

  // Smallest even separation beyond 2L/delta, placed at the first level wide
  // enough to hold both sites.
  auto gap = static_cast<std::int64_t>(std::floor(report.dependence_range)) + 1;
  if (gap % 2 != 0) ++gap;
  const std::int64_t level = gap / 2;

  struct PairPlan {
    const char* label;
    CGBond a, b;
    bool asserted;
  };
  const PairPlan plans[] = {
      {"different_level", {0, 0, 1}, {1, 1, 2}, true},
      {"far_same_level", {level, -level, -level + 1}, {level, level, level + 1}, true},
      {"adjacent_shared_tube", {1, -1, 0}, {1, 1, 2}, false},
  };

  for (const PairPlan& s : plans) {
    const auto pairs = parallel_map(static_cast<std::size_t>(samples), threads, [&](std::size_t i) {
      const EnvironmentField env(derive_seed(seed, i), law);
      return std::pair<double, double>{is_good(env, g, s.a, eps).good ? 1.0 : 0.0,
                                       is_good(env, g, s.b, eps).good ? 1.0 : 0.0};
    });
    std::vector<double> first, second;
    for (const auto& [u, v] : pairs) {
      first.push_back(u);
      second.push_back(v);
    }
    const double ma = summarize(first).mean, mb = summarize(second).mean;
    std::vector<double> products;
    for (const auto& [u, v] : pairs) products.push_back((u - ma) * (v - mb));
    const SampleSummary cov = summarize(products);

    PairCorrelation pc;
    pc.label = s.label;
    pc.first = s.a;
    pc.second = s.b;
    pc.tubes_disjoint = tubes_disjoint(g, {s.a.I, s.a.X}, {s.b.I, s.b.X});
    pc.asserted = s.asserted;
    pc.mean_first = ma;
    pc.mean_second = mb;
    pc.covariance = cov.mean;
    pc.std_error = cov.std_error;
    if (s.asserted) {
      pc.within_tolerance = std::abs(pc.covariance) <= 3.0 * pc.std_error;
      report.passed = report.passed && pc.tubes_disjoint && pc.within_tolerance;
    }
    report.pairs.push_back(pc);
  }
  return report;
}

}  // namespace dpre
