#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dpre/environment.hpp"
#include "dpre/polymer.hpp"

namespace dpre {

/// Continuum free energy of the stochastic heat equation at noise strength
/// sqrt(2); the good-bond threshold is pinned to it rather than estimated.
inline constexpr double kContinuumFreeEnergy = -1.0 / 6.0;

/// n = floor(beta^-4). A relative slack of 1e-12 absorbs rounding so that
/// beta = n^{-1/4} maps back to n.
std::int64_t n_from_beta(double beta);
/// beta = n^{-1/4}.
double beta_from_n(std::int64_t n);

/// Coarse-graining parameters: block time T (continuum units), lattice scale
/// n, segment spacing delta and tube half-width L (both in units of T sqrt(n)).
struct CGGeometry {
  double T = 1.0;
  std::int64_t n = 1;
  double delta = 0.5;
  double L = 3.0;
  double beta = 1.0;

  /// Geometry with n = floor(beta^-4); validates the parameter ranges.
  static CGGeometry from_beta(double beta, double T, double delta, double L);
  /// Throws std::invalid_argument unless T >= 1, 0 < delta < 1, L > 2 delta + 1,
  /// 0 < beta <= 1 and n = floor(beta^-4).
  void validate() const;

  double sqrt_n() const;
  /// Block length T n rounded down to an even integer (at least 2).
  std::int64_t block() const;
  double segment_center(std::int64_t j) const { return static_cast<double>(j) * delta * T * sqrt_n(); }
  double tube_half_width() const { return L * T * sqrt_n(); }
};

struct CGSite {
  std::int64_t I = 0;
  std::int64_t X = 0;
};

/// Oriented bond <(I, X), (I + 1, Y)>.
struct CGBond {
  std::int64_t I = 0;
  std::int64_t X = 0;
  std::int64_t Y = 1;
};

/// (I, X) with I >= 0, |X| <= I and I - |X| even.
bool in_cg_lattice(const CGSite& site) noexcept;
/// Source in the lattice and |X - Y| = 1.
bool is_cg_bond(const CGBond& bond) noexcept;

/// Integers in [(j delta T - 1) sqrt n, (j delta T + 1) sqrt n], no parity filter.
SiteInterval segment_interval(const CGGeometry& g, std::int64_t j);
/// Sorted points of the segment with x - time_anchor even. May be empty.
std::vector<std::int64_t> segment_points(const CGGeometry& g, std::int64_t j, std::int64_t time_anchor);

/// Raw tube membership: I B < k <= (I + 1) B and |l - X delta T sqrt n| <= L T sqrt n, B = block.
bool in_tube(const CGGeometry& g, const CGSite& site, std::int64_t k, std::int64_t l);

/// Tube of spatial index X over relative times 1..block, as a path constraint.
PathConstraint tube_constraint(const CGGeometry& g, std::int64_t X);

struct BondOptions {
  bool restrict_tube = true;
  bool restrict_endpoint = true;
};

/// Constraint of Omega_{(0, X, Y)} in block-relative time.
PathConstraint bond_constraint(const CGGeometry& g, const CGBond& bond, const BondOptions& options = {});

/// log theta_{I B} W^x_{beta, B}(Omega_{(0, X, Y)}) with B the block length.
/// Throws std::domain_error when start_x is not an admissible point of B_X.
template <Environment E>
double bond_partition(const E& env, const CGGeometry& g, const CGBond& bond, std::int64_t start_x,
                      const BondOptions& options = {}) {
  const auto points = segment_points(g, bond.X, bond.I * g.block());
  if (!std::binary_search(points.begin(), points.end(), start_x))
    throw std::domain_error("bond_partition: start outside the source segment");
  const ShiftedEnvironment<E> shifted(env, bond.I * g.block());
  return partition_function(shifted, g.beta, g.block(), start_x, bond_constraint(g, bond, options));
}

/// log W^x for every admissible start x of B_X in one backward sweep.
template <Environment E>
StartProfile bond_start_profile(const E& env, const CGGeometry& g, const CGBond& bond,
                                const BondOptions& options = {}) {
  const auto points = segment_points(g, bond.X, bond.I * g.block());
  if (points.empty()) return {};
  const ShiftedEnvironment<E> shifted(env, bond.I * g.block());
  return backward_profile(shifted, g.beta, g.block(), bond_constraint(g, bond, options), points.front(),
                          points.back());
}

struct GoodBondResult {
  double log_w_min = kNegInf;
  double threshold = 0.0;  // T (F_Z - eps)
  bool good = false;
  std::string diagnostic;  // set when the source segment is empty
};

inline double good_threshold(const CGGeometry& g, double eps) { return g.T * (kContinuumFreeEnergy - eps); }

/// eps-good: min over admissible x in B_X of the bond partition >= T (-1/6 - eps).
template <Environment E>
GoodBondResult is_good(const E& env, const CGGeometry& g, const CGBond& bond, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("is_good: eps must be positive");
  GoodBondResult r;
  r.threshold = good_threshold(g, eps);
  const StartProfile profile = bond_start_profile(env, g, bond);
  if (profile.log_values.empty()) {
    r.diagnostic = "empty source segment";
    return r;
  }
  r.log_w_min = profile.min();
  r.good = r.log_w_min >= r.threshold;
  return r;
}

struct DensityEstimate {
  double density = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
};

/// Q(U_{(0,0,1)} = 1) over independent environments derive_seed(seed, i).
DensityEstimate good_density_estimate(Law law, const CGGeometry& g, double eps, std::int64_t samples,
                                      std::uint64_t seed, int threads = 1);

/// Allowed region of the chained event: the walk from 0 stays in the tube of
/// (J, path[J]) during block J and sits in B_{path[J]} at every block boundary.
PathConstraint chain_constraint(const CGGeometry& g, std::span<const std::int64_t> path);

struct ChainFactorizationReport {
  double log_lhs = kNegInf;            // log W_{beta, I B}(chained event)
  double log_rhs = kNegInf;            // sum_J log min_x bond partition
  std::vector<double> bond_minima;     // one per block
  bool holds = false;
};

/// Checks W(chain) >= prod_J inf_x theta W^x(bond J) up to 1e-10 relative.
template <Environment E>
ChainFactorizationReport chain_factorization_check(const E& env, const CGGeometry& g,
                                                   std::span<const std::int64_t> path) {
  if (path.empty() || path.front() != 0) throw std::invalid_argument("chain path must start at X = 0");
  for (std::size_t j = 1; j < path.size(); ++j)
    if (std::abs(path[j] - path[j - 1]) != 1) throw std::invalid_argument("chain path must be nearest-neighbour");
  ChainFactorizationReport r;
  const auto levels = static_cast<std::int64_t>(path.size()) - 1;
  r.log_lhs = partition_function(env, g.beta, levels * g.block(), 0, chain_constraint(g, path));
  r.log_rhs = 0.0;
  for (std::int64_t J = 0; J < levels; ++J) {
    const double m = bond_start_profile(env, g, CGBond{J, path[J], path[J + 1]}).min();
    r.bond_minima.push_back(m);
    r.log_rhs += m;
  }
  r.holds = r.log_rhs == kNegInf || r.log_lhs >= r.log_rhs + std::log1p(-1e-10);
  return r;
}

/// 1 - k^k / (k + 1)^{k + 1}.
double lss_threshold(std::int64_t k);

/// Open/closed states of the bonds leaving levels 0..levels-1.
class BondField {
 public:
  explicit BondField(std::int64_t levels, bool open = false);

  std::int64_t levels() const noexcept { return levels_; }
  std::size_t bond_count() const noexcept { return states_.size(); }
  bool is_open(const CGBond& b) const { return states_[index(b)] != 0; }
  void set(const CGBond& b, bool open) { states_[index(b)] = open ? 1 : 0; }
  /// Bond with flat index in [0, bond_count()).
  CGBond bond_at(std::size_t index) const;

 private:
  std::size_t index(const CGBond& b) const;
  std::int64_t levels_;
  std::vector<unsigned char> states_;
};

/// Leftmost open oriented path (0, 0) -> level horizon, as X_0..X_horizon,
/// or nothing if the cluster of the origin dies before the horizon.
std::optional<std::vector<std::int64_t>> oriented_percolation_survive(const BondField& field,
                                                                      std::int64_t horizon);

/// Bond open iff U < p, with U uniform from Philox keyed by seed: fields for
/// different p on the same seed are monotonically coupled.
BondField bernoulli_bond_field(std::int64_t levels, double p, std::uint64_t seed);

struct SurvivalEstimate {
  double p = 0.0;
  std::int64_t horizon = 0;
  std::int64_t trials = 0;
  std::int64_t survived = 0;
  double frequency = 0.0;
  double ci_lo = 0.0, ci_hi = 1.0;  // Wilson 95%
};

SurvivalEstimate bernoulli_survival(double p, std::int64_t horizon, std::int64_t trials, std::uint64_t seed,
                                    int threads = 1);

/// Bisection on p for survival frequency 1/2 at the horizon, on coupled fields.
double bernoulli_half_survival_p(std::int64_t horizon, std::int64_t trials, std::uint64_t seed,
                                 int iterations = 20, int threads = 1);

struct BondRecord {
  CGBond bond;
  double log_w_min = kNegInf;
  double threshold = 0.0;
  bool good = false;
};

/// Evaluates every bond leaving levels 0..levels-1 on one environment.
template <Environment E>
std::pair<BondField, std::vector<BondRecord>> good_bond_field(const E& env, const CGGeometry& g, double eps,
                                                              std::int64_t levels) {
  BondField field(levels);
  std::vector<BondRecord> records;
  records.reserve(field.bond_count());
  for (std::size_t i = 0; i < field.bond_count(); ++i) {
    const CGBond b = field.bond_at(i);
    const GoodBondResult r = is_good(env, g, b, eps);
    field.set(b, r.good);
    records.push_back({b, r.log_w_min, r.threshold, r.good});
  }
  return {std::move(field), std::move(records)};
}

/// CSV with header I,X,Y,log_w_min,threshold,good.
void write_bond_csv(std::ostream& out, std::span<const BondRecord> records);

struct PairCorrelation {
  std::string label;
  CGBond first, second;
  bool tubes_disjoint = false;  // exact geometric check
  bool asserted = false;        // independence claimed for this pair
  double covariance = 0.0;
  double std_error = 0.0;
  double mean_first = 0.0, mean_second = 0.0;
  bool within_tolerance = true;  // |cov| <= 3 std_error (asserted pairs only)
};

struct DependenceReport {
  std::int64_t samples = 0;
  double dependence_range = 0.0;  // 2 L / delta
  std::vector<PairCorrelation> pairs;
  bool passed = true;
};

/// Geometric disjointness plus empirical covariance of good-bond indicators for
/// (a) bonds at different levels, (b) same level with |X - X'| > 2L/delta, and
/// (c) neighbouring bonds sharing a tube (reported only).
DependenceReport dependence_structure_check(Law law, const CGGeometry& g, double eps, std::int64_t samples,
                                            std::uint64_t seed, int threads = 1);

/// Tube space-time regions of two sites share no lattice point.
bool tubes_disjoint(const CGGeometry& g, const CGSite& a, const CGSite& b);

}  // namespace dpre
