#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <concepts>
#include <cstdint>
#include <string>
#include <string_view>

#include "dpre/philox.hpp"

namespace dpre {

/// Normalized disorder laws: every kind has mean 0 and variance 1.
enum class Law { gaussian, rademacher, shifted_exponential, centered_uniform };

inline constexpr Law kAllLaws[] = {Law::gaussian, Law::rademacher, Law::shifted_exponential,
                                   Law::centered_uniform};

std::string_view to_string(Law law);
/// Parses the lowercase law name; throws std::invalid_argument on unknown names.
Law law_from_string(std::string_view name);

/// True when log E[exp(beta * eta)] is finite.
bool in_mgf_domain(Law law, double beta) noexcept;

/// lambda(beta) = log E[exp(beta * eta)].
///
///   gaussian             beta^2 / 2
///   rademacher           log cosh(beta)
///   shifted_exponential  -beta - log(1 - beta),  beta < 1
///   centered_uniform     log(sinh(sqrt3 beta) / (sqrt3 beta))
///
/// Throws std::domain_error outside the finiteness domain.
double log_mgf(Law law, double beta);

/// Maps one Philox output block to a sample of the law.
double sample_law(Law law, const Philox4x32::Counter& bits) noexcept;

/// A source of disorder values eta(n, x) with a known law.
template <class E>
concept Environment = requires(const E& e, std::int64_t n, std::int64_t x) {
  { e.eta(n, x) } -> std::convertible_to<double>;
  { e.law() } -> std::convertible_to<Law>;
};

/// The i.i.d. field eta(n, x), generated counter-style from (seed, n, x).
/// Values never depend on evaluation order, so restricted and unrestricted
/// computations on the same field see the same environment.
class EnvironmentField {
 public:
  EnvironmentField(std::uint64_t seed, Law law) noexcept : seed_(seed), law_(law) {}

  std::uint64_t seed() const noexcept { return seed_; }
  Law law() const noexcept { return law_; }

  double eta(std::int64_t n, std::int64_t x) const noexcept {
    const auto un = static_cast<std::uint64_t>(n);
    const auto ux = static_cast<std::uint64_t>(x);
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(un), static_cast<std::uint32_t>(un >> 32),
                                  static_cast<std::uint32_t>(ux), static_cast<std::uint32_t>(ux >> 32)};
    const Philox4x32::Key key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
    return sample_law(law_, Philox4x32::block(ctr, key));
  }

 private:
  std::uint64_t seed_;
  Law law_;
};

inline double eta(const EnvironmentField& field, std::int64_t n, std::int64_t x) noexcept {
  return field.eta(n, x);
}

/// zeta_{n,x} = exp(beta * eta(n, x) - lambda(beta)).
template <Environment E>
double zeta(const E& env, double beta, std::int64_t n, std::int64_t x) {
  return std::exp(beta * env.eta(n, x) - log_mgf(env.law(), beta));
}

/// Explicit values on the box [1, times] x [first_site, last_site]; zero
/// elsewhere. Used for hand-built environments and exhaustive enumeration.
class TableEnvironment {
 public:
  TableEnvironment(Law law, std::int64_t times, std::int64_t first_site, std::int64_t last_site)
      : law_(law), first_site_(first_site),
        values_(Eigen::MatrixXd::Zero(times, last_site - first_site + 1)) {}

  Law law() const noexcept { return law_; }
  std::int64_t times() const noexcept { return values_.rows(); }
  std::int64_t first_site() const noexcept { return first_site_; }
  std::int64_t last_site() const noexcept { return first_site_ + values_.cols() - 1; }

  bool contains(std::int64_t n, std::int64_t x) const noexcept {
    return n >= 1 && n <= times() && x >= first_site_ && x <= last_site();
  }
  double eta(std::int64_t n, std::int64_t x) const noexcept {
    return contains(n, x) ? values_(n - 1, x - first_site_) : 0.0;
  }
  void set(std::int64_t n, std::int64_t x, double value) { values_(n - 1, x - first_site_) = value; }

 private:
  Law law_;
  std::int64_t first_site_;
  Eigen::MatrixXd values_;
};

/// theta_shift: eta'(n, x) = eta(n + shift, x).
template <Environment E>
class ShiftedEnvironment {
 public:
  ShiftedEnvironment(const E& base, std::int64_t shift) noexcept : base_(&base), shift_(shift) {}
  Law law() const noexcept { return base_->law(); }
  double eta(std::int64_t n, std::int64_t x) const { return base_->eta(n + shift_, x); }

 private:
  const E* base_;
  std::int64_t shift_;
};

/// Deliberately impure field for negative-control runs: every read perturbs
/// the value by an amount depending on how many reads happened before.
class ImpureEnvironment {
 public:
  explicit ImpureEnvironment(EnvironmentField base) noexcept : base_(base) {}
  Law law() const noexcept { return base_.law(); }
  double eta(std::int64_t n, std::int64_t x) const noexcept {
    ++reads_;
    return base_.eta(n, x) + 0.25 * static_cast<double>(reads_ % 3);
  }

 private:
  EnvironmentField base_;
  mutable std::uint64_t reads_ = 0;
};

}  // namespace dpre
