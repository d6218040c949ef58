#include "dpre/environment.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dpre {

namespace {

// Uniform on (0, 1) from 64 bits, never 0 or 1.
double open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// log(|a|^-1 sinh|a|), accurate at both ends.
double log_sinhc(double a) {
  a = std::abs(a);
  if (a < 1e-4) return a * a / 6.0 - a * a * a * a / 180.0;
  if (a < 20.0) return std::log(std::sinh(a) / a);
  return a + std::log1p(-std::exp(-2.0 * a)) - std::numbers::ln2 - std::log(a);
}

}  // namespace

std::string_view to_string(Law law) {
  switch (law) {
    case Law::gaussian: return "gaussian";
    case Law::rademacher: return "rademacher";
    case Law::shifted_exponential: return "shifted_exponential";
    case Law::centered_uniform: return "centered_uniform";
  }
  return "unknown";
}

Law law_from_string(std::string_view name) {
  for (Law law : kAllLaws)
    if (to_string(law) == name) return law;
  throw std::invalid_argument("unknown disorder law: " + std::string(name));
}

bool in_mgf_domain(Law law, double beta) noexcept {
  if (!std::isfinite(beta)) return false;
  return law != Law::shifted_exponential || beta < 1.0;
}

double log_mgf(Law law, double beta) {
  if (!in_mgf_domain(law, beta))
    throw std::domain_error("log_mgf: beta=" + std::to_string(beta) + " outside the domain of " +
                            std::string(to_string(law)));
  switch (law) {
    case Law::gaussian:
      return 0.5 * beta * beta;
    case Law::rademacher: {
      const double b = std::abs(beta);
      return b + std::log1p(std::exp(-2.0 * b)) - std::numbers::ln2;
    }
    case Law::shifted_exponential:
      return -beta - std::log1p(-beta);
    case Law::centered_uniform:
      return log_sinhc(std::numbers::sqrt3 * beta);
  }
  return 0.0;
}

double sample_law(Law law, const Philox4x32::Counter& bits) noexcept {
  switch (law) {
    case Law::gaussian: {
      const double u1 = open_unit(bits[0], bits[1]);
      const double u2 = open_unit(bits[2], bits[3]);
      return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    case Law::rademacher:
      return (bits[0] >> 31) ? 1.0 : -1.0;
    case Law::shifted_exponential:
      return -std::log(open_unit(bits[0], bits[1])) - 1.0;
    case Law::centered_uniform:
      return std::numbers::sqrt3 * (2.0 * open_unit(bits[0], bits[1]) - 1.0);
  }
  return 0.0;
}

}  // namespace dpre
