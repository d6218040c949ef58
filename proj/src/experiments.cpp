#include "dpre/experiments.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "dpre/chaos.hpp"
#include "dpre/coarse_grain.hpp"
#include "dpre/continuum.hpp"
#include "dpre/csv.hpp"
#include "dpre/polymer.hpp"
#include "dpre/walk.hpp"

namespace dpre {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const json kEmpty = json::object();

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

std::ofstream open_output(const ExperimentConfig& config, const fs::path& name) {
  fs::create_directories(config.out);
  std::ofstream out(config.out / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (config.out / name).string());
  return out;
}

void write_json(const ExperimentConfig& config, const fs::path& name, const json& doc) {
  auto out = open_output(config, name);
  out << doc.dump(2) << '\n';
}

// Slice-cell updates of one unconstrained transfer-matrix run of N steps.
double transfer_cells(double N) { return 0.5 * N * (N + 2.0); }

void guard_cost(const ExperimentConfig& config, double estimate, const std::string& what) {
  if (estimate > config.cost_ceiling) {
    std::ostringstream msg;
    msg << what << ": estimated " << std::setprecision(3) << estimate << " slice-cell updates exceeds the ceiling "
        << config.cost_ceiling;
    throw ConfigError(msg.str());
  }
}

double bond_cost(const CGGeometry& g) {
  const double width = std::min(2.0 * static_cast<double>(g.block()) + 1.0, 2.0 * g.tube_half_width() + 1.0);
  return static_cast<double>(g.block()) * width;
}

}  // namespace

const json& ExperimentConfig::section(const std::string& name) const {
  const auto it = settings.find(name);
  return it != settings.end() && it->is_object() ? *it : kEmpty;
}

ExperimentConfig load_config(const fs::path& path, const ConfigOverrides& overrides) {
  ExperimentConfig c;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    try {
      c.settings = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    require(c.settings.is_object(), "config root must be a JSON object");
  }
  if (overrides.seed) c.settings["seed"] = *overrides.seed;
  if (overrides.threads) c.settings["threads"] = *overrides.threads;
  if (overrides.out) c.settings["out"] = overrides.out->string();

  try {
    c.law = law_from_string(get_or<std::string>(c.settings, "law", "gaussian"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.seed = get_or<std::uint64_t>(c.settings, "seed", 1);
  c.threads = get_or<int>(c.settings, "threads", 1);
  c.cost_ceiling = get_or<double>(c.settings, "cost_ceiling", 1e10);
  c.out = get_or<std::string>(c.settings, "out", "out");
  require(c.threads >= 1, "threads must be >= 1");
  require(c.cost_ceiling > 0, "cost_ceiling must be positive");
  return c;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

std::string config_hash(const ExperimentConfig& config) {
  json canonical = config.settings;
  canonical.erase("threads");
  canonical.erase("out");
  return sha256_hex(canonical.dump());
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunOutcome run_beta4_scan(const ExperimentConfig& config) {
  const json& s = config.section("beta4_scan");
  const auto betas = get_or<std::vector<double>>(s, "betas", {0.7, 0.55, 0.4});
  const double n_factor = get_or<double>(s, "n_factor", 50.0);
  const auto samples = get_or<std::int64_t>(s, "samples", 200);
  require(!betas.empty(), "beta4_scan.betas must not be empty");
  require(samples >= 2, "beta4_scan.samples must be >= 2");
  require(n_factor > 0, "beta4_scan.n_factor must be positive");
  std::vector<std::int64_t> horizons;
  double cost = 0.0;
  for (const double b : betas) {
    require(b > 0.0 && b <= 0.7, "beta4_scan.betas must lie in (0, 0.7]");
    horizons.push_back(std::max<std::int64_t>(1, std::llround(n_factor * std::pow(b, -4.0))));
    cost += static_cast<double>(samples) * transfer_cells(static_cast<double>(horizons.back()));
  }
  guard_cost(config, cost, "beta4-scan");

  auto out = open_output(config, "beta4_scan.csv");
  out << "beta,N,mean,stderr,ratio\n";
  for (std::size_t i = 0; i < betas.size(); ++i) {
    const FreeEnergyEstimate f =
        free_energy_estimate(config.law, betas[i], horizons[i], samples, derive_seed(config.seed, i), config.threads);
    out << format_real(betas[i]) << ',' << horizons[i] << ',' << format_real(f.mean) << ','
        << format_real(f.std_error) << ',' << format_real(f.mean / std::pow(betas[i], 4.0)) << '\n';
  }
  return {0, {"beta4_scan.csv"}, "beta4 scan over " + std::to_string(betas.size()) + " cells"};
}

RunOutcome run_good_bond_surface(const ExperimentConfig& config) {
  const json& s = config.section("good_bonds");
  const auto betas = get_or<std::vector<double>>(s, "betas", {0.7, 0.5, 0.3});
  const auto Ts = get_or<std::vector<double>>(s, "T", {2.0, 4.0});
  const auto epss = get_or<std::vector<double>>(s, "eps", {0.5});
  const double delta = get_or<double>(s, "delta", 0.2);
  const double L = get_or<double>(s, "L", 4.0);
  const auto samples = get_or<std::int64_t>(s, "samples", 200);
  require(samples >= 2, "good_bonds.samples must be >= 2");

  std::vector<CGGeometry> geoms;
  double cost = 0.0;
  try {
    for (const double b : betas)
      for (const double T : Ts) {
        geoms.push_back(CGGeometry::from_beta(b, T, delta, L));
        cost += static_cast<double>(samples * static_cast<std::int64_t>(epss.size())) * bond_cost(geoms.back());
      }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("good_bonds: ") + e.what());
  }
  for (const double e : epss) require(e > 0, "good_bonds.eps entries must be positive");

  const json& dep = s.contains("dependence") ? s.at("dependence") : kEmpty;
  const double dep_beta = get_or<double>(dep, "beta", betas.front());
  const double dep_T = get_or<double>(dep, "T", Ts.front());
  const double dep_eps = get_or<double>(dep, "eps", epss.front());
  const auto dep_samples = get_or<std::int64_t>(dep, "samples", samples);
  const CGGeometry dep_geom = CGGeometry::from_beta(dep_beta, dep_T, delta, L);
  cost += 6.0 * static_cast<double>(dep_samples) * bond_cost(dep_geom);
  guard_cost(config, cost, "good-bonds");

  auto out = open_output(config, "good_bonds.csv");
  out << "beta,T,eps,density,stderr\n";
  const auto k = static_cast<std::int64_t>(std::ceil(4.0 * L / delta));
  const double lss = lss_threshold(k);
  json cells = json::array();
  std::size_t cell = 0;
  for (const CGGeometry& g : geoms) {
    for (const double eps : epss) {
      const DensityEstimate d =
          good_density_estimate(config.law, g, eps, samples, derive_seed(config.seed, cell++), config.threads);
      out << format_real(g.beta) << ',' << format_real(g.T) << ',' << format_real(eps) << ','
          << format_real(d.density) << ',' << format_real(d.std_error) << '\n';
      if (d.density > lss) cells.push_back({{"beta", g.beta}, {"T", g.T}, {"eps", eps}, {"density", d.density}});
    }
  }

  const DependenceReport r = dependence_structure_check(config.law, dep_geom, dep_eps, dep_samples,
                                                        derive_seed(config.seed, 1u << 20), config.threads);
  json pairs = json::array();
  for (const auto& p : r.pairs)
    pairs.push_back({{"label", p.label},
                     {"first", {p.first.I, p.first.X, p.first.Y}},
                     {"second", {p.second.I, p.second.X, p.second.Y}},
                     {"tubes_disjoint", p.tubes_disjoint},
                     {"asserted", p.asserted},
                     {"covariance", p.covariance},
                     {"stderr", p.std_error},
                     {"mean_first", p.mean_first},
                     {"mean_second", p.mean_second},
                     {"within_tolerance", p.within_tolerance}});
  write_json(config, "dependence.json",
             {{"beta", dep_beta},
              {"T", dep_T},
              {"delta", delta},
              {"L", L},
              {"eps", dep_eps},
              {"samples", dep_samples},
              {"dependence_range", r.dependence_range},
              {"pairs", pairs},
              {"passed", r.passed},
              {"lss", {{"k", k}, {"threshold", lss}, {"cells_above_threshold", cells}}}});
  return {r.passed ? 0 : 1, {"good_bonds.csv", "dependence.json"},
          r.passed ? "good-bond surface written" : "dependence check failed"};
}

RunOutcome run_percolation_survival(const ExperimentConfig& config) {
  const json& s = config.section("percolation");
  const auto mode = get_or<std::string>(s, "mode", "bernoulli");
  const auto horizon = get_or<std::int64_t>(s, "horizon", 200);
  const auto trials = get_or<std::int64_t>(s, "trials", 500);
  require(horizon >= 1 && trials >= 1, "percolation.horizon and percolation.trials must be positive");
  RunOutcome outcome;
  auto out = open_output(config, "percolation.csv");
  out << "mode,p,beta,T,delta,L,eps,horizon,trials,survived,frequency,ci_lo,ci_hi\n";
  outcome.files.push_back("percolation.csv");

  if (mode == "bernoulli") {
    const auto ps = get_or<std::vector<double>>(s, "p", {0.3, 0.8, 1.0});
    guard_cost(config, static_cast<double>(ps.size() * trials) * static_cast<double>(horizon * horizon), "percolation");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      require(ps[i] >= 0.0 && ps[i] <= 1.0, "percolation.p entries must lie in [0, 1]");
      const SurvivalEstimate e = bernoulli_survival(ps[i], horizon, trials, derive_seed(config.seed, i), config.threads);
      out << "bernoulli," << format_real(ps[i]) << ",,,,,," << horizon << ',' << trials << ',' << e.survived << ','
          << format_real(e.frequency) << ',' << format_real(e.ci_lo) << ',' << format_real(e.ci_hi) << '\n';
    }
    if (s.contains("bisection")) {
      const json& b = s.at("bisection");
      const auto bh = get_or<std::int64_t>(b, "horizon", 200);
      const auto bt = get_or<std::int64_t>(b, "trials", 400);
      const int it = get_or<int>(b, "iterations", 12);
      const double pc = bernoulli_half_survival_p(bh, bt, derive_seed(config.seed, 1u << 20), it, config.threads);
      write_json(config, "percolation_critical.json",
                 {{"horizon", bh}, {"trials", bt}, {"iterations", it}, {"p_half_survival", pc}});
      outcome.files.push_back("percolation_critical.json");
    }
  } else if (mode == "good_field") {
    require(horizon <= 64, "percolation.horizon must be <= 64 for good-bond fields");
    const double beta = get_or<double>(s, "beta", 0.5);
    const double T = get_or<double>(s, "T", 2.0);
    const double delta = get_or<double>(s, "delta", 0.2);
    const double L = get_or<double>(s, "L", 4.0);
    const double eps = get_or<double>(s, "eps", 0.5);
    CGGeometry g;
    try {
      g = CGGeometry::from_beta(beta, T, delta, L);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("percolation: ") + e.what());
    }
    guard_cost(config, static_cast<double>(trials * horizon * (horizon + 1)) * bond_cost(g), "percolation");
    std::int64_t survived = 0;
    for (std::int64_t t = 0; t < trials; ++t) {
      const EnvironmentField env(derive_seed(config.seed, static_cast<std::uint64_t>(t)), config.law);
      auto [field, records] = good_bond_field(env, g, eps, horizon);
      if (oriented_percolation_survive(field, horizon)) ++survived;
      if (t == 0) {
        auto bonds = open_output(config, "bonds.csv");
        write_bond_csv(bonds, records);
        outcome.files.push_back("bonds.csv");
      }
    }
    const Interval ci = wilson_interval(survived, trials);
    out << "good_field,," << format_real(beta) << ',' << format_real(T) << ',' << format_real(delta) << ','
        << format_real(L) << ',' << format_real(eps) << ',' << horizon << ',' << trials << ',' << survived << ','
        << format_real(static_cast<double>(survived) / static_cast<double>(trials)) << ',' << format_real(ci.lo)
        << ',' << format_real(ci.hi) << '\n';
  } else {
    throw ConfigError("percolation.mode must be 'bernoulli' or 'good_field'");
  }
  outcome.summary = "percolation survival written";
  return outcome;
}

RunOutcome run_continuum_constant(const ExperimentConfig& config) {
  const json& s = config.section("continuum");
  const auto n = get_or<std::int64_t>(s, "n", 64);
  const auto Ts = get_or<std::vector<double>>(s, "T", {2.0, 4.0, 8.0});
  const auto samples = get_or<std::int64_t>(s, "samples", 400);
  const auto law_names = get_or<std::vector<std::string>>(s, "laws", {to_string(config.law).data()});
  require(n >= 1 && samples >= 50, "continuum.n must be >= 1 and continuum.samples >= 50");
  std::vector<Law> laws;
  try {
    for (const auto& name : law_names) laws.push_back(law_from_string(name));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  double cost = 0.0;
  for (const double T : Ts) {
    require(T > 0, "continuum.T entries must be positive");
    cost += static_cast<double>(samples * static_cast<std::int64_t>(laws.size())) *
            transfer_cells(std::floor(T * static_cast<double>(n)));
  }
  guard_cost(config, cost, "continuum-constant");

  RunOutcome outcome;
  auto out = open_output(config, "continuum.csv");
  out << "n,T,law,samples,mean,stderr\n";
  for (std::size_t i = 0; i < laws.size(); ++i) {
    const auto est = continuum_constant_estimate(n, Ts, samples, laws[i], derive_seed(config.seed, i), config.threads);
    for (const auto& p : est.points)
      out << n << ',' << format_real(p.T) << ',' << to_string(laws[i]) << ',' << samples << ','
          << format_real(p.mean) << ',' << format_real(p.std_error) << '\n';
  }
  outcome.files.push_back("continuum.csv");

  if (s.contains("universality")) {
    const json& u = s.at("universality");
    const auto names = get_or<std::vector<std::string>>(u, "laws", {"gaussian", "rademacher"});
    const double T = get_or<double>(u, "T", 2.0);
    const auto us = get_or<std::int64_t>(u, "samples", 1000);
    require(names.size() == 2, "continuum.universality.laws must name two laws");
    Law a, b;
    try {
      a = law_from_string(names[0]);
      b = law_from_string(names[1]);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    const KsResult ks = universality_distribution_check(n, T, a, b, us, derive_seed(config.seed, 1u << 20),
                                                        derive_seed(config.seed, 1u << 21), config.threads);
    write_json(config, "universality.json",
               {{"n", n},
                {"T", T},
                {"laws", names},
                {"samples", us},
                {"ks_statistic", ks.statistic},
                {"p_value", ks.p_value},
                {"rejected_at_0.001", ks.p_value < 1e-3}});
    outcome.files.push_back("universality.json");
  }
  outcome.summary = "continuum constant written";
  return outcome;
}

namespace {

// P(max |S_i| >= a) by listing all 2^N paths.
double exit_probability_enumerated(std::int64_t N, std::int64_t a) {
  double hits = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << N); ++mask) {
    std::int64_t s = 0;
    bool out = a <= 0;
    for (std::int64_t k = 0; k < N && !out; ++k) {
      s += ((mask >> k) & 1U) ? 1 : -1;
      out = std::abs(s) >= a;
    }
    if (out) hits += 1.0;
  }
  return std::ldexp(hits, static_cast<int>(-N));
}

template <class Fn>
CheckResult timed(const std::string& name, const std::string& anchor, double budget, Fn&& fn) {
  CheckResult r;
  r.name = name;
  r.anchor = anchor;
  const auto start = std::chrono::steady_clock::now();
  try {
    std::ostringstream detail;
    detail << std::setprecision(6);
    r.passed = fn(detail);
    r.detail = detail.str();
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (r.seconds > budget) {
    r.passed = false;
    r.detail += " (time budget exceeded)";
  }
  return r;
}

}  // namespace

std::vector<CheckResult> verification_checks(std::uint64_t seed, bool fault_injection, double budget) {
  std::vector<CheckResult> checks;

  checks.push_back(timed("philox_known_answers", "Philox4x32-10 reference vectors", budget, [](std::ostream& d) {
    const auto zero = Philox4x32::block({0, 0, 0, 0}, {0, 0});
    const auto ones = Philox4x32::block({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u});
    const bool ok = zero == Philox4x32::Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8} &&
                    ones == Philox4x32::Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd};
    d << (ok ? "both vectors reproduced" : "mismatch");
    return ok;
  }));

  checks.push_back(timed(
      "chaos_completeness", "chaos expansion: sum_k Theta^(k) = W(E) for the restricted partition function", budget,
      [&](std::ostream& d) {
        double worst = 0.0;
        const EventMask events[] = {EventMask::everything(), tube_escape(8, 2.0)};
        for (const Law law : {Law::gaussian, Law::rademacher, Law::centered_uniform}) {
          for (std::int64_t N = 1; N <= 8; ++N) {
            for (std::uint64_t i = 0; i < 10; ++i) {
              const EnvironmentField field(derive_seed(seed, 1000 * N + i), law);
              for (const EventMask& e : events) {
                double expanded = 0.0, direct = 0.0;
                if (fault_injection) {
                  const ImpureEnvironment env(field);
                  expanded = chaos_expand(env, 0.6, N, 0, e).total();
                  direct = event_partition(env, 0.6, N, 0, e);
                } else {
                  expanded = chaos_expand(field, 0.6, N, 0, e).total();
                  direct = event_partition(field, 0.6, N, 0, e);
                }
                if (direct > 0) worst = std::max(worst, std::abs(expanded - direct) / direct);
              }
            }
          }
        }
        d << "max relative error " << worst;
        return worst < 1e-12;
      }));

  checks.push_back(timed("chaos_orthogonality", "Q[Theta^(k)(x) Theta^(l)(y)] = 0 for k != l", budget,
                         [&](std::ostream& d) {
                           const auto r = orthogonality_exact(Law::rademacher, 0.5, 3, 0, 2, tube_escape(3, 1.0));
                           d << "max off-diagonal " << r.max_off_diagonal << ", max |Q[Theta^(k)]| "
                             << r.max_mean_nonzero_degree;
                           return r.max_off_diagonal < 1e-12 && r.max_mean_nonzero_degree < 1e-12;
                         }));

  checks.push_back(timed("second_moment_decomposition", "Q[|W^x(E) - W^y(E)|^2] = sum_k Lambda^(k)(x, y)", budget,
                         [&](std::ostream& d) {
                           const auto r = second_moment_decompose(Law::rademacher, 0.5, 3, 0, 2,
                                                                  EventMask::inside(time_band(1, 3, 0.0, 3.0)));
                           const double rel = std::abs(r.total() - r.direct) / r.direct;
                           d << "relative error " << rel;
                           return rel < 1e-10 && (r.lambda.array() >= 0).all();
                         }));

  checks.push_back(timed("moment_bound", "Q[|W^x(E) - W^y(E)|^p] <= (sum_k kappa_p^k sqrt(Lambda^(k)))^p", budget,
                         [&](std::ostream& d) {
                           bool ok = true;
                           for (const double p : {2.0, 4.0}) {
                             const auto r = moment_bound_check(Law::rademacher, 0.5, 3, 0, 2, p, tube_escape(3, 1.0));
                             d << "p=" << p << " lhs " << r.lhs << " rhs " << r.rhs << "; ";
                             ok = ok && r.holds;
                           }
                           return ok;
                         }));

  checks.push_back(timed("reflection_coupling_marginal", "reflected walk is again a simple random walk from y", budget,
                         [](std::ostream& d) {
                           const auto r = coupling_marginal_exact(0, 4, 12);
                           d << "tv " << r.tv_distance << " over " << r.paths_enumerated << " paths";
                           return r.tv_distance < 1e-12 && r.pathwise_identity;
                         }));

  checks.push_back(timed("meeting_time_identity", "P(tau > i) = P_0(-d < S_i <= d), d = |x - y| / 2", budget,
                         [](std::ostream& d) {
                           double worst = 0.0;
                           for (const std::int64_t gap : {2, 10, 40}) worst = std::max(worst, meeting_time_identity(0, gap, 1000).max_abs_difference);
                           d << "max difference " << worst;
                           return worst < 1e-12;
                         }));

  checks.push_back(timed("exit_probability", "absorbing DP for P(max |S_i| >= a) against path enumeration", budget,
                         [](std::ostream& d) {
                           double worst = 0.0;
                           for (std::int64_t N = 1; N <= 14; ++N)
                             for (std::int64_t a = 0; a <= N + 1; ++a)
                               worst = std::max(worst, std::abs(exit_probability_exact(N, a) - exit_probability_enumerated(N, a)));
                           d << "max difference " << worst;
                           return worst < 1e-12;
                         }));

  checks.push_back(timed("transfer_matrix", "transfer-matrix W against path enumeration, with and without tubes",
                         budget, [&](std::ostream& d) {
                           double worst = 0.0;
                           const EnvironmentField env(derive_seed(seed, 7), Law::gaussian);
                           for (std::int64_t N = 1; N <= 12; ++N) {
                             for (const EventMask& e : {EventMask::everything(), EventMask::inside(time_band(1, N, 0.0, 2.5))}) {
                               const double tm = event_partition(env, 0.7, N, 0, e);
                               const double bf = brute_force_partition(env, 0.7, N, 0, e);
                               worst = std::max(worst, std::abs(tm - bf) / bf);
                             }
                           }
                           d << "max relative error " << worst;
                           return worst < 1e-12;
                         }));

  checks.push_back(timed("chain_factorization", "W(chained tube event) >= prod_J inf_x theta W^x(bond J)", budget,
                         [&](std::ostream& d) {
                           const CGGeometry g = CGGeometry::from_beta(0.5, 2.0, 0.5, 3.0);
                           const std::int64_t path[] = {0, 1, 0, 1};
                           bool ok = true;
                           for (std::uint64_t i = 0; i < 5; ++i) {
                             const EnvironmentField env(derive_seed(seed, 50 + i), Law::gaussian);
                             const auto r = chain_factorization_check(env, g, path);
                             ok = ok && r.holds;
                             if (i == 0) d << "lhs " << r.log_lhs << " rhs " << r.log_rhs;
                           }
                           return ok;
                         }));

  checks.push_back(timed("grr_inequality", "Garsia-Rodemich-Rumsey bound on random piecewise-linear functions",
                         budget, [&](std::ostream& d) {
                           std::mt19937_64 rng(seed);
                           std::vector<PiecewiseLinear> fs;
                           for (int i = 0; i < 10; ++i) fs.push_back(random_piecewise_linear(rng, 3 + i % 5));
                           const auto r = grr_bound_check(fs, {4.0, 0.625, 1.0, 100, seed});
                           d << r.violations << " violations, worst ratio " << r.worst_ratio;
                           return r.violations == 0 && r.pairs_checked > 0;
                         }));

  checks.push_back(timed("lss_threshold", "1 - k^k / (k + 1)^(k + 1) at k = 1, 2", budget, [](std::ostream& d) {
    d << lss_threshold(1) << ", " << lss_threshold(2);
    return lss_threshold(1) == 0.75 && std::abs(lss_threshold(2) - 23.0 / 27.0) < 1e-15;
  }));
  return checks;
}

RunOutcome run_verification_suite(const ExperimentConfig& config) {
  const json& s = config.section("verify");
  const bool fault = get_or<bool>(s, "fault_injection", false);
  const double budget = get_or<double>(s, "time_budget_seconds", 120.0);
  const auto checks = verification_checks(config.seed, fault, budget);
  json list = json::array();
  bool all = true;
  for (const auto& c : checks) {
    all = all && c.passed;
    list.push_back({{"name", c.name}, {"anchor", c.anchor}, {"passed", c.passed}, {"detail", c.detail},
                    {"seconds", c.seconds}});
  }
  write_json(config, "verify.json", {{"fault_injection", fault}, {"passed", all}, {"checks", list}});
  return {all ? 0 : 1, {"verify.json"}, all ? "all checks passed" : "verification failed"};
}

void write_manifest(const ExperimentConfig& config, const std::string& experiment, const RunOutcome& outcome,
                    const std::string& started_utc, double wall_seconds) {
  json files = json::array();
  for (const auto& f : outcome.files)
    files.push_back({{"name", f.generic_string()},
                     {"sha256", sha256_file(config.out / f)},
                     {"bytes", fs::file_size(config.out / f)}});
  write_json(config, "manifest.json",
             {{"experiment", experiment},
              {"artifact_version", "0.1.0"},
              {"config_hash", config_hash(config)},
              {"config", config.settings},
              {"seed", config.seed},
              {"threads", config.threads},
              {"exit_code", outcome.exit_code},
              {"files", files},
              {"started_utc", started_utc},
              {"finished_utc", utc_timestamp()},
              {"wall_seconds", wall_seconds}});
}

}  // namespace dpre
