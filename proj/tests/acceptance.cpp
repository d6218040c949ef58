// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance <dpre_cli> <configs dir>

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dpre/chaos.hpp"
#include "dpre/coarse_grain.hpp"
#include "dpre/polymer.hpp"
#include "dpre/stats.hpp"
#include "dpre/walk.hpp"
#include "oracles.hpp"

using namespace dpre;
namespace fs = std::filesystem;

namespace {

std::string g_cli;
fs::path g_configs;
fs::path g_work;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Table = std::vector<std::map<std::string, std::string>>;

Table read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  for (std::stringstream h(line); std::getline(h, line, ',');) header.push_back(line);
  Table rows;
  while (std::getline(in, line)) {
    std::map<std::string, std::string> row;
    std::stringstream r(line);
    for (const auto& name : header) {
      std::string cell;
      std::getline(r, cell, ',');
      row[name] = cell;
    }
    rows.push_back(row);
  }
  return rows;
}

double num(const std::map<std::string, std::string>& row, const std::string& key) { return std::stod(row.at(key)); }

int run_cli(const std::string& args) {
  const std::string cmd = g_cli + " " + args + " >/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---- criteria ------------------------------------------------------------

void chaos_identity(Verdict& v) {
  double worst = 0.0;
  int instances = 0;
  for (const Law law : {Law::gaussian, Law::rademacher, Law::shifted_exponential})
    for (std::int64_t N = 1; N <= 8; ++N)
      for (std::uint64_t e = 0; e < 50; ++e) {
        const EnvironmentField env(derive_seed(1000 + N, e), law);
        for (const EventMask& event : {EventMask::everything(), tube_escape(N, 1.5)}) {
          const double w = event_partition(env, 0.4, N, 0, event);
          const double sum = chaos_expand(env, 0.4, N, 0, event).total();
          const double err = w > 0 ? std::abs(sum - w) / w : std::abs(sum);
          worst = std::max(worst, err);
          ++instances;
        }
      }
  v.detail << instances << " instances, worst relative error " << worst;
  v.require(worst < 1e-12, "relative error < 1e-12");
}

struct StartPair {
  std::int64_t N, x, y;
};
const StartPair kPairs[] = {{1, 0, 0}, {1, 0, 2}, {2, 0, 2}, {2, -1, 1}, {3, 0, 0}, {3, 0, 2}, {3, -2, 2}};

std::vector<EventMask> exact_events(std::int64_t N) {
  return {EventMask::everything(), tube_escape(N, 1.5), EventMask::inside(time_band(1, N, 0.0, 3.0))};
}

void orthogonality(Verdict& v) {
  double off = 0.0, rel = 0.0;
  int instances = 0;
  for (const auto& [N, x, y] : kPairs)
    for (const EventMask& e : exact_events(N))
      for (const double beta : {0.3, 0.8}) {
        const auto o = orthogonality_exact(Law::rademacher, beta, N, x, y, e);
        off = std::max({off, o.max_off_diagonal, o.max_mean_nonzero_degree});
        const auto d = second_moment_decompose(Law::rademacher, beta, N, x, y, e);
        const double r = d.direct > 0 ? std::abs(d.total() - d.direct) / d.direct : std::abs(d.total());
        rel = std::max(rel, r);
        for (Eigen::Index k = 0; k < d.lambda.size(); ++k) v.require(d.lambda[k] >= 0.0, "Lambda >= 0");
        ++instances;
      }
  v.detail << instances << " instances, max off-diagonal " << off << ", max relative Lambda error " << rel;
  v.require(off < 1e-12, "off-diagonal < 1e-12");
  v.require(rel < 1e-10, "second moment relative < 1e-10");
}

void moment_bound(Verdict& v) {
  int instances = 0, held = 0;
  double worst = 0.0;
  for (const auto& [N, x, y] : kPairs)
    for (const EventMask& e : exact_events(N))
      for (const double beta : {0.2, 0.5, 1.0})
        for (const double p : {2.0, 4.0}) {
          const auto r = moment_bound_check(Law::rademacher, beta, N, x, y, p, e);
          ++instances;
          held += r.holds;
          if (r.rhs > 0) worst = std::max(worst, r.lhs / r.rhs);
        }
  v.detail << held << "/" << instances << " hold, worst lhs/rhs " << worst;
  v.require(held == instances, "bound holds on every instance");
}

void coupling(Verdict& v) {
  double tv = 0.0;
  for (std::int64_t N = 1; N <= 14; ++N)
    for (const auto& [x, y] : {std::pair<std::int64_t, std::int64_t>{0, 0}, {0, 2}, {0, 4}, {-3, 5}, {2, -6}}) {
      const auto r = coupling_marginal_exact(x, y, N);
      tv = std::max(tv, r.tv_distance);
      v.require(r.pathwise_identity, "pathwise reflection identity");
    }
  const ChiSquaredResult chi = coupling_endpoint_chi_squared(0, 4, 100, 100000, 4040);
  v.detail << "max TV " << tv << ", chi-squared p = " << chi.p_value << " (dof " << chi.dof << ")";
  v.require(tv < 1e-12, "TV < 1e-12");
  v.require(chi.p_value >= 0.01, "chi-squared not rejected at 1%");
}

void meeting(Verdict& v) {
  double worst = 0.0;
  for (std::int64_t d = 2; d <= 40; d += 2)
    for (const std::int64_t x : {0, -7}) {
      const auto r = meeting_time_identity(x, x + d, 1000);
      worst = std::max(worst, r.max_abs_difference);
      v.require(r.nonincreasing, "tail nonincreasing");
    }
  v.detail << "max |first-passage - window| = " << worst << " over i <= 1000, |x - y| <= 40";
  v.require(worst < 1e-12, "difference < 1e-12");
}

void exit_rates(Verdict& v) {
  double worst = 0.0;
  for (std::int64_t N = 1; N <= 14; ++N)
    for (std::int64_t a = 0; a <= N + 1; ++a) {
      const double enumerated = oracle::path_sum(N, 0, [](auto, auto) { return 1.0; }, [a](const oracle::Path& p) {
        for (const auto s : p)
          if (std::abs(s) >= a) return true;
        return false;
      });
      worst = std::max(worst, std::abs(exit_probability_exact(N, a) - enumerated));
    }
  v.detail << "max |DP - enumeration| " << worst << "; I_hat(L) at T=4, n=16:";
  std::vector<double> rates;
  for (const double L : {2.0, 3.0, 4.0, 6.0, 8.0}) {
    rates.push_back(exit_rate_estimate(4.0, 16, L));
    v.detail << " L=" << L << ":" << rates.back();
  }
  v.require(worst < 1e-12, "DP matches enumeration");
  bool increasing = true;
  for (std::size_t i = 1; i < rates.size(); ++i) increasing = increasing && rates[i] > rates[i - 1];
  v.require(increasing, "I_hat strictly increasing over L");
}

void transfer_matrix(Verdict& v) {
  double worst = 0.0;
  int instances = 0;
  for (std::int64_t N = 0; N <= 12; ++N)
    for (std::uint64_t e = 0; e < 5; ++e) {
      const EnvironmentField env(derive_seed(7000 + N, e), Law::gaussian);
      const double beta = 0.7, lambda = log_mgf(Law::gaussian, beta);
      const auto w = [&](std::int64_t k, std::int64_t l) { return std::exp(beta * env.eta(k, l) - lambda); };
      const std::int64_t start = static_cast<std::int64_t>(e) - 2;
      struct Case {
        PathConstraint c;
        std::function<bool(const oracle::Path&)> keep;
      };
      const std::vector<Case> cases{
          {unconstrained(), {}},
          {time_band(1, N, 0.0, 2.5),
           [&](const oracle::Path& p) {
             for (std::int64_t k = 1; k <= N; ++k)
               if (std::abs(p[k]) > 2.5) return false;
             return true;
           }},
          {time_band(2, N, 1.0, 3.0) & endpoint_interval(-1, 3),
           [&](const oracle::Path& p) {
             for (std::int64_t k = 2; k <= N; ++k)
               if (std::abs(p[k] - 1.0) > 3.0) return false;
             return p[N] >= -1 && p[N] <= 3;
           }},
      };
      for (const auto& cs : cases) {
        const double expected = oracle::path_sum(N, start, w, cs.keep);
        const double got = std::exp(partition_function(env, beta, N, start, cs.c));
        worst = std::max(worst, expected > 0 ? std::abs(got - expected) / expected : std::abs(got));
        ++instances;
      }
    }
  v.detail << instances << " instances, worst relative error " << worst;
  v.require(worst < 1e-12, "relative error < 1e-12");
}

void normalization(Verdict& v) {
  int cells = 0, inside = 0;
  double worst_z = 0.0;
  for (const Law law : kAllLaws)
    for (const double beta : {0.3, 0.45})
      for (const std::int64_t N : {10, 50}) {
        std::vector<double> w;
        for (const double lw : log_partition_samples(law, beta, N, 10000, derive_seed(8000, cells))) w.push_back(std::exp(lw));
        const SampleSummary s = summarize(w);
        const double z = std::abs(s.mean - 1.0) / s.std_error;
        worst_z = std::max(worst_z, z);
        inside += z <= 3.0;
        ++cells;
      }
  v.detail << inside << "/" << cells << " cells within 3 stderr of 1, worst |z| " << worst_z;
  v.require(inside == cells, "every cell within 3 stderr");
}

void superadditivity(Verdict& v) {
  struct Cell {
    Law law;
    double beta;
    std::int64_t N, M;
  };
  const Cell cells[] = {{Law::gaussian, 0.5, 40, 40},     {Law::gaussian, 0.7, 30, 60},
                        {Law::gaussian, 1.0, 50, 25},     {Law::rademacher, 0.5, 40, 40},
                        {Law::rademacher, 0.8, 30, 60},   {Law::centered_uniform, 0.6, 50, 50}};
  int held = 0, i = 0;
  for (const auto& c : cells) {
    const auto r = superadditivity_check(c.law, c.beta, c.N, c.M, 4000, derive_seed(9000, i++));
    held += r.holds;
    v.detail << " margin/se=" << r.margin / r.combined_se;
  }
  v.require(held == 6, "all 6 cells superadditive within 3 stderr");
}

void beta4_trend(Verdict& v) {
  const fs::path out = g_work / "beta4";
  const int code = run_cli("beta4-scan --config " + (g_configs / "beta4_scan.json").string() + " --out " + out.string());
  v.require(code == 0, "beta4-scan exit code 0");
  if (code != 0) return;
  std::map<double, std::pair<double, double>> ratio;  // beta -> (ratio, stderr of the ratio)
  for (const auto& r : read_csv(out / "beta4_scan.csv")) {
    const double beta = num(r, "beta"), se = num(r, "stderr") / std::pow(beta, 4);
    ratio[beta] = {num(r, "ratio"), se};
    v.detail << " beta=" << beta << " N=" << r.at("N") << " ratio=" << num(r, "ratio") << "+-" << se << ";";
    v.require(num(r, "ratio") < 0, "ratio negative");
  }
  v.require(ratio.size() == 3 && ratio.count(0.4) && ratio.count(0.7), "rows for beta 0.7, 0.55, 0.4");
  if (!ratio.count(0.4) || !ratio.count(0.7)) return;
  const auto [r4, s4] = ratio[0.4];
  const auto [r7, s7] = ratio[0.7];
  const double gap4 = std::abs(r4 + 1.0 / 6.0), gap7 = std::abs(r7 + 1.0 / 6.0);
  v.detail << " |r(0.4)+1/6|=" << gap4 << " |r(0.7)+1/6|=" << gap7 << " slack=" << 3 * std::hypot(s4, s7);
  v.require(gap4 <= gap7 + 3.0 * std::hypot(s4, s7), "beta=0.4 closer to -1/6 than beta=0.7 (3-stderr slack)");
}

bool g_continuum_ran = false;
int g_continuum_code = -1;

int continuum_run() {
  if (!g_continuum_ran) {
    g_continuum_code = run_cli("continuum-constant --config " + (g_configs / "continuum.json").string() + " --out " +
                               (g_work / "continuum").string());
    g_continuum_ran = true;
  }
  return g_continuum_code;
}

void continuum_plateau(Verdict& v) {
  v.require(continuum_run() == 0, "continuum-constant exit code 0");
  if (g_continuum_code != 0) return;
  std::vector<std::pair<double, double>> series;  // (T, mean) for gaussian
  for (const auto& r : read_csv(g_work / "continuum" / "continuum.csv")) {
    if (r.at("law") != "gaussian" || r.at("n") != "64") continue;
    series.emplace_back(num(r, "T"), num(r, "mean"));
    v.detail << " T=" << r.at("T") << ":" << num(r, "mean") << "+-" << num(r, "stderr");
  }
  std::sort(series.begin(), series.end());
  v.require(series.size() == 3, "gaussian rows for T = 2, 4, 8");
  if (series.size() != 3) return;
  for (const auto& [T, m] : series) v.require(m < 0, "negative estimates");
  for (std::size_t i = 1; i < series.size(); ++i)
    v.require(series[i].second < series[i - 1].second, "decreasing in T");
  v.require(series.back().first == 8.0 && series.back().second >= -0.30 && series.back().second <= -0.05,
            "T=8 value in [-0.30, -0.05]");
}

void universality(Verdict& v) {
  v.require(continuum_run() == 0, "continuum-constant exit code 0");
  if (g_continuum_code != 0) return;
  std::ifstream in(g_work / "continuum" / "universality.json");
  const auto u = nlohmann::json::parse(in);
  v.detail << "n=" << u["n"] << " T=" << u["T"] << " samples=" << u["samples"] << " KS=" << u["ks_statistic"]
           << " p=" << u["p_value"];
  v.require(u["n"] == 64 && u["T"] == 2.0 && u["samples"] == 1000, "configured n=64, T=2, 1000 samples");
  v.require(u["p_value"].get<double>() >= 1e-3, "not rejected at 0.1%");
}

void good_bonds(Verdict& v) {
  const fs::path out = g_work / "good_bonds";
  const int code = run_cli("good-bonds --config " + (g_configs / "good_bonds.json").string() + " --out " + out.string());
  v.require(code == 0, "good-bonds exit code 0");
  v.require(lss_threshold(1) == 0.75, "lss_threshold(1) = 0.75");
  v.require(std::abs(lss_threshold(2) - (1.0 - 4.0 / 27.0)) < 1e-15, "lss_threshold(2)");
  if (code != 0) return;
  // (T, eps) -> beta -> (density, stderr)
  std::map<std::pair<double, double>, std::map<double, std::pair<double, double>>> grid;
  for (const auto& r : read_csv(out / "good_bonds.csv"))
    grid[{num(r, "T"), num(r, "eps")}][num(r, "beta")] = {num(r, "density"), num(r, "stderr")};
  std::size_t cells = 0;
  for (const auto& [key, by_beta] : grid) {
    v.detail << " T=" << key.first << ",eps=" << key.second << ":";
    const std::pair<double, double>* larger = nullptr;  // cell at the next larger beta
    for (auto it = by_beta.rbegin(); it != by_beta.rend(); ++it) {
      v.detail << " beta=" << it->first << ":" << it->second.first;
      if (larger)
        v.require(it->second.first >= larger->first - 3.0 * std::hypot(it->second.second, larger->second),
                  "density nonincreasing in beta at T=" + std::to_string(key.first) +
                      ", eps=" + std::to_string(key.second));
      larger = &it->second;
      ++cells;
    }
  }
  v.require(cells >= 6, "3 x 2 (beta, T) grid present");
}

void percolation(Verdict& v) {
  const std::int64_t levels = 4;
  BondField f(levels);
  std::int64_t mismatches = 0;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << f.bond_count()); ++m) {
    for (std::size_t i = 0; i < f.bond_count(); ++i) f.set(f.bond_at(i), (m >> i) & 1U);
    bool exists = false;
    for (std::uint64_t steps = 0; steps < (std::uint64_t{1} << levels) && !exists; ++steps) {
      std::int64_t X = 0;
      bool open = true;
      for (std::int64_t I = 0; I < levels && open; ++I) {
        const std::int64_t Y = X + (((steps >> I) & 1U) ? 1 : -1);
        open = f.is_open({I, X, Y});
        X = Y;
      }
      exists = open;
    }
    mismatches += exists != oriented_percolation_survive(f, levels).has_value();
  }
  const SurvivalEstimate s = bernoulli_survival(0.8, 200, 500, 99);
  v.detail << f.bond_count() << "-bond lattice, " << mismatches << " mismatches over all states; p=0.8 survival "
           << s.frequency << " [" << s.ci_lo << ", " << s.ci_hi << "]";
  v.require(mismatches == 0, "DP matches exhaustive enumeration");
  v.require(s.frequency > 0.4, "survival frequency > 0.4");
}

void grr(Verdict& v) {
  std::mt19937_64 rng(1515);
  std::uniform_int_distribution<int> pieces(1, 8);
  std::vector<PiecewiseLinear> fs;
  for (int i = 0; i < 100; ++i) fs.push_back(random_piecewise_linear(rng, pieces(rng), 2.0));
  for (const auto& [p, q] : {std::pair{4.0, 0.625}, std::pair{3.0, 1.0}}) {
    const GrrReport r = grr_bound_check(fs, {p, q, 1.0, 200, 77});
    v.detail << " (p,q)=(" << p << "," << q << "): violations " << r.violations << ", worst ratio " << r.worst_ratio
             << ";";
    v.require(r.violations == 0, "zero violations");
  }
}

void determinism(Verdict& v) {
  const std::string cfg = (g_configs / "beta4_scan_small.json").string();
  const fs::path a = g_work / "det1", b = g_work / "det3";
  const int ca = run_cli("beta4-scan --config " + cfg + " --threads 1 --out " + a.string());
  const int cb = run_cli("beta4-scan --config " + cfg + " --threads 3 --out " + b.string());
  v.require(ca == 0 && cb == 0, "both runs exit 0");
  if (ca != 0 || cb != 0) return;
  const std::string x = slurp(a / "beta4_scan.csv"), y = slurp(b / "beta4_scan.csv");
  v.detail << x.size() << " bytes, identical: " << (x == y ? "yes" : "no");
  v.require(!x.empty() && x == y, "byte-identical CSV");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: acceptance <dpre_cli> <configs dir>\n";
    return 2;
  }
  g_cli = argv[1];
  g_configs = argv[2];
  g_work = fs::temp_directory_path() / "dpre_acceptance";
  fs::remove_all(g_work);
  fs::create_directories(g_work);

  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria{
      {"chaos expansion identity", chaos_identity},
      {"exact orthogonality and second moment", orthogonality},
      {"hypercontractive moment bound", moment_bound},
      {"reflection coupling marginal", coupling},
      {"meeting-time identity", meeting},
      {"exit probability and rate diagnostics", exit_rates},
      {"transfer matrix vs path enumeration", transfer_matrix},
      {"normalization", normalization},
      {"superadditivity", superadditivity},
      {"beta^4 scaling trend", beta4_trend},
      {"continuum constant plateau", continuum_plateau},
      {"universality", universality},
      {"good-bond density and LSS threshold", good_bonds},
      {"percolation engine", percolation},
      {"GRR inequality", grr},
      {"determinism across thread counts", determinism},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !v.pass;
    std::printf("criterion %2zu %s  %s (%.1fs): %s\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                secs, v.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
