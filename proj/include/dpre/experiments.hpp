#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpre/environment.hpp"

namespace dpre {

/// Invalid configuration or a run refused by the cost guard (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parsed configuration. `settings` keeps the whole JSON document with flag
/// overrides applied; the scalar fields mirror its top-level keys.
struct ExperimentConfig {
  nlohmann::json settings = nlohmann::json::object();
  Law law = Law::gaussian;
  std::uint64_t seed = 1;
  int threads = 1;
  double cost_ceiling = 1e10;  // slice-cell updates
  std::filesystem::path out = "out";

  /// Section `name`, or an empty object.
  const nlohmann::json& section(const std::string& name) const;
};

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::filesystem::path> out;
};

/// Reads a JSON config (empty path: all defaults) and applies flag overrides.
ExperimentConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

/// SHA-256 over the canonical dump of the settings without `threads` and `out`,
/// so runs that must produce identical files share a hash.
std::string config_hash(const ExperimentConfig& config);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

struct RunOutcome {
  int exit_code = 0;  // 0 success, 1 check failure
  std::vector<std::filesystem::path> files;  // relative to config.out
  std::string summary;
};

/// beta4_scan.csv: beta,N,mean,stderr,ratio with N = round(n_factor beta^-4).
RunOutcome run_beta4_scan(const ExperimentConfig& config);
/// good_bonds.csv: beta,T,eps,density,stderr plus dependence.json.
RunOutcome run_good_bond_surface(const ExperimentConfig& config);
/// percolation.csv (Bernoulli or good-bond fields) plus percolation_critical.json
/// when bisection is requested, and bonds.csv for the first good-bond field.
RunOutcome run_percolation_survival(const ExperimentConfig& config);
/// continuum.csv: n,T,law,samples,mean,stderr plus universality.json.
RunOutcome run_continuum_constant(const ExperimentConfig& config);

struct CheckResult {
  std::string name;
  std::string anchor;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Exact-oracle checks. `fault_injection` routes the chaos completeness check
/// through ImpureEnvironment, which must make it fail.
std::vector<CheckResult> verification_checks(std::uint64_t seed, bool fault_injection,
                                             double time_budget_seconds = 120.0);
/// verify.json with every check; exit code 1 on any failure.
RunOutcome run_verification_suite(const ExperimentConfig& config);

/// Writes manifest.json listing every produced file with its SHA-256.
void write_manifest(const ExperimentConfig& config, const std::string& experiment, const RunOutcome& outcome,
                    const std::string& started_utc, double wall_seconds);

std::string utc_timestamp();

}  // namespace dpre
