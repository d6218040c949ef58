#include <CLI11.hpp>

#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include "dpre/experiments.hpp"
#include "dpre/walk.hpp"

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "JSON configuration file");
  cmd->add_option("--seed", o.seed, "master seed (overrides the config)");
  cmd->add_option("--out", o.out, "output directory (overrides the config)");
  cmd->add_option("--threads", o.threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
}

int run(const std::string& name, const CommonOptions& o,
        const std::function<dpre::RunOutcome(const dpre::ExperimentConfig&)>& fn) {
  try {
    dpre::ConfigOverrides ov;
    ov.seed = o.seed;
    ov.threads = o.threads;
    if (o.out) ov.out = *o.out;
    const dpre::ExperimentConfig config = dpre::load_config(o.config, ov);
    const std::string started = dpre::utc_timestamp();
    const auto t0 = std::chrono::steady_clock::now();
    const dpre::RunOutcome outcome = fn(config);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    dpre::write_manifest(config, name, outcome, started, wall);
    std::cout << name << ": " << outcome.summary << " (" << config.out.string() << ")\n";
    return outcome.exit_code;
  } catch (const dpre::ConfigError& e) {
    std::cerr << name << ": " << e.what() << '\n';
    return 2;
  } catch (const dpre::CostRefusal& e) {
    std::cerr << name << ": refused: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << name << ": error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Directed polymer experiments"};
  app.require_subcommand(1);

  const std::map<std::string, std::pair<std::string, std::function<dpre::RunOutcome(const dpre::ExperimentConfig&)>>>
      commands{
          {"beta4-scan", {"free-energy scan of F_N / beta^4", dpre::run_beta4_scan}},
          {"good-bonds", {"good-bond density surface and dependence report", dpre::run_good_bond_surface}},
          {"percolation", {"oriented percolation survival", dpre::run_percolation_survival}},
          {"continuum-constant", {"intermediate-disorder free energy per unit time", dpre::run_continuum_constant}},
          {"verify", {"exact-oracle verification suite", dpre::run_verification_suite}},
      };

  std::map<std::string, CommonOptions> options;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, entry] : commands) {
    subs[name] = app.add_subcommand(name, entry.first);
    add_common(subs[name], options[name]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (const auto& [name, sub] : subs)
    if (sub->parsed()) return run(name, options[name], commands.at(name).second);
  return 2;
}
