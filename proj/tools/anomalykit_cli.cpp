/// @file anomalykit_cli.cpp
/// @brief Command-line front end: forward, linearize, probe, invert, verify.
#include "anomalykit/error.hpp"
#include "anomalykit/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

struct Globals {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  int jobs = 1;
};

void print_manifest(const anomalykit::RunManifest& m) {
  std::printf("%s: %zu files in %s (config %s)\n", m.command.c_str(), m.files.size(), m.dir.string().c_str(),
              m.config_hash.c_str());
  for (const auto& w : m.warnings) std::printf("warning: %s\n", w.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  using namespace anomalykit;
  CLI::App app{"Reaction-anomaly identification in predator-prey chemotaxis models"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "experiment config (JSON); defaults are built in");
  app.add_option("--set", g.overrides, "override a config key, e.g. grid.nx=128 (repeatable)");
  app.add_option("--out", g.out, "output root (default: $ANOMALYKIT_OUT, then output.dir)");
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);

  auto* forward = app.add_subcommand("forward", "simulate and write boundary measurements");
  auto* linearize = app.add_subcommand("linearize", "linearization cascade and finite-difference check");
  auto* probe = app.add_subcommand("probe", "corner probe integrals and decay fits");
  auto* invert = app.add_subcommand("invert", "reconstruct the inclusion and boundary coefficients");
  std::string observed;
  invert->add_option("--observed", observed, "measurement file (default: simulate the configured inclusion)");
  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  std::vector<int> only;
  verify->add_option("--only", only, "criteria to run (1-11)")->delimiter(',')->check(CLI::Range(1, 11));
  auto* show = app.add_subcommand("config", "print the effective config");

  CLI11_PARSE(app, argc, argv);

  try {
    Json cfg = g.config.empty() ? default_config() : load_config(g.config);
    for (const auto& o : g.overrides) apply_override(cfg, o);
    if (show->parsed()) {
      std::cout << cfg.dump(2) << "\n";
      return 0;
    }
    RunOptions opt;
    opt.out_dir = g.out;
    opt.jobs = g.jobs;
    opt.only = std::set<int>(only.begin(), only.end());
    if (!observed.empty()) opt.observed = observed;

    RunManifest m;
    if (forward->parsed()) m = run_forward(cfg, opt);
    if (linearize->parsed()) m = run_linearize(cfg, opt);
    if (probe->parsed()) m = run_probe(cfg, opt);
    if (invert->parsed()) m = run_invert(cfg, opt);
    if (verify->parsed()) {
      m = run_verify(cfg, opt);
      const Json summary = m.summary;
      for (const auto& [id, result] : summary.items()) std::printf("%s %s\n", id.c_str(), result.get<std::string>().c_str());
    }
    print_manifest(m);
    return m.exit_code;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 2;
  } catch (const GeometryError& e) {
    std::fprintf(stderr, "geometry error: %s\n", e.what());
    return 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
