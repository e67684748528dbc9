// dlacs: simulate, sweep, pc, couple, plot and verify.
#include <CLI11.hpp>

#include <iostream>

#include "dlacs/cli.hpp"

namespace {

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  std::uint64_t replicas = 0;
  unsigned jobs = 0;
  std::string out = ".";
  bool timing = false;
};

void add_common(CLI::App* sub, Flags& f, bool needs_config) {
  auto* cfg = sub->add_option("--config", f.config, "run configuration file");
  if (needs_config) cfg->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", f.seed, "master seed (overrides the config and DLACS_SEED)");
  sub->add_option("--jobs", f.jobs, "worker threads, 0 = all cores")->capture_default_str();
  sub->add_option("--out", f.out, "output directory")->capture_default_str();
  sub->add_option("--replicas", f.replicas, "replica count override")->check(CLI::PositiveNumber);
  sub->add_flag("--timing", f.timing, "include wall-clock seconds in report.json");
}

dlacs::cli::CommonOptions common(const CLI::App* sub, const Flags& f) {
  dlacs::cli::CommonOptions o;
  if (sub->count("--seed")) o.seed = f.seed;
  if (sub->count("--replicas")) o.replicas = f.replicas;
  o.jobs = f.jobs;
  o.out = f.out;
  o.timing = f.timing;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-type annihilating-coalescing random walk simulator"};
  app.footer("Configuration keys (key=value, whitespace or newline separated, # comments):\n" +
             dlacs::cli::config_reference());
  app.require_subcommand(1);

  Flags flags;
  dlacs::cli::VerifyOptions verify;
  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const dlacs::cli::RunConfig&, const dlacs::cli::CommonOptions&);
  };
  const Command commands[] = {
      {"simulate", "root survival curve, root density and annihilation sizes", dlacs::cli::cmd_simulate},
      {"sweep", "surviving A fraction over a list of densities", dlacs::cli::cmd_sweep},
      {"pc", "bisection for the critical density", dlacs::cli::cmd_pc},
      {"couple", "coupled arrow construction on a cycle", dlacs::cli::cmd_couple},
      {"plot", "space-time image of one run", dlacs::cli::cmd_plot},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, flags, true);
    subs.push_back(sub);
  }
  CLI::App* v = app.add_subcommand("verify", "run the named checks and write report.json");
  add_common(v, flags, false);
  v->add_option("--checks", verify.checks, "subset of checks (comma separated)")->delimiter(',');
  // Hidden: empty group name.
  v->add_flag("--oracles", verify.oracles, "include checks against the oracle module")->group("");
  v->add_flag_callback(
      "--list",
      [] {
        for (const auto& n : dlacs::cli::verify_check_names(false)) std::cout << n << '\n';
        throw CLI::Success();
      },
      "list check names");

  CLI11_PARSE(app, argc, argv);

  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (!subs[i]->parsed()) continue;
      const auto cfg = dlacs::cli::load_config(flags.config);
      return commands[i].fn(cfg, common(subs[i], flags));
    }
    if (v->parsed()) {
      if (!flags.config.empty())
        std::cerr << "note: verify runs fixed configurations; --config is ignored\n";
      return dlacs::cli::cmd_verify(verify, common(v, flags), std::cout);
    }
  } catch (const dlacs::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
