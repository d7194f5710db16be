#include <CLI11.hpp>

#include "mjpde/cli.hpp"

namespace {

struct SharedOpts {
  std::string config;
  std::string out = "out";
  std::vector<std::string> sets;
  int paths = 0;
  bool has_paths = false;
  std::uint64_t seed = 0;
  bool has_seed = false;
  int grid = 0;
  bool has_grid = false;
};

void add_common(CLI::App* sub, SharedOpts& o, bool needs_config) {
  auto* cfg = sub->add_option("--config", o.config, "configuration file (JSON)");
  if (needs_config) cfg->required();
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--set", o.sets,
                  "config override key.path=value (repeatable)");
  sub->add_option("--paths", o.paths, "number of sample paths")
      ->each([&](const std::string&) { o.has_paths = true; });
  sub->add_option("--seed", o.seed, "path seed / ensemble base seed")
      ->each([&](const std::string&) { o.has_seed = true; });
  sub->add_option("--grid", o.grid, "spatial grid resolution N")
      ->each([&](const std::string&) { o.has_grid = true; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulation and verification toolkit for backstepping boundary "
               "control of 4x4 hyperbolic systems with Markov-jumping parameters"};
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> subs = {
      {"kernel", "solve the backstepping kernels and write them as CSV"},
      {"simulate", "run one deterministic or single-path simulation"},
      {"kolmogorov", "integrate the forward equation for the mode probabilities"},
      {"ensemble", "Monte-Carlo ensemble with mean-square decay fit"},
      {"check", "run the invariant suite against a configuration"},
      {"scenario-v", "write the built-in reference scenario configuration"}};

  std::vector<SharedOpts> opts(subs.size());
  for (size_t i = 0; i < subs.size(); ++i) {
    CLI::App* sub = app.add_subcommand(subs[i].first, subs[i].second);
    add_common(sub, opts[i], subs[i].first != "scenario-v");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  for (size_t i = 0; i < subs.size(); ++i) {
    if (!app.get_subcommand(subs[i].first)->parsed()) continue;
    mjpde::Command cmd;
    cmd.subcommand = subs[i].first;
    cmd.config_path = opts[i].config;
    cmd.output_dir = opts[i].out;
    cmd.overrides = opts[i].sets;
    if (opts[i].has_paths) cmd.paths = opts[i].paths;
    if (opts[i].has_seed) cmd.seed = opts[i].seed;
    if (opts[i].has_grid) cmd.grid_n = opts[i].grid;
    return mjpde::run_command(cmd);
  }
  return 1;
}
