#include "hypwr/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"WR-class analysis toolkit for hyperbolic boundary value problems"};
  app.require_subcommand(0, 1);

  std::string config_path, command, system_path, out_dir = ".";
  std::uint64_t seed = 0;
  int jobs = 1;
  double theta = 0.0;
  bool theta_set = false;
  int sphere_resolution = 0;

  app.add_option("--config", config_path, "run configuration JSON");
  app.add_option("--command", command, "check|classify|wr|symmetrize|transport|estimate");
  app.add_option("--jobs", jobs, "worker pool size");
  app.add_option("--seed", seed, "RNG seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--resolution", sphere_resolution, "sphere grid resolution");
  auto* theta_opt = app.add_option("--theta", theta, "boundary-angle parameter passthrough");

  // Positional shorthand: hypwr <command> <system.json>
  std::vector<std::string> positionals;
  app.add_option("args", positionals, "command and system file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  theta_set = theta_opt->count() > 0;

  hypwr::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = hypwr::RunConfig::from_json_file(config_path);
  } catch (const hypwr::Error& e) {
    std::cerr << "{\"error\":{\"module\":\"" << e.module_name() << "\",\"op\":\""
              << e.op_name() << "\",\"message\":\"config load failed\"}}\n";
    return 2;
  }

  if (!positionals.empty()) cfg.command = positionals[0];
  if (positionals.size() > 1) cfg.system_path = positionals[1];
  if (!command.empty()) cfg.command = command;
  if (!system_path.empty()) cfg.system_path = system_path;
  if (app.count("--seed")) cfg.seed = seed;
  if (app.count("--jobs")) cfg.jobs = jobs;
  if (app.count("--out")) cfg.output_dir = out_dir;
  if (sphere_resolution > 0) cfg.sphere_resolution = sphere_resolution;
  if (theta_set) cfg.theta = theta;

  if (cfg.command.empty() || cfg.system_path.empty()) {
    std::cerr << "usage: hypwr <command> <system.json> [--theta X] [--seed N] "
                 "[--jobs N] [--out DIR] [--config PATH]\n";
    return 2;
  }
  return hypwr::run(cfg);
}
