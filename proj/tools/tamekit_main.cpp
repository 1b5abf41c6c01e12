#include <cstdio>

#include "CLI11.hpp"
#include "tamekit/scenarios.hpp"

int main(int argc, char** argv) {
  CLI::App app{"numerical battery runner for the tame-structure toolkit"};
  app.require_subcommand(1);

  tamekit::scenarios::CliOptions opts;
  app.add_option("--config", opts.config_path, "JSON configuration file");
  app.add_option("--out", opts.out_dir, "directory for CSV and JSON artifacts")
      ->capture_default_str();
  app.add_option("--seed", opts.seed, "seed for the randomized batteries")->capture_default_str();
  app.add_option("--grid-scale", opts.grid_scale, "multiplier applied to grid resolutions")
      ->capture_default_str();

  auto* linear = app.add_subcommand("linear", "margin law sweep over skew norms");
  auto* isotopy = app.add_subcommand("isotopy", "deformation identities and step partitions");
  auto* inflate = app.add_subcommand("inflate", "radial inflation profiles and margins");
  inflate->add_option("--mode", opts.mode, "trivial, negative or positive-bound")
      ->capture_default_str();
  auto* prepare = app.add_subcommand("prepare", "curve straightening end to end");
  auto* selftest = app.add_subcommand("selftest", "reduced battery of every scenario");
  for (auto* sub : {linear, isotopy, inflate, prepare, selftest}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  }

  opts.command = app.get_subcommands().front()->get_name();
  return tamekit::scenarios::run_cli(opts);
}
