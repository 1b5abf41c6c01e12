#pragma once

#include <cstdint>
#include <string>

#include "tamekit/reports.hpp"

namespace tamekit::scenarios {

// Options as they arrive from the command line. `command` is one of
// linear, isotopy, inflate, prepare, selftest; `mode` narrows the inflate
// command to trivial, negative or positive-bound. Scenario parameters and
// tolerance overrides come from the JSON file at config_path; every field
// has a default, so an empty config is valid.
struct CliOptions {
  std::string command;
  std::string mode = "trivial";
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 2024;
  double grid_scale = 1.0;
};

// Runs one scenario end to end: executes the battery, writes the CSV and
// JSON artifacts into out_dir, prints one line per check plus a summary,
// and returns the process exit code: 0 when every check passed, 1 when a
// check failed, 2 for unusable options or configuration.
int run_cli(const CliOptions& opts);

}  // namespace tamekit::scenarios
