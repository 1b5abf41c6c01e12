#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "tamekit/pipeline.hpp"

namespace tamekit::reports {

// insertion order is preserved, so dumps are stable across runs
using json = nlohmann::ordered_json;

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double x);

// Quotes a field when it contains a comma, a quote or a line break;
// embedded quotes are doubled.
std::string csv_escape(const std::string& field);

// Writes header + rows with CRLF line endings. Every cell goes through
// csv_escape. The file is replaced, not appended to.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// One verified bound. `tolerance` names the budget the comparison used
// ("structural", "derived", "sampled" or "exact") so each number in a
// report carries the precision it was held to.
struct CheckEntry {
  std::string name;
  std::string invariant;  // what must hold, in plain words
  std::string tolerance;
  double measured = 0.0;
  bool pass = false;
};

struct RunReport {
  std::string scenario;
  json config;  // effective parameters after defaults and overrides
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;  // files written, relative to the out dir
  std::vector<CheckEntry> checks;
  bool pass = false;
  // Printed to stdout only. The JSON field is serialized as null so the
  // emitted files stay byte-identical run to run.
  double wall_seconds = 0.0;
};

json report_json(const RunReport& report);
json trace_json(const pipeline::PipelineTrace& trace);

// Serializes with two-space indent and a trailing newline.
void write_json(const std::string& path, const json& payload);

}  // namespace tamekit::reports
