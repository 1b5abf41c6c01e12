#include "tamekit/reports.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace tamekit::reports {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& field) {
  const bool needs_quotes = field.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quotes) return field;
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  const auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out << ',';
      out << csv_escape(cells[i]);
    }
    out << "\r\n";
  };
  emit(header);
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::runtime_error("write_csv: row width mismatch in " + path);
    emit(row);
  }
  if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

json report_json(const RunReport& report) {
  json j;
  j["scenario"] = report.scenario;
  j["seed"] = report.seed;
  j["config"] = report.config.is_null() ? json::object() : report.config;
  j["outputs"] = report.outputs;
  json checks = json::array();
  for (const auto& c : report.checks) {
    json e;
    e["name"] = c.name;
    e["invariant"] = c.invariant;
    e["tolerance"] = c.tolerance;
    e["measured"] = c.measured;
    e["pass"] = c.pass;
    checks.push_back(std::move(e));
  }
  j["checks"] = std::move(checks);
  j["pass"] = report.pass;
  j["wall_seconds"] = nullptr;  // kept out of the file so reruns stay byte-identical
  return j;
}

json trace_json(const pipeline::PipelineTrace& trace) {
  json j;
  json steps = json::array();
  for (const auto& s : trace.steps) {
    json e;
    e["index"] = s.index;
    e["t_lo"] = s.t_lo;
    e["t_hi"] = s.t_hi;
    e["theta"] = s.theta;
    e["input_defect"] = s.input_defect;
    e["c1_defect"] = s.c1_defect;
    e["margin_before"] = s.margin_before;
    e["margin_after"] = s.margin_after;
    e["n_along_z"] = s.n_along_z;
    e["retries"] = s.retries;
    steps.push_back(std::move(e));
  }
  j["steps"] = std::move(steps);
  j["final_n_along_z"] = trace.final_n_along_z;
  j["final_min_margin"] = trace.final_min_margin;
  j["final_pullback_mismatch"] = trace.final_pullback_mismatch;
  j["final_metric_drift"] = trace.final_metric_drift;
  j["completed"] = trace.completed;
  j["failure"] = trace.failure;
  return j;
}

void write_json(const std::string& path, const json& payload) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_json: cannot open " + path);
  out << payload.dump(2) << '\n';
  if (!out) throw std::runtime_error("write_json: write failed for " + path);
}

}  // namespace tamekit::reports
