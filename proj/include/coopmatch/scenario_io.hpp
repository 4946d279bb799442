#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "coopmatch/sim.hpp"

namespace coopmatch {

struct OutputSpec {
  std::string dir = "out";
  std::string trace = "trace.csv";
  std::string summary = "summary.json";

  friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

struct ScenarioFile {
  Scenario scenario;
  OutputSpec output;
};

/// Parses a scenario document. `origin` prefixes diagnostics (usually the path).
/// Throws ParseError for malformed documents and ValidationError for
/// scenarios that violate a modelling assumption.
ScenarioFile parse_scenario(const nlohmann::json& doc, const std::string& origin = "<scenario>");
ScenarioFile parse_scenario_text(const std::string& text, const std::string& origin = "<scenario>");
ScenarioFile load_scenario_file(const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

/// Normalized document; parse_scenario(scenario_to_json(s)) == s.
nlohmann::json scenario_to_json(const Scenario& scn, const OutputSpec& output = {});

bool operator==(const Scenario& a, const Scenario& b);

enum class PaperInput {
  ramp,      // v = 0
  sinusoid,  // v = -w_1
};

/// Three-agent example on the four-node graph 0->1, 1<->2, 0->3.
Scenario paper_scenario(PaperInput input, ControlLaw law = ControlLaw::adaptive, std::uint64_t seed = 1);
Digraph paper_graph();

/// Delimited trace: header row, then one row per time step, 17 significant digits.
void write_trace_csv(const SimTrace& trace, const std::filesystem::path& path);
std::string trace_header(const SimTrace& trace);

nlohmann::json synthesis_to_json(const SynthesisResult& result);

struct ExportOptions {
  double tail_fraction = 0.2;
  double tolerance = 0.05;
};

struct ExitReport {
  int exit_code = 0;  // 0 ok, 1 tail criterion missed, 2 numeric blowup, 3 other failure
  std::string status;
  std::string message;
  std::optional<TrackingReport> tracking;
  std::optional<double> divergence_time;
  std::filesystem::path trace_path;
  std::filesystem::path summary_path;
};

/// Runs the scenario and writes the trace, the summary and the normalized
/// scenario into out_dir. Simulation errors become a nonzero exit code with
/// a summary describing them; filesystem errors propagate.
ExitReport run_and_export(const Scenario& scn, const std::filesystem::path& out_dir,
                          const ExportOptions& options = {}, const OutputSpec& names = {});

}  // namespace coopmatch
