#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "agser/evaluation.hpp"
#include "agser/pipeline.hpp"

namespace agser {

/// Process exit codes of the `agser` tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,     // unexpected failure
  kExitUsage = 2,        // bad flags, configuration, or a query too short to split
  kExitBackend = 3,      // backend transport or capacity failure
  kExitUndefined = 4,    // metric undefined (empty or single-class dataset)
  kExitData = 5,         // dataset unreadable, malformed or invalid
};

/// Everything a run depends on; embedded verbatim in every report.
struct RunConfig {
  PipelineConfig pipeline;
  std::string k_text = "2/3";
  std::optional<std::string> template_path;
  std::optional<std::string> question;
  std::optional<std::string> dataset;
  std::string out = "agser-report.json";
  std::size_t workers = 1;
  double threshold = 0.5;
  LabelMode label_mode = LabelMode::RougeThreshold;
  std::optional<std::string> compare;  // "resample"
  int n = 5;

  nlohmann::json to_json() const;
};

/// Path of the CSV written next to a JSON report.
std::string csv_path_for(const std::string& json_path);

/// Runs one `agser` command line (args excludes the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace agser
