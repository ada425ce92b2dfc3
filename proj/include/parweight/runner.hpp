#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace parweight {

/// Parses TOML (by extension .toml) or JSON into one JSON tree. Throws Config.
nlohmann::json load_config(const std::string& path);
nlohmann::json parse_config(const std::string& text, bool toml);

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config's seed
  std::string out_dir;                // empty: nothing written
};

struct RunResult {
  nlohmann::json report;  // deterministic given (config, seed)
  double seconds = 0.0;
};

/// Validates the config, runs the named operation and, with an output
/// directory, writes report.json, timing.json and any CSV field dumps.
/// Throws Error; kind Config/InvalidArgument etc. for validation problems.
RunResult run_config(const nlohmann::json& config, const RunOptions& opts);

struct SuiteResult {
  nlohmann::json report;
  bool passed = false;
  double seconds = 0.0;
};

std::vector<std::string> suite_names();

/// Property bundles on the reference grid (16 x 64, dt = 1/64, p = 2).
SuiteResult run_suite(const std::string& name, const RunOptions& opts);

/// Exit-code class for an exception: 2 for invalid input, 3 for numeric failures.
int exit_code_for(const std::exception& e);

}  // namespace parweight
