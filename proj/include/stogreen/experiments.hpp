#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace stogreen::experiments {

using json = nlohmann::json;

/// Invalid or incomplete experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Check {
  std::string name;
  bool passed{false};
  std::string detail;
};

/// CSV table; cells are preformatted so that output is byte-stable.
struct Table {
  std::string file;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct Plot {
  std::string file;
  std::string content;
};

struct Artifacts {
  json summary;  ///< resolved config, results, checks, warnings
  std::vector<Table> tables;
  std::vector<Plot> plots;
  std::vector<Check> checks;
  std::vector<std::string> warnings;

  bool passed() const;
};

inline const std::vector<std::string> kExperiments{"green",      "werner",       "lp_moments",   "joint",
                                                   "impurities", "cauchy_limit", "strat_schemes"};

/// Fills defaults and validates; throws ConfigError.
json resolve_config(const json& raw);

/// Runs the experiment named in a resolved config.
Artifacts run_experiment(const json& config);

/// Writes summary.json, CSVs and plots into `dir` (created if missing).
void write_artifacts(const Artifacts& artifacts, const std::filesystem::path& dir);

/// Shortest round-trip decimal form of a double.
std::string format_number(double v);

}  // namespace stogreen::experiments
