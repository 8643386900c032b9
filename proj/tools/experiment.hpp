#pragma once

// Experiment configs and the tasks they run. A task turns a config into JSON
// records (one per check), an optional series table and an optional log-log
// plot; it passes when every asserted check passes.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "json.hpp"

namespace pconvex::app {

using Json = nlohmann::ordered_json;

struct Series {
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;  // numbers or strings
};

struct PlotLine {
  std::string name;
  std::vector<double> x, y;
};

struct Plot {
  std::string title, xlabel, ylabel;
  std::vector<PlotLine> lines;
};

struct TaskResult {
  std::string task;
  std::vector<Json> records;
  std::optional<Series> series;
  std::optional<Plot> plot;
  std::map<std::string, std::string> files;  // extra artifacts: name -> contents
  bool pass = true;
};

inline const std::vector<std::string>& task_names() {
  static const std::vector<std::string> names{"check-psh", "boundary-convexity", "df-search", "kmh",  "solve",
                                              "bounds",    "cohomology",         "prekopa",   "algebra-battery"};
  return names;
}

/// Validates the whole config, then runs its task. seed_override replaces
/// [run] seed. Throws ConfigError for invalid configs; library errors raised
/// while computing become failing "error" records.
TaskResult run_experiment(const IniFile& ini, std::optional<std::uint64_t> seed_override = std::nullopt,
                          bool verbose = false);

/// Built-in weight and domain constructors with their parameters, in a fixed order.
std::string builtins_text();

std::string series_csv(const Series& s);
std::string plot_svg(const Plot& p);

}  // namespace pconvex::app
