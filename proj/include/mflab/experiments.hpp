#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mflab/config.hpp"

namespace mflab {

struct PresetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Structured result of a scenario preset: echoed parameters, named
/// metrics, pass/fail verdicts with tolerance echo, and provenance.
/// Reports are self-contained: re-running from the echoed parameters
/// reproduces every metric bit-exactly.
struct ExperimentReport {
  std::string name;
  nlohmann::ordered_json parameters;

  std::map<std::string, double> metrics;
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  std::vector<std::string> logscale_series;

  struct Verdict {
    bool pass = false;
    std::string metric;   // name of the metric the verdict references
    double value = 0.0;
    double tolerance = 0.0;
    std::string relation;  // e.g. "<=", ">=", "all finite and <= ..."
  };
  std::map<std::string, Verdict> verdicts;

  std::uint64_t seed = 0;
  double runtime_seconds = 0.0;
  double dt = 0.0;
  std::string grid_desc;

  bool all_pass() const;
  void verdict(const std::string& name, const std::string& metric, double value,
               const std::string& relation, double tolerance, bool pass);
  nlohmann::ordered_json to_json() const;
};

/// Execute a preset by name. Unknown names raise PresetError.
ExperimentReport run_experiment(const std::string& name,
                                const RunConfig& config);

std::vector<std::string> preset_names();

/// Self-contained gnuplot script plotting the report's series from CSV
/// files named <report>_<series>.csv next to the script; decay metrics get
/// semilog axes. Deterministic given the report.
std::string emit_plot_script(const ExperimentReport& report);

}  // namespace mflab
