#include "mflab/experiments.hpp"

#include <algorithm>

#include "mflab/records.hpp"

namespace mflab {

bool ExperimentReport::all_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(),
                     [](const auto& kv) { return kv.second.pass; });
}

void ExperimentReport::verdict(const std::string& vname,
                               const std::string& metric, double value,
                               const std::string& relation, double tolerance,
                               bool pass) {
  metrics[metric] = value;
  verdicts[vname] = Verdict{pass, metric, value, tolerance, relation};
}

nlohmann::ordered_json ExperimentReport::to_json() const {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["parameters"] = parameters;
  j["provenance"] = {{"seed", seed},
                     {"runtime_seconds", runtime_seconds},
                     {"dt", dt},
                     {"grid", grid_desc}};
  nlohmann::ordered_json jm;
  for (const auto& [k, v] : metrics) jm[k] = v;
  j["metrics"] = jm;
  nlohmann::ordered_json jv;
  for (const auto& [k, v] : verdicts) {
    jv[k] = {{"pass", v.pass},
             {"metric", v.metric},
             {"value", v.value},
             {"relation", v.relation},
             {"tolerance", v.tolerance}};
  }
  j["verdicts"] = jv;
  nlohmann::ordered_json js;
  for (const auto& [k, pts] : series) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [t, v] : pts) arr.push_back({t, v});
    js[k] = arr;
  }
  j["series"] = js;
  j["logscale_series"] = logscale_series;
  j["all_pass"] = all_pass();
  return j;
}

std::string emit_plot_script(const ExperimentReport& report) {
  std::string out;
  out += "# gnuplot script for preset '" + report.name + "'\n";
  if (report.series.empty()) {
    out += "# no series metrics in this report\n";
    return out;
  }
  out += "set datafile separator ','\n";
  out += "set key top right\n";
  bool first_plot = true;
  for (const auto& [sname, pts] : report.series) {
    (void)pts;
    const bool logscale =
        std::find(report.logscale_series.begin(), report.logscale_series.end(),
                  sname) != report.logscale_series.end();
    out += "\nset title '" + report.name + ": " + sname + "'\n";
    out += logscale ? "set logscale y\n" : "unset logscale y\n";
    out += "set xlabel 't'\n";
    out += "plot '" + report.name + "_" + sname + ".csv' using 1:2 skip 1 "
           "with linespoints title '" + sname + "'\n";
    out += "pause -1\n";
    first_plot = false;
  }
  (void)first_plot;
  return out;
}

// preset registry lives in presets.cpp
ExperimentReport run_preset(const std::string& name, const RunConfig& config);
std::vector<std::string> preset_name_list();

ExperimentReport run_experiment(const std::string& name,
                                const RunConfig& config) {
  const auto names = preset_name_list();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw PresetError("preset not found: " + name);
  return run_preset(name, config);
}

std::vector<std::string> preset_names() { return preset_name_list(); }

}  // namespace mflab
