#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mflab/experiments.hpp"

using namespace mflab;

namespace {
RunConfig defaults() {
  RunConfig c;
  c.scenario = "test";
  c.seed = 20260810;
  return c;
}
}  // namespace

TEST_CASE("unknown preset raises a preset-not-found error") {
  CHECK_THROWS_AS(run_experiment("unknown_name", defaults()), PresetError);
  const auto names = preset_names();
  CHECK(names.size() == 9);
}

TEST_CASE("two-vortex preset: radius oracle verdict and determinism") {
  const auto rep = run_experiment("vortex_two_particle", defaults());
  CHECK(rep.all_pass());
  CHECK(rep.metrics.count("radius_ratio") == 1);
  CHECK(rep.verdicts.at("radius_decay_oracle").tolerance == 1e-6);

  // re-running from the echoed parameters reproduces metrics bit-exactly
  const auto rep2 = run_experiment("vortex_two_particle", defaults());
  for (const auto& [k, v] : rep.metrics)
    CHECK(rep2.metrics.at(k) == v);
}

TEST_CASE("bakry-emery preset passes its exactness verdicts") {
  const auto rep = run_experiment("bakry_emery_gaussian", defaults());
  CHECK(rep.verdicts.at("formula_exactness").pass);
  CHECK(rep.verdicts.at("grid_scan_matches").pass);
  CHECK(rep.metrics.at("max_abs_error_lattice") <= 1e-12);
}

TEST_CASE("verdict logic is pure and reports serialize") {
  const auto rep = run_experiment("vortex_two_particle", defaults());
  const auto j = rep.to_json();
  CHECK(j["name"] == "vortex_two_particle");
  CHECK(j.contains("verdicts"));
  CHECK(j.contains("metrics"));
  CHECK(j["all_pass"].is_boolean());
  // every verdict references a metric present in the report
  for (const auto& [vname, v] : rep.verdicts) {
    (void)vname;
    CHECK(rep.metrics.count(v.metric) == 1);
  }
}

TEST_CASE("plot script emission") {
  const auto rep = run_experiment("bakry_emery_gaussian", defaults());
  const auto script = emit_plot_script(rep);
  CHECK(script.find("gnuplot") != std::string::npos);
  CHECK(script.find("lsi_scan_vs_t") != std::string::npos);
  CHECK(script.find(".csv") != std::string::npos);
  // deterministic
  CHECK(emit_plot_script(rep) == script);

  // a report without series yields a comment-only script
  ExperimentReport empty;
  empty.name = "empty";
  const auto s2 = emit_plot_script(empty);
  for (const auto& line : {s2}) CHECK(line.rfind("#", 0) == 0);
  CHECK(s2.find("plot") == std::string::npos);
}

TEST_CASE("riesz convolution bounds preset") {
  const auto rep = run_experiment("riesz_convolution_bounds", defaults());
  for (const auto& [name, v] : rep.verdicts) {
    INFO(name, " value=", v.value, " tol=", v.tolerance);
    CHECK(v.pass);
  }
}
