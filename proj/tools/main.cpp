#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mflab/acceptance.hpp"
#include "mflab/checkpoint.hpp"
#include "mflab/experiments.hpp"
#include "mflab/records.hpp"

namespace {

int effective_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MFLAB_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  return 0;  // library default (all cores)
}

void apply_workers(int workers) {
#ifdef _OPENMP
  if (workers > 0) omp_set_num_threads(workers);
#else
  (void)workers;
#endif
}

void apply_set_override(mflab::RunConfig& cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos)
    throw mflab::ConfigError("--set expects key=value, got '" + kv + "'");
  // route through the config parser for validation and range checks
  const std::string key = kv.substr(0, eq);
  std::string val = kv.substr(eq + 1);
  if (key == "scenario" || key == "out_dir")
    val = "\"" + val + "\"";
  mflab::RunConfig probe = cfg;
  const std::string text =
      mflab::serialize_config(probe) + key + " = " + val + "\n";
  cfg = mflab::parse_config_text(text);
}

int do_run(const std::string& scenario, const std::string& config_path,
           const std::vector<std::string>& sets, const std::string& out_dir,
           std::uint64_t seed, bool seed_given, int workers, bool emit_plots) {
  mflab::RunConfig cfg;
  if (!config_path.empty()) cfg = mflab::parse_config_file(config_path);
  cfg.scenario = scenario;
  for (const auto& kv : sets) apply_set_override(cfg, kv);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (seed_given) cfg.seed = seed;
  if (workers > 0) cfg.workers = workers;
  if (emit_plots) cfg.emit_plots = true;
  apply_workers(effective_workers(cfg.workers));

  std::filesystem::create_directories(cfg.out_dir);
  // effective config echo next to the outputs
  {
    std::ofstream echo(cfg.out_dir + "/config.toml");
    echo << mflab::serialize_config(cfg);
  }

  const mflab::ExperimentReport rep = mflab::run_experiment(cfg.scenario, cfg);

  {
    std::ofstream json(cfg.out_dir + "/report.json");
    json << rep.to_json().dump(2) << "\n";
  }
  for (const auto& [sname, pts] : rep.series) {
    mflab::CsvWriter csv(cfg.out_dir + "/" + rep.name + "_" + sname + ".csv",
                         {sname});
    for (const auto& [t, v] : pts) csv.row(t, {v});
  }
  if (cfg.emit_plots) {
    std::ofstream gp(cfg.out_dir + "/plots.gp");
    gp << mflab::emit_plot_script(rep);
  }

  std::cout << "preset " << rep.name << ": "
            << (rep.all_pass() ? "all verdicts pass" : "verdict FAILURE")
            << " (" << rep.verdicts.size() << " verdicts, "
            << static_cast<int>(rep.runtime_seconds) << " s)\n";
  for (const auto& [name, v] : rep.verdicts)
    std::cout << "  " << (v.pass ? "[pass] " : "[FAIL] ") << name << ": "
              << v.metric << " = " << v.value << " " << v.relation << " "
              << v.tolerance << "\n";
  std::cout << "report: " << cfg.out_dir << "/report.json\n";
  return rep.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mflab: mean-field and interacting-particle numerical laboratory"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run a scenario preset");
  std::string scenario, config_path, out_dir;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  bool emit_plots = false;
  int workers = 0;
  run->add_option("scenario", scenario, "preset name")->required();
  run->add_option("--config", config_path, "config file (TOML syntax)");
  run->add_option("--set", sets, "override key=value (repeatable)");
  run->add_option("--out", out_dir, "output directory");
  auto* seed_opt = run->add_option("--seed", seed, "RNG seed");
  run->add_option("--workers", workers, "worker thread count");
  run->add_flag("--emit-plots", emit_plots, "write a gnuplot script");

  // verify
  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  std::uint64_t vseed = 20260810;
  verify->add_option("--seed", vseed, "RNG seed");
  int vworkers = 0;
  verify->add_option("--workers", vworkers, "worker thread count");

  // inspect
  auto* inspect = app.add_subcommand("inspect", "print checkpoint metadata");
  std::string ckpt_path;
  inspect->add_option("checkpoint", ckpt_path, "checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed())
      return do_run(scenario, config_path, sets, out_dir, seed,
                    seed_opt->count() > 0, workers, emit_plots);
    if (verify->parsed()) {
      apply_workers(effective_workers(vworkers));
      const auto results = mflab::run_acceptance(vseed, std::cout);
      bool all = true;
      for (const auto& r : results) all = all && r.pass;
      std::cout << (all ? "acceptance: ALL CRITERIA PASS"
                        : "acceptance: FAILURES PRESENT")
                << "\n";
      return all ? 0 : 1;
    }
    if (inspect->parsed()) {
      const auto bytes = mflab::read_checkpoint_file(ckpt_path);
      std::cout << mflab::describe_checkpoint(bytes) << "\n";
      return 0;
    }
  } catch (const mflab::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const mflab::PresetError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
