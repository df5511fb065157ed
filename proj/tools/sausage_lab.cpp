#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sausage/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo lab for Wiener sausages, capacities and intersection local times"};
  app.require_subcommand(1);

  std::string config_path, manifest_path, samples_path;
  std::optional<std::size_t> stop_after;
  std::size_t threads = 0;

  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config_path, "flat key = value config")->required();
  run->add_option("--stop-after", stop_after, "checkpoint after this many replicas");
  run->add_option("--threads", threads, "worker threads (default: SAUSAGE_LAB_THREADS or all cores)");

  auto* resume = app.add_subcommand("resume", "finish the missing replicas of a checkpointed run");
  resume->add_option("manifest", manifest_path, "manifest.json of the run")->required();
  resume->add_option("--stop-after", stop_after, "checkpoint after this many replicas");
  resume->add_option("--threads", threads, "worker threads");

  auto* report = app.add_subcommand("report", "recompute reports from a samples file");
  report->add_option("samples", samples_path, "samples.csv of a finished run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sausage::kExitInvalid;
  }

  sausage::RunOptions opts;
  opts.stop_after = stop_after;
  opts.threads = threads;
  try {
    if (*run) return sausage::run_command(config_path, opts, std::cout);
    if (*resume) return sausage::resume_command(manifest_path, opts, std::cout);
    return sausage::report_command(samples_path, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return sausage::kExitRuntime;
  }
}
