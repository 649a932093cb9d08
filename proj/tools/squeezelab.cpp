// squeezelab: experiment runner for the information-recycling interferometer.
//
// Exit codes: 0 success, 2 configuration error, 3 engine error, 4 validation failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "squeezelab/error.hpp"
#include "squeezelab/harness.hpp"
#include "squeezelab/parallel.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitEngine = 3;
constexpr int kExitValidation = 4;

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw squeezelab::Error(squeezelab::ErrorKind::config, "cannot write " + path);
  out << text;
  if (!out) throw squeezelab::Error(squeezelab::ErrorKind::config, "write to " + path + " failed");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace squeezelab;

  CLI::App app{"Phase-space simulation of an information-recycling atom interferometer"};
  std::string experiment_name;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> trajectories;
  std::string engine_name;
  std::string out_path;
  std::string format_name;
  std::optional<unsigned> threads;
  bool timing = false;

  app.add_option("experiment", experiment_name,
                 "fig3_bs_sweep | fig4_tmm_sweep | fig5_qcrb_compare | fig6_min_vs_r | single_point | validate")
      ->required();
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--trajectories", trajectories, "trajectories per simulated point");
  app.add_option("--engine", engine_name, "tw | pp | both");
  app.add_option("--out", out_path, "output file (default: standard output)");
  app.add_option("--format", format_name, "csv | json");
  app.add_option("--threads", threads, std::string("worker count (overrides ") + kThreadsEnv + ")");
  app.add_flag("--timing", timing, "record wall times (output is then not reproducible)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    ExperimentConfig config = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    const auto experiment = parse_experiment(experiment_name);
    if (!experiment) throw Error(ErrorKind::config, "unknown experiment " + experiment_name);
    config.experiment = *experiment;
    if (seed) config.master_seed = *seed;
    if (trajectories) config.n_trajectories = *trajectories;
    if (!engine_name.empty()) {
      const auto engine = parse_engine(engine_name);
      if (!engine) throw Error(ErrorKind::config, "engine must be tw, pp or both");
      config.engine = *engine;
    }
    if (!out_path.empty()) config.output_path = out_path;
    if (!format_name.empty()) {
      const auto format = parse_format(format_name);
      if (!format) throw Error(ErrorKind::config, "format must be csv or json");
      config.output_format = *format;
    }
    if (timing) config.timing = true;
    if (threads && *threads == 0) throw Error(ErrorKind::config, "--threads must be positive");

    const Executor executor(resolve_thread_count(threads));
    std::clog << "squeezelab " << kBuildVersion << ": " << to_string(config.experiment) << " on "
              << executor.threads() << " worker(s), seed " << config.master_seed << '\n';
    const RunContext ctx{&executor, &std::clog};
    const RunResult result = run_experiment(config, ctx);

    const std::string doc = render_output(result);
    if (config.output_path.empty()) {
      std::cout << doc << std::flush;
    } else {
      write_file(config.output_path, doc);
      if (config.output_format == OutputFormat::csv) write_file(config.output_path + ".meta.json", render_meta(result));
      std::clog << "wrote " << config.output_path << '\n';
    }
    if (result.report && !result.report->all_passed()) {
      std::clog << "validation failed\n";
      return kExitValidation;
    }
    return 0;
  } catch (const Error& e) {
    std::clog << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::config ? kExitConfig : kExitEngine;
  } catch (const std::exception& e) {
    std::clog << "error: " << e.what() << '\n';
    return kExitEngine;
  }
}
