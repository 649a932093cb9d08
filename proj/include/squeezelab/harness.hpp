#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "squeezelab/parallel.hpp"

namespace squeezelab {

inline constexpr std::string_view kBuildVersion = "0.1.0";
inline constexpr int kConfigSchemaVersion = 1;

enum class Experiment { fig3_bs_sweep, fig4_tmm_sweep, fig5_qcrb_compare, fig6_min_vs_r, single_point, validate };
enum class Engine { tw, pp, both };
enum class OutputFormat { csv, json };

std::string_view to_string(Experiment e) noexcept;
std::string_view to_string(Engine e) noexcept;
std::string_view to_string(OutputFormat f) noexcept;

/// Accepts the full names and the short aliases fig3..fig6, single.
std::optional<Experiment> parse_experiment(std::string_view name);
std::optional<Engine> parse_engine(std::string_view name);
std::optional<OutputFormat> parse_format(std::string_view name);

struct QGridSpec {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 0;
  bool log = true;

  std::vector<double> values() const;
};

/// Everything a run depends on. Empty lists mean "experiment default"; resolved()
/// fills them in so the output metadata always carries the values actually used.
struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  Experiment experiment = Experiment::single_point;
  std::int64_t n_atoms = 10000;
  std::vector<double> r_values;
  std::vector<double> q_values;
  std::optional<QGridSpec> q_grid;   // replaces the default q grid of the sweeps
  std::vector<double> r_opt_q_values;  // fig4: q values of the min-over-r points
  std::vector<double> pp_q_values;     // fig4: q values of the positive-P checks
  std::int64_t n_trajectories = 50000;
  std::int64_t pp_trajectories = 0;  // 0 means n_trajectories
  int pp_steps = 1024;
  std::uint64_t master_seed = 20150301;
  std::optional<Engine> engine;
  std::string output_path;  // empty writes to standard output
  OutputFormat output_format = OutputFormat::csv;
  bool timing = false;  // fill wall_time; output is then no longer reproducible

  /// Throws Error(config).
  void validate() const;
  ExperimentConfig resolved() const;
};

/// Throws Error(config) on malformed JSON, unknown keys or a wrong schema version.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& config, int indent = -1);

/// One output point. Numeric fields that do not apply are NaN and named in
/// flags as "na:<field>".
struct SweepRow {
  std::string engine;
  double r = 0.0;
  double q_target = 0.0;
  double q_measured = 0.0;
  double tau = 0.0;
  double delta_phi = 0.0;
  double delta_phi_se = 0.0;
  double delta_phi_atoms_only = 0.0;
  double qcrb = 0.0;
  double qcrb_se = 0.0;
  std::int64_t n_traj = 0;
  std::int64_t n_diverged = 0;
  double wall_time = 0.0;
  std::string series;
  std::string flags;  // ';'-separated

  /// Field-wise equality in which NaN equals NaN.
  friend bool operator==(const SweepRow& a, const SweepRow& b);
};

std::span<const std::string_view> sweep_row_fields();

/// RFC 4180 with CRLF line ends; doubles in shortest round-trip form.
std::string rows_to_csv(std::span<const SweepRow> rows);
/// Inverse of rows_to_csv. Throws Error(invalid_argument) on malformed input.
std::vector<SweepRow> rows_from_csv(std::string_view text);

struct ValidationCheck {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double limit = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool all_passed() const;
};

struct RunContext {
  const Executor* executor = nullptr;
  std::ostream* log = nullptr;
};

std::vector<SweepRow> run_fig3(const ExperimentConfig& config);
std::vector<SweepRow> run_fig4(const ExperimentConfig& config, const RunContext& ctx);
std::vector<SweepRow> run_fig5(const ExperimentConfig& config, const RunContext& ctx);
std::vector<SweepRow> run_fig6(const ExperimentConfig& config, const RunContext& ctx);
std::vector<SweepRow> run_single_point(const ExperimentConfig& config, const RunContext& ctx);
ValidationReport run_validate(const ExperimentConfig& config, const RunContext& ctx);

struct RunResult {
  ExperimentConfig config;  // resolved
  std::vector<SweepRow> rows;
  std::optional<ValidationReport> report;
  double wall_time = 0.0;
};

/// Resolves and validates the config, then dispatches on the experiment.
RunResult run_experiment(const ExperimentConfig& config, const RunContext& ctx);

/// The data document: CSV rows, or JSON {"meta", "rows"} / {"meta", "checks"}.
std::string render_output(const RunResult& result);
/// The meta object alone; written next to CSV output as <out>.meta.json.
std::string render_meta(const RunResult& result);

}  // namespace squeezelab
