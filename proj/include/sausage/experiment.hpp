#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sausage/errors.hpp"
#include "sausage/geometry.hpp"
#include "sausage/harness.hpp"

namespace sausage {

enum class Experiment {
  Capacity,
  MeanExpansion,
  Clt,
  StrongApprox,
  Clock,
  Lil,
  Asclt,
  IntersectionGrowth,
  Scaling,
};
const char* experiment_name(Experiment e);

// Validation failure pointing at a config line (0 when no line applies).
class ConfigLineError : public ConfigError {
 public:
  ConfigLineError(std::size_t line, const std::string& what)
      : ConfigError(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::Capacity;
  Shape shape = Shape::ball(1.0);
  std::uint64_t base_seed = 1;
  std::uint32_t replicas = 1;
  std::vector<double> t_grid;
  double step_h = 0.01;
  double inner_step_H = 0.5;
  double ilt_outer_step = 0.05;
  double denom_floor = 1e-3;
  std::size_t n_samples_volume = 20000;
  std::string output_dir = "out";
  Centering centering = Centering::EmpiricalMean;
  // capacity
  double launch_radius = 20.0;
  std::size_t n_trials = 10000;
  double horizon = 1e6;
  double min_step = 1e-4;
  // mean_expansion
  bool halving_study = false;
  // strong_approx
  std::optional<double> coupled_ball_radius;
  // clock
  std::optional<double> mollifier_rho;
  // intersection_growth
  double horizon_factor = 50.0;
  double sensitivity_factor = 25.0;

  // Canonical "key = value" text of the parsed file (sorted keys).
  std::string canonical;
};

// Parses flat `key = value` text ('#' starts a comment) and validates every
// downstream contract. Throws ConfigLineError.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

// Git blob hash (SHA-1 of "blob <len>\0<text>"), lowercase hex.
std::string content_hash(const std::string& text);

// One row per (replica, checkpoint); `values` follow table.columns.
struct SampleRow {
  std::uint32_t replica = 0;
  double t = 0.0;
  std::vector<double> values;
};

struct SampleTable {
  std::vector<std::string> columns;  // after `replica,t`
  std::vector<SampleRow> rows;
  std::size_t column(const std::string& name) const;
  bool has(const std::string& name) const;
};

// Per-replica raw columns produced by simulate_replica.
std::vector<std::string> raw_columns(const ExperimentConfig& cfg);
// Simulates one replica; its randomness depends only on (base_seed, replica).
std::vector<SampleRow> simulate_replica(const ExperimentConfig& cfg, std::uint32_t replica);
// Adds derived columns (centering, residuals) once all replicas are present.
SampleTable finalize_samples(const ExperimentConfig& cfg, SampleTable raw);
std::vector<StatReport> compute_reports(const ExperimentConfig& cfg, const SampleTable& table);

// Shortest round-trip formatting, used for every number written to CSV.
std::string format_number(double v);
void write_table_csv(std::ostream& out, const SampleTable& table);
SampleTable read_table_csv(std::istream& in);

// Exit codes of the command-line runner.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailedVerdict = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitRuntime = 3;

struct RunOptions {
  std::optional<std::size_t> stop_after;  // checkpoint after this many new replicas
  std::size_t threads = 0;                // 0: SAUSAGE_LAB_THREADS or all cores
};

// `sausage-lab run|resume|report`; messages go to `log`.
int run_command(const std::string& config_path, const RunOptions& opts, std::ostream& log);
int resume_command(const std::string& manifest_path, const RunOptions& opts, std::ostream& log);
int report_command(const std::string& samples_path, std::ostream& log);

}  // namespace sausage
