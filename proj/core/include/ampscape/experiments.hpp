#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ampscape/factored_solver.hpp"
#include "ampscape/landscape.hpp"
#include "ampscape/losses.hpp"
#include "ampscape/measurement_model.hpp"

namespace ampscape {

enum class SolveMethod { Factored, PhaseCut };

std::string_view to_string(SolveMethod m);
SolveMethod parse_solve_method(std::string_view s);

struct TruthSpec {
  /// gaussian: Gaussian direction (first effective_d coordinates for spectral
  /// ensembles); flat: entries +-1/sqrt(d); spiky: e_1.
  std::string kind = "gaussian";
  Index rank = 1;
  double norm = 1.0;
};

struct ExperimentConfig {
  std::string name = "sweep";
  EnsembleSpec ensemble;
  Index effective_d = 0;  // spectral ensembles: d in the lambda floor
  TruthSpec truth;
  LossFamily loss = LossFamily::Amplitude;
  std::optional<double> delta;  // absent: default_delta
  SolverConfig solver;          // p is taken from the grid
  std::vector<SolveMethod> methods{SolveMethod::Factored};
  std::vector<double> noise{0.0};
  std::vector<Index> p{3};
  std::vector<double> lambda{0.0};
  /// When nonempty, lambda = multiple * floor (spectral ensembles only).
  std::vector<double> lambda_floor_multiples;
  double lambda_floor_constant = 4.0;
  int trials = 1;
  std::uint64_t seed = 0;
  double success_threshold = 1e-4;
  std::string output;   // CSV path; empty: not written
  std::string summary;  // JSON path; empty: <output>.summary.json
  int threads = 0;      // 0: AMPSCAPE_THREADS or hardware concurrency

  void validate() const;
  bool spectral() const { return ensemble.dist == Distribution::SpectralGaussian; }
  /// lambda floor for spectral ensembles, 0 otherwise.
  double lambda_floor() const;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);
std::string experiment_config_to_json(const ExperimentConfig& config);

struct GridPoint {
  int index = 0;
  SolveMethod method = SolveMethod::Factored;
  double noise = 0.0;
  Index p = 3;
  double lambda = 0.0;
};

/// methods x noise x p x lambda, in that nesting order.
std::vector<GridPoint> expand_grid(const ExperimentConfig& config);

struct TrialRecord {
  int grid = 0;
  int trial = 0;
  std::string method;
  std::string theorem;
  std::uint64_t seed = 0;
  Index d = 0;
  Index n = 0;
  Index p = 0;
  std::string field;
  std::string loss;
  double noise = 0.0;
  double delta = 0.0;
  double lambda = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  double scale = 1.0;
  double grad_norm = 0.0;
  double min_curvature = 0.0;
  bool certified = false;
  double nuclear_error = 0.0;
  double relative_nuclear_error = 0.0;
  double vector_error = 0.0;
  bool weighted = false;
  int iterations = 0;
  int escapes = 0;
  Index clamped = 0;
  double xlam_bound_check = 0.0;
  double coherence = 0.0;  // ||x_*||_inf / ||x_*||
  std::string status;
  double wall_seconds = 0.0;  // summary only, never in the CSV
};

std::string trial_csv_header();
std::string trial_csv_row(const TrialRecord& r);

/// Per-trial seed shared by every grid point (paired comparisons).
std::uint64_t trial_seed(const ExperimentConfig& config, int trial);

/// Ground truth for one trial: gaussian (on the effective support for spectral
/// ensembles), flat +-1 entries, or spiky e_1; scaled to truth.norm.
CMatrix make_truth(const ExperimentConfig& config, std::uint64_t seed);

TrialRecord run_trial(const ExperimentConfig& config, const GridPoint& point, int trial);
/// First grid point.
TrialRecord run_trial(const ExperimentConfig& config, int trial);

struct SweepResult {
  std::vector<TrialRecord> records;  // sorted by (grid, trial)
  std::string summary_json;
};

/// Runs every (grid point, trial) pair in parallel, then writes the CSV and
/// summary when paths are configured. Throws IoError on write failure.
SweepResult run_sweep(const ExperimentConfig& config);

void write_sweep_csv(std::ostream& os, const std::vector<TrialRecord>& records);
std::string sweep_summary_json(const ExperimentConfig& config, const std::vector<TrialRecord>& records);

/// Least-squares slope of log(y) against log(x) over positive pairs; NaN
/// when fewer than two usable points.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Median of finite entries (NaN when none).
double median(std::vector<double> v);

int resolve_thread_count(int requested);

}  // namespace ampscape
