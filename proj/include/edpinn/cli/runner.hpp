#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "edpinn/cli/config.hpp"
#include "edpinn/controlfn/schedule.hpp"
#include "edpinn/oracle/oracle.hpp"
#include "edpinn/train/trainer.hpp"
#include "json.hpp"

namespace edpinn::cli {

struct RunSummary {
  std::string name;
  std::string method;
  double overall_l2 = 0.0;
  double interpolation_l2 = 0.0;  // t <= end of the trained window
  std::optional<double> extrapolation_l2;  // t beyond it, when evaluated
  double trained_end = 0.0;
  /// Largest |u_full - u_prefix| over probe points inside each earlier
  /// window; absent for a single interval.
  std::optional<double> reproduction_max_diff;
  int iterations = 0;
  double wall_seconds = 0.0;
  std::vector<double> final_t_f;  // adaptive intervals only
  std::string reference_provenance;
  std::optional<double> reference_self_convergence;
  oracle::ErrorCurve curve;

  nlohmann::json to_json() const;
};

/// Exact field for convection, cached spectral field otherwise. Throws
/// OracleError when no reference exists for the configured problem.
oracle::ReferenceField reference_for_config(const ExperimentConfig& config, oracle::ReferenceCache& cache);

struct RunOptions {
  std::optional<std::filesystem::path> resume;  // checkpoint to continue from
  std::ostream* log = nullptr;
};

/// Trains, evaluates against the reference and writes every artifact into
/// config.output: config.json, checkpoint.json (plus one per interval),
/// loss_history.csv, tf_trajectory.csv (adaptive), solution.csv,
/// pointwise_error.csv, error_curve.csv and summary.json.
RunSummary run_experiment(const ExperimentConfig& config, oracle::ReferenceCache& cache, const RunOptions& options = {});

/// Metrics for a trained schedule. Writes the solution, error and summary
/// files when out_dir is given.
RunSummary evaluate_schedule(const ExperimentConfig& config, const controlfn::IntervalSchedule& schedule,
                             const oracle::ReferenceField& reference,
                             const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// Max |u_full - u_prefix| on random points of each completed window.
double reproduction_check(const controlfn::IntervalSchedule& schedule, const network::InputEmbedding& embedding,
                          const pde::PdeProblem& problem, int points, std::uint64_t seed);

/// Runs every point of the grid spanned by doc["sweep"]["axes"] (dotted key
/// -> list of values) into <output>/<label>, recording failures and moving
/// on. Writes <output>/aggregate.csv and aggregate_curves.csv. Returns the
/// number of failed runs.
int run_sweep(const nlohmann::json& doc, const std::filesystem::path& base_dir, oracle::ReferenceCache& cache,
              std::ostream* log = nullptr);

void write_history_csv(const std::filesystem::path& path, const std::vector<train::TrainReport>& reports);
void write_tf_csv(const std::filesystem::path& path, const std::vector<train::TrainReport>& reports);

/// Reads the solution CSV back and recomputes the relative L2 error.
double l2_from_solution_csv(const std::filesystem::path& path);

}  // namespace edpinn::cli
