#pragma once

#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edpinn/network/model.hpp"
#include "edpinn/pde/problem.hpp"

namespace edpinn::oracle {

/// Ground truth sampled on a uniform space grid and a time grid.
struct ReferenceField {
  std::string problem;
  std::vector<double> x;  // strictly increasing
  std::vector<double> t;  // strictly increasing
  Eigen::MatrixXd u;      // x.size() x t.size()
  std::string provenance;
  int modes = 0;
  double dt = 0.0;
  /// Relative L2 change of the final field under doubled modes and halved
  /// dt; NaN when not measured.
  double self_convergence = std::numeric_limits<double>::quiet_NaN();

  /// All grid points, time-major (every x for t_0, then t_1, ...), restricted
  /// to t_min <= t <= t_max.
  network::SpaceTimeBatch points(double t_min = -std::numeric_limits<double>::infinity(),
                                 double t_max = std::numeric_limits<double>::infinity()) const;
  /// Values in the same order as points().
  Eigen::RowVectorXd values(double t_min = -std::numeric_limits<double>::infinity(),
                            double t_max = std::numeric_limits<double>::infinity()) const;
};

double exact_convection(double x, double t, double beta);
ReferenceField exact_convection_field(double beta, int nx = 256, int nt = 101, double t_end = 1.0);

/// Evaluation times 0, t_end/(nt-1), ..., t_end.
std::vector<double> uniform_times(int nt, double t_end);

/// Modes used by default for each spectral problem.
int default_modes(pde::ProblemId id);
constexpr double kDefaultDt = 1e-4;

/// Fourier pseudospectral solve with fourth-order exponential time
/// differencing on the periodic domain [-1, 1). Every requested time must be
/// a multiple of dt. The field is sampled at nx equispaced points, which must
/// divide the mode count.
ReferenceField spectral_solve(pde::ProblemId id, int modes, double dt, std::span<const double> t_grid, int nx = 256);

/// Relative L2 change at the last time when modes double and dt halves.
double self_convergence(pde::ProblemId id, int modes, double dt, double t_end = 1.0, int nx = 256);

/// sqrt(sum (p - r)^2) / sqrt(sum r^2).
double l2_relative_error(std::span<const double> predictions, std::span<const double> reference);
double l2_relative_error(const Eigen::RowVectorXd& predictions, const Eigen::RowVectorXd& reference);

struct ErrorCurve {
  std::vector<double> t;
  std::vector<double> error;  // per time slice, over the space grid
  double overall = 0.0;
};

/// Model predictions on the reference grid, shaped like ReferenceField::u.
Eigen::MatrixXd predict_on_grid(const network::Model& model, const network::InputEmbedding& embedding,
                                const ReferenceField& reference);
ErrorCurve error_curve(const Eigen::MatrixXd& predictions, const ReferenceField& reference);
ErrorCurve error_curve(const network::Model& model, const network::InputEmbedding& embedding,
                       const ReferenceField& reference);

/// Reference fields on disk, keyed by (problem, modes, dt). The file is a
/// one-line JSON header followed by the field as row-major float64.
class ReferenceCache {
 public:
  explicit ReferenceCache(std::filesystem::path dir);
  /// Directory from EDPINN_CACHE_DIR, else ".edpinn_cache".
  static ReferenceCache from_environment();

  std::filesystem::path path_for(const std::string& problem, int modes, double dt) const;
  /// Loads a cached field or solves, measures self-convergence, and stores.
  ReferenceField spectral(pde::ProblemId id, int modes = 0, double dt = kDefaultDt);

  static void write(const ReferenceField& field, const std::filesystem::path& path);
  static ReferenceField read(const std::filesystem::path& path);

  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

/// Reference for any problem: exact for convection, cached spectral otherwise.
ReferenceField reference_for(const pde::PdeProblem& problem, ReferenceCache& cache);

}  // namespace edpinn::oracle
