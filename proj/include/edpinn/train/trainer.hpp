#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "edpinn/controlfn/schedule.hpp"
#include "edpinn/network/model.hpp"
#include "edpinn/pde/problem.hpp"
#include "edpinn/train/loss.hpp"
#include "edpinn/train/optim.hpp"

namespace edpinn::train {

struct TrainConfig {
  int adam_epochs = 5000;
  double adam_lr = 1e-3;
  int lbfgs_memory = 50;
  int max_iterations = 25000;  // Adam epochs plus L-BFGS iterations
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  double gradient_tol = 1e-9;
  double relative_tol = 1e-12;
  std::uint64_t seed = 0;
  LossWeights weights;
  pde::SampleCounts counts;
  pde::SamplingStrategy strategy = pde::SamplingStrategy::uniform;
  double divergence_factor = 1e6;
  Eigen::Index chunk = 256;  // points per evaluator pass; small keeps buffers in cache
  /// Residual points per Adam step; 0 means full batch. The supervised points
  /// join every mini-batch and L-BFGS always runs on the full batch.
  int adam_batch = 0;

  void validate() const;
};

/// How each later interval's control function is built.
struct MethodSpec {
  enum class Kind { conventional, strong, weak, adaptive, custom };
  Kind kind = Kind::strong;
  int weak_m = 5;
  double initial_logit = 0.0;
  std::string custom_id;     // control library id (s1..s5, w1..w5) for Kind::custom
  int smoothness_order = 0;  // 0: 1, or 2 when the residual has u_tt

  controlfn::ControlFunction make(double t_p, double t_end, const pde::PdeProblem& problem) const;
  std::string label() const;
};

struct HistoryRow {
  int iteration = 0;
  double total = 0.0;
  double supervised = 0.0;
  double residual = 0.0;
  double t_f = 0.0;  // NaN for non-adaptive intervals
};

struct TrainReport {
  int interval = 0;
  double t_lo = 0.0, t_hi = 0.0;
  LossValue final_loss;
  int adam_iterations = 0;
  int lbfgs_iterations = 0;
  int evaluations = 0;
  std::vector<HistoryRow> history;
  double wall_seconds = 0.0;
  std::optional<double> final_t_f;
  std::string termination;
};

using LogFn = std::function<void(const std::string&)>;

/// Seed for interval i, so that a resumed run draws the same samples as an
/// uninterrupted one.
std::uint64_t interval_seed(std::uint64_t seed, int interval);

/// Trains a fresh network on [0, t_end] from Xavier initialization.
TrainReport train_first_interval(network::ParamSet& params, const pde::PdeProblem& problem,
                                 const network::InputEmbedding& embedding, double t_end, const TrainConfig& config,
                                 const LogFn& log = {});

/// Trains a zero-initialized correction on (schedule.end(), control.t_end()]
/// and freezes it into the schedule.
TrainReport train_interval(controlfn::IntervalSchedule& schedule, const controlfn::ControlFunction& control,
                           const pde::PdeProblem& problem, const network::InputEmbedding& embedding,
                           const TrainConfig& config, int interval_index, const LogFn& log = {});

struct SequentialResult {
  controlfn::IntervalSchedule schedule;
  std::vector<TrainReport> reports;
};

/// Called after each interval is frozen.
using IntervalHook = std::function<void(const controlfn::IntervalSchedule&, const TrainReport&)>;

/// Intervals [b_0, b_1], ..., [b_{n-1}, b_n] in order, b_0 = 0. With
/// `resume`, intervals already in that schedule are skipped.
SequentialResult train_sequential(const pde::PdeProblem& problem, const network::InputEmbedding& embedding,
                                  const std::vector<double>& boundaries, const TrainConfig& config,
                                  const MethodSpec& method, const IntervalHook& hook = {},
                                  std::optional<controlfn::IntervalSchedule> resume = std::nullopt,
                                  const LogFn& log = {});

}  // namespace edpinn::train
