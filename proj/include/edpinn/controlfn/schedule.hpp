#pragma once

#include <optional>
#include <span>
#include <vector>

#include "edpinn/controlfn/control_function.hpp"
#include "edpinn/network/params.hpp"

namespace edpinn::controlfn {

/// A completed (frozen) correction level on [t_begin, t_end].
struct FrozenLevel {
  double t_begin = 0.0;
  double t_end = 0.0;
  ControlFunction control;
  network::ParamSet delta;
};

/// The level currently being trained. Its delta starts at zero.
struct ActiveLevel {
  ControlFunction control;
  network::ParamSet delta;

  /// Trainable count: the delta plus one for an adaptive T_f.
  std::size_t parameter_count() const { return delta.parameter_count() + (control.trainable() ? 1 : 0); }
};

/// Stack of levels: base parameters on [0, T_1], then one frozen correction
/// per later interval. theta(t) = theta_0 + sum_i F_i(t) delta_i.
class IntervalSchedule {
 public:
  IntervalSchedule(network::ParamSet base, double base_end);

  const network::ParamSet& base() const noexcept { return base_; }
  network::ParamSet& base() noexcept { return base_; }
  std::span<const FrozenLevel> levels() const noexcept { return levels_; }
  double end() const noexcept { return levels_.empty() ? base_end_ : levels_.back().t_end; }
  double base_end() const noexcept { return base_end_; }
  std::vector<double> boundaries() const;

  /// Starts a new level on [end(), t_end] with a zero correction.
  ActiveLevel open_level(const ControlFunction& control) const;
  /// Appends a trained level. Its control must start at end().
  void freeze(ActiveLevel level);

 private:
  network::ParamSet base_;
  double base_end_;
  std::vector<FrozenLevel> levels_;
};

/// Effective weights and biases of one layer at time t, with their first
/// and second time derivatives.
struct EffectiveLayer {
  Eigen::MatrixXd weight, weight_dt, weight_dtt;
  Eigen::VectorXd bias, bias_dt, bias_dtt;
};

/// W_eff = W_0 + sum_i F_i(t) dW_i (+ F_active(t) dW_active).
/// Levels with F = F' = F'' = 0 at t are skipped, so values on completed
/// intervals do not depend on later corrections at all.
EffectiveLayer stack_eval(const IntervalSchedule& schedule, const ActiveLevel* active, std::size_t layer, double t,
                          bool allow_extrapolation = false);

}  // namespace edpinn::controlfn
