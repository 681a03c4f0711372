#include "edpinn/controlfn/schedule.hpp"

#include <sstream>

namespace edpinn::controlfn {

IntervalSchedule::IntervalSchedule(network::ParamSet base, double base_end) : base_(std::move(base)), base_end_(base_end) {
  base_.validate();
  if (!(base_end > 0.0)) throw DomainError("first interval must end after t = 0");
}

std::vector<double> IntervalSchedule::boundaries() const {
  std::vector<double> b{0.0, base_end_};
  for (const auto& l : levels_) b.push_back(l.t_end);
  return b;
}

ActiveLevel IntervalSchedule::open_level(const ControlFunction& control) const {
  if (control.t_p() != end()) {
    std::ostringstream msg;
    msg << "new level must start at the schedule end " << end() << ", got T_p=" << control.t_p();
    throw DomainError(msg.str());
  }
  return {control, network::ParamSet::zeros_like(base_)};
}

void IntervalSchedule::freeze(ActiveLevel level) {
  if (level.control.t_p() != end()) throw DomainError("frozen level is not contiguous with the schedule");
  if (!(level.control.t_end() > level.control.t_p())) throw DomainError("frozen level has an empty interval");
  base_.require_same_shape(level.delta, "frozen correction");
  FrozenLevel f{level.control.t_p(), level.control.t_end(), std::move(level.control), std::move(level.delta)};
  levels_.push_back(std::move(f));
}

EffectiveLayer stack_eval(const IntervalSchedule& schedule, const ActiveLevel* active, std::size_t layer, double t,
                          bool allow_extrapolation) {
  const double domain_end = active ? active->control.t_end() : schedule.end();
  if (t > domain_end && !allow_extrapolation) {
    std::ostringstream msg;
    msg << "t=" << t << " lies beyond the last trained interval end " << domain_end;
    throw DomainError(msg.str());
  }
  if (layer >= schedule.base().layer_count()) throw ShapeError("layer index out of range");
  const network::Layer& base = schedule.base().layer(layer);
  EffectiveLayer e{base.weight,
                   Eigen::MatrixXd::Zero(base.weight.rows(), base.weight.cols()),
                   Eigen::MatrixXd::Zero(base.weight.rows(), base.weight.cols()),
                   base.bias,
                   Eigen::VectorXd::Zero(base.bias.size()),
                   Eigen::VectorXd::Zero(base.bias.size())};
  auto add = [&](const ControlFunction& control, const network::ParamSet& delta) {
    const ControlValues f = control.eval(t);
    if (f.value == 0.0 && f.d1 == 0.0 && f.d2 == 0.0) return;
    const network::Layer& d = delta.layer(layer);
    e.weight += f.value * d.weight;
    e.bias += f.value * d.bias;
    e.weight_dt += f.d1 * d.weight;
    e.bias_dt += f.d1 * d.bias;
    e.weight_dtt += f.d2 * d.weight;
    e.bias_dtt += f.d2 * d.bias;
  };
  for (const auto& level : schedule.levels()) add(level.control, level.delta);
  if (active) add(active->control, active->delta);
  return e;
}

}  // namespace edpinn::controlfn
