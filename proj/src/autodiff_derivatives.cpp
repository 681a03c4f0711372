#include "edpinn/autodiff/derivatives.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace edpinn::ad {

DerivativeTable::DerivativeTable(DerivativeOrders orders, const Jet& jet) : orders_(orders) {
  values_.resize(static_cast<std::size_t>((orders.x + 1) * (orders.t + 1)));
  for (int i = 0; i <= orders.x; ++i)
    for (int j = 0; j <= orders.t; ++j) {
      const double v = (i <= jet.order_x() && j <= jet.order_t()) ? jet.derivative(i, j) : 0.0;
      if (!std::isfinite(v))
        throw OverflowError("non-finite derivative d^" + std::to_string(i) + "x d^" + std::to_string(j) + "t");
      values_[static_cast<std::size_t>(i * (orders.t + 1) + j)] = v;
    }
}

double DerivativeTable::at(int i, int j) const {
  if (i < 0 || j < 0 || i > orders_.x || j > orders_.t)
    throw DomainError("derivative (" + std::to_string(i) + "," + std::to_string(j) + ") was not requested");
  return values_[static_cast<std::size_t>(i * (orders_.t + 1) + j)];
}

DerivativeTable eval_with_input_derivs(const InputFunction& f, double x, double t, DerivativeOrders orders) {
  if (orders.x < 0 || orders.x > Jet::kMaxOrderX || orders.t < 0 || orders.t > Jet::kMaxOrderT)
    throw DomainError("requested derivative orders exceed (3, 2)");
  const Jet xj = Jet::variable_x(x, orders.x, orders.t);
  const Jet tj = Jet::variable_t(t, orders.x, orders.t);
  return DerivativeTable(orders, f(xj, tj));
}

GradResult grad_params(const TapedLoss& loss, std::span<const double> params, std::size_t parameter_count) {
  if (params.size() != parameter_count)
    throw ShapeError("parameter count mismatch: got " + std::to_string(params.size()) + ", loss expects " +
                     std::to_string(parameter_count));
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (double p : params) vars.push_back(tape.variable(p));
  const Var out = loss(vars);
  if (!std::isfinite(out.value())) throw OverflowError("non-finite loss value");
  return {out.value(), tape.gradient(out, vars)};
}

std::size_t PiecewisePolynomial::piece_index(double t) const {
  if (pieces.size() != knots.size() + 1) throw ShapeError("piecewise polynomial needs knots+1 pieces");
  // upper_bound: a knot belongs to the piece on its right.
  return static_cast<std::size_t>(std::upper_bound(knots.begin(), knots.end(), t) - knots.begin());
}

}  // namespace edpinn::ad
