#pragma once

#include <functional>
#include <span>
#include <vector>

#include "edpinn/autodiff/tape.hpp"
#include "edpinn/autodiff/taylor.hpp"

namespace edpinn::ad {

using Jet = Taylor2<double>;
using VarJet = Taylor2<Var>;

struct DerivativeOrders {
  int x = 0;  // 0..3
  int t = 0;  // 0..2
};

/// Partial derivatives d^i/dx^i d^j/dt^j of a scalar field at one point.
class DerivativeTable {
 public:
  DerivativeTable(DerivativeOrders orders, const Jet& jet);

  double at(int i, int j) const;
  double value() const { return at(0, 0); }
  DerivativeOrders orders() const noexcept { return orders_; }

 private:
  DerivativeOrders orders_;
  std::vector<double> values_;
};

using InputFunction = std::function<Jet(const Jet& x, const Jet& t)>;

/// Exact (truncated-Taylor) derivatives of f at (x, t) up to the given orders.
DerivativeTable eval_with_input_derivs(const InputFunction& f, double x, double t, DerivativeOrders orders);

/// Loss recorded on a tape as a function of its parameter variables.
using TapedLoss = std::function<Var(std::span<const Var> params)>;

struct GradResult {
  double value = 0.0;
  std::vector<double> gradient;
};

/// Records `loss` on a fresh tape and returns d(loss)/d(params).
/// `parameter_count` is what the loss expects; a mismatch is a ShapeError.
GradResult grad_params(const TapedLoss& loss, std::span<const double> params, std::size_t parameter_count);

/// Piecewise polynomial in t with knots k_0 < ... < k_{n-1}; piece i covers
/// [k_{i-1}, k_i), piece 0 covers (-inf, k_0) and piece n covers [k_{n-1}, inf).
/// At a knot the right-hand piece is used.
struct PiecewisePolynomial {
  std::vector<double> knots;
  std::vector<std::vector<double>> pieces;  // ascending power coefficients

  std::size_t piece_index(double t) const;
};

template <class J>
J horner(std::span<const double> coeffs, const J& t) {
  J acc(0.0);
  for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * t + coeffs[i];
  return acc;
}

template <class J>
J piecewise(const PiecewisePolynomial& p, const J& t) {
  const auto idx = p.piece_index(value_of(t.value()));
  return horner<J>(p.pieces[idx], t);
}

}  // namespace edpinn::ad
