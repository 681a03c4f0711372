#include <cmath>
#include <vector>

#include "doctest.h"
#include "edpinn/autodiff/derivatives.hpp"
#include "edpinn/controlfn/control_function.hpp"
#include "edpinn/errors.hpp"

using namespace edpinn;
using namespace edpinn::ad;

TEST_CASE("input derivatives of x^2 t") {
  const auto table = eval_with_input_derivs([](const Jet& x, const Jet& t) { return x * x * t; }, 2.0, 3.0, {2, 1});
  CHECK(table.at(0, 0) == 12.0);
  CHECK(table.at(1, 0) == 12.0);
  CHECK(table.at(2, 0) == 6.0);
  CHECK(table.at(0, 1) == 4.0);
  CHECK(table.at(1, 1) == 4.0);
  CHECK(table.at(2, 1) == 2.0);
  CHECK_THROWS_AS(table.at(3, 0), DomainError);
}

TEST_CASE("input derivatives of the convection wave") {
  const auto table =
      eval_with_input_derivs([](const Jet& x, const Jet& t) { return sin(x - t * 40.0); }, 0.0, 0.0, {1, 1});
  CHECK(table.value() == 0.0);
  CHECK(table.at(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(table.at(0, 1) == doctest::Approx(-40.0).epsilon(1e-15));
}

TEST_CASE("cubic polynomials are exact to rounding") {
  // f = 3x^3 - 2x^2 t + x t^2 - 7
  auto f = [](const Jet& x, const Jet& t) { return x * x * x * 3.0 - x * x * t * 2.0 + x * t * t - 7.0; };
  const double x = 0.7, t = -1.3;
  const auto d = eval_with_input_derivs(f, x, t, {3, 2});
  CHECK(d.at(0, 0) == doctest::Approx(3 * x * x * x - 2 * x * x * t + x * t * t - 7).epsilon(1e-15));
  CHECK(d.at(1, 0) == doctest::Approx(9 * x * x - 4 * x * t + t * t).epsilon(1e-15));
  CHECK(d.at(2, 0) == doctest::Approx(18 * x - 4 * t).epsilon(1e-15));
  CHECK(d.at(3, 0) == doctest::Approx(18.0).epsilon(1e-15));
  CHECK(d.at(0, 1) == doctest::Approx(-2 * x * x + 2 * x * t).epsilon(1e-15));
  CHECK(d.at(0, 2) == doctest::Approx(2 * x).epsilon(1e-15));
  CHECK(d.at(1, 1) == doctest::Approx(-4 * x + 2 * t).epsilon(1e-15));
  CHECK(d.at(1, 2) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("transcendental jets match central differences") {
  auto f = [](const Jet& x, const Jet& t) { return tanh(x * 0.8 + t * t * 0.3) * exp(x * t * 0.5) / (x * x + 1.0); };
  auto plain = [](double x, double t) { return std::tanh(0.8 * x + 0.3 * t * t) * std::exp(0.5 * x * t) / (x * x + 1); };
  const double x = 0.4, t = 0.9;
  const auto d = eval_with_input_derivs(f, x, t, {3, 2});
  CHECK(d.value() == doctest::Approx(plain(x, t)).epsilon(1e-15));
  const double h1 = 1e-5, h2 = 1e-4, h3 = 1e-3;
  const double ux = (plain(x + h1, t) - plain(x - h1, t)) / (2 * h1);
  const double ut = (plain(x, t + h1) - plain(x, t - h1)) / (2 * h1);
  const double uxx = (plain(x + h2, t) - 2 * plain(x, t) + plain(x - h2, t)) / (h2 * h2);
  const double utt = (plain(x, t + h2) - 2 * plain(x, t) + plain(x, t - h2)) / (h2 * h2);
  // Fourth-order central stencil; the second-order one has O(h^2) truncation near 1e-5 here.
  const double uxxx = (-plain(x + 3 * h3, t) + 8 * plain(x + 2 * h3, t) - 13 * plain(x + h3, t) +
                       13 * plain(x - h3, t) - 8 * plain(x - 2 * h3, t) + plain(x - 3 * h3, t)) /
                      (8 * h3 * h3 * h3);
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
  CHECK(rel(d.at(1, 0), ux) <= 1e-6);
  CHECK(rel(d.at(0, 1), ut) <= 1e-6);
  CHECK(rel(d.at(2, 0), uxx) <= 1e-6);
  CHECK(rel(d.at(0, 2), utt) <= 1e-6);
  CHECK(rel(d.at(3, 0), uxxx) <= 1e-6);
}

TEST_CASE("non-smooth primitives and overflow are refused") {
  CHECK_THROWS_AS(eval_with_input_derivs([](const Jet& x, const Jet&) { return abs(x); }, 0.3, 0.0, {1, 0}),
                  UnsupportedPrimitiveError);
  try {
    (void)eval_with_input_derivs([](const Jet& x, const Jet&) { return abs(x); }, 0.3, 0.0, {1, 0});
  } catch (const UnsupportedPrimitiveError& e) {
    CHECK(std::string(e.what()).find("abs") != std::string::npos);
  }
  CHECK_THROWS_AS(eval_with_input_derivs([](const Jet& x, const Jet&) { return exp(x * 1000.0); }, 1.0, 0.0, {1, 0}),
                  OverflowError);
}

TEST_CASE("parameter gradients") {
  const std::vector<double> p{1.0, 2.0, 3.0};
  const auto half_norm = [](std::span<const Var> v) {
    Var acc(0.0);
    for (const Var& e : v) acc = acc + e * e;
    return acc * 0.5;
  };
  const GradResult g = grad_params(half_norm, p, 3);
  CHECK(g.value == 7.0);
  CHECK(g.gradient == std::vector<double>{1.0, 2.0, 3.0});

  const GradResult zero = grad_params([](std::span<const Var>) { return Var(4.0); }, p, 3);
  CHECK(zero.gradient == std::vector<double>{0.0, 0.0, 0.0});

  CHECK_THROWS_AS(grad_params(half_norm, p, 4), ShapeError);

  // Linearity and replay determinism.
  const auto l1 = [](std::span<const Var> v) { return sin(v[0] * v[1]) + exp(v[2] * 0.1); };
  const auto l2 = [](std::span<const Var> v) { return tanh(v[0] - v[2]) * v[1]; };
  const auto combo = [&](std::span<const Var> v) { return l1(v) * 2.5 - l2(v) * 0.75; };
  const auto g1 = grad_params(l1, p, 3), g2 = grad_params(l2, p, 3), gc = grad_params(combo, p, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const double expect = 2.5 * g1.gradient[i] - 0.75 * g2.gradient[i];
    CHECK(std::abs(gc.gradient[i] - expect) <= 1e-14 * std::max(1.0, std::abs(expect)));
  }
  CHECK(grad_params(combo, p, 3).gradient == gc.gradient);
}

TEST_CASE("jets nested over the tape give parameter gradients of input derivatives") {
  // u(x, t) = tanh(a x + b t) * c; differentiate u_x + u_t w.r.t. (a, b, c).
  const std::vector<double> p{0.7, -0.4, 1.3};
  const double x = 0.2, t = 0.6;
  auto residual = [&](std::span<const Var> v) {
    const VarJet xj = VarJet::variable_x(Var(x), 1, 1);
    const VarJet tj = VarJet::variable_t(Var(t), 1, 1);
    const VarJet u = tanh(xj * VarJet(v[0]) + tj * VarJet(v[1])) * VarJet(v[2]);
    return u.derivative(1, 0) + u.derivative(0, 1);
  };
  auto plain = [&](double a, double b, double c) {
    const double y = std::tanh(a * x + b * t);
    return c * (1 - y * y) * (a + b);
  };
  const GradResult g = grad_params(residual, p, 3);
  CHECK(g.value == doctest::Approx(plain(p[0], p[1], p[2])).epsilon(1e-15));
  const double h = 1e-5;
  for (int i = 0; i < 3; ++i) {
    std::vector<double> up = p, dn = p;
    up[static_cast<std::size_t>(i)] += h;
    dn[static_cast<std::size_t>(i)] -= h;
    const double fd = (plain(up[0], up[1], up[2]) - plain(dn[0], dn[1], dn[2])) / (2 * h);
    CHECK(std::abs(g.gradient[static_cast<std::size_t>(i)] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("chain rule through a control function") {
  // u(t) = (w + F(t) d) t: u_t = w + F d + F' d t.
  const auto F = controlfn::ControlFunction::strong(0.5, 1.0);
  const double w = 0.3, d = -1.7;
  for (double t : {0.25, 0.5, 0.6, 0.75, 0.9, 1.0, 1.2}) {
    const Jet tj = Jet::variable_t(t, 0, 1);
    const Jet u = (Jet(w) + F.evaluate(tj) * d) * tj;
    const auto fv = F.eval(t);
    CHECK(u.derivative(0, 1) == doctest::Approx(w + fv.value * d + fv.d1 * d * t).epsilon(1e-15));
  }
}

TEST_CASE("piecewise polynomial uses the right-hand piece at knots") {
  PiecewisePolynomial p{{0.5}, {{0.0}, {-1.0, 2.0}}};
  CHECK(p.piece_index(0.49) == 0);
  CHECK(p.piece_index(0.5) == 1);
  const Jet t = Jet::variable_t(0.5, 0, 1);
  const Jet v = piecewise(p, t);
  CHECK(v.derivative(0, 0) == 0.0);
  CHECK(v.derivative(0, 1) == 2.0);
}
