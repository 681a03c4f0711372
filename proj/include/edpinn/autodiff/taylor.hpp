#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <type_traits>

#include "edpinn/autodiff/tape.hpp"
#include "edpinn/errors.hpp"

namespace edpinn::ad {

/// Truncated bivariate Taylor polynomial in (x, t).
///
/// Coefficient (i, j) holds d^i/dx^i d^j/dt^j f / (i! j!) for i <= order_x,
/// j <= order_t. Arithmetic is exact truncated-Taylor arithmetic. The scalar
/// type T is double for plain evaluation or Var to nest the jet over a tape.
template <class T>
class Taylor2 {
 public:
  static constexpr int kMaxOrderX = 3;
  static constexpr int kMaxOrderT = 2;

  Taylor2() { coeffs_.fill(T(0.0)); }
  template <class U>
    requires std::is_convertible_v<const U&, T>
  Taylor2(const U& c) {  // NOLINT(google-explicit-constructor)
    coeffs_.fill(T(0.0));
    coeffs_[0] = T(c);
  }
  Taylor2(int order_x, int order_t, const T& value) : order_x_(order_x), order_t_(order_t), constant_(false) {
    if (order_x < 0 || order_x > kMaxOrderX || order_t < 0 || order_t > kMaxOrderT)
      throw DomainError("jet orders out of range: x " + std::to_string(order_x) + ", t " +
                        std::to_string(order_t));
    coeffs_.fill(T(0.0));
    coeffs_[0] = value;
  }

  /// Seed for the x input: value + 1*dx.
  static Taylor2 variable_x(const T& value, int order_x, int order_t) {
    Taylor2 j(order_x, order_t, value);
    if (order_x > 0) j.coeff(1, 0) = T(1.0);
    return j;
  }
  static Taylor2 variable_t(const T& value, int order_x, int order_t) {
    Taylor2 j(order_x, order_t, value);
    if (order_t > 0) j.coeff(0, 1) = T(1.0);
    return j;
  }

  int order_x() const noexcept { return order_x_; }
  int order_t() const noexcept { return order_t_; }
  bool is_constant() const noexcept { return constant_; }

  const T& value() const { return coeffs_[0]; }
  T& coeff(int i, int j) { return coeffs_[i * (kMaxOrderT + 1) + j]; }
  const T& coeff(int i, int j) const { return coeffs_[i * (kMaxOrderT + 1) + j]; }

  /// Partial derivative d^i/dx^i d^j/dt^j.
  T derivative(int i, int j) const {
    if (i > order_x_ || j > order_t_) throw DomainError("derivative order not carried by jet");
    static constexpr std::array<double, 4> fact{1.0, 1.0, 2.0, 6.0};
    return coeff(i, j) * T(fact[i] * fact[j]);
  }

  Taylor2& operator+=(const Taylor2& o) { return *this = *this + o; }
  Taylor2& operator-=(const Taylor2& o) { return *this = *this - o; }
  Taylor2& operator*=(const Taylor2& o) { return *this = *this * o; }
  Taylor2& operator/=(const Taylor2& o) { return *this = *this / o; }

  /// Result shape of a binary op; constants adopt the other operand's orders.
  static Taylor2 shape_of(const Taylor2& a, const Taylor2& b) {
    if (a.constant_ && b.constant_) return Taylor2(T(0.0));
    if (a.constant_) return Taylor2(b.order_x_, b.order_t_, T(0.0));
    if (b.constant_) return Taylor2(a.order_x_, a.order_t_, T(0.0));
    if (a.order_x_ != b.order_x_ || a.order_t_ != b.order_t_)
      throw ShapeError("jet order mismatch between operands");
    return Taylor2(a.order_x_, a.order_t_, T(0.0));
  }

 private:
  std::array<T, (kMaxOrderX + 1) * (kMaxOrderT + 1)> coeffs_;
  int order_x_ = 0;
  int order_t_ = 0;
  bool constant_ = true;
};

template <class T>
Taylor2<T> operator+(const Taylor2<T>& a, const Taylor2<T>& b) {
  Taylor2<T> r = Taylor2<T>::shape_of(a, b);
  for (int i = 0; i <= r.order_x(); ++i)
    for (int j = 0; j <= r.order_t(); ++j) r.coeff(i, j) = a.coeff(i, j) + b.coeff(i, j);
  return r;
}

template <class T>
Taylor2<T> operator-(const Taylor2<T>& a, const Taylor2<T>& b) {
  Taylor2<T> r = Taylor2<T>::shape_of(a, b);
  for (int i = 0; i <= r.order_x(); ++i)
    for (int j = 0; j <= r.order_t(); ++j) r.coeff(i, j) = a.coeff(i, j) - b.coeff(i, j);
  return r;
}

template <class T>
Taylor2<T> operator-(const Taylor2<T>& a) {
  return Taylor2<T>(T(0.0)) - a;
}

template <class T>
Taylor2<T> operator*(const Taylor2<T>& a, const Taylor2<T>& b) {
  Taylor2<T> r = Taylor2<T>::shape_of(a, b);
  for (int i = 0; i <= r.order_x(); ++i)
    for (int j = 0; j <= r.order_t(); ++j) {
      T acc(0.0);
      for (int p = 0; p <= i; ++p)
        for (int q = 0; q <= j; ++q) acc = acc + a.coeff(p, q) * b.coeff(i - p, j - q);
      r.coeff(i, j) = acc;
    }
  return r;
}

#define EDPINN_TAYLOR_SCALAR_OP(op)                                              \
  template <class T, class U>                                                    \
    requires std::is_convertible_v<const U&, T>                                  \
  Taylor2<T> operator op(const Taylor2<T>& a, const U& b) {                      \
    return a op Taylor2<T>(b);                                                   \
  }                                                                              \
  template <class T, class U>                                                    \
    requires std::is_convertible_v<const U&, T>                                  \
  Taylor2<T> operator op(const U& a, const Taylor2<T>& b) {                      \
    return Taylor2<T>(a) op b;                                                   \
  }

EDPINN_TAYLOR_SCALAR_OP(+)
EDPINN_TAYLOR_SCALAR_OP(-)
EDPINN_TAYLOR_SCALAR_OP(*)

/// f(a) = sum_n f^(n)(a0)/n! (a - a0)^n, with derivs[n] = f^(n)(a0).
template <class T>
Taylor2<T> compose(const Taylor2<T>& a, std::span<const T> derivs) {
  Taylor2<T> result(derivs[0]);
  if (a.is_constant()) return result;
  result = Taylor2<T>(a.order_x(), a.order_t(), derivs[0]);
  Taylor2<T> h = a;
  h.coeff(0, 0) = T(0.0);
  Taylor2<T> power = h;
  double factorial = 1.0;
  const int max_n = a.order_x() + a.order_t();
  for (int n = 1; n <= max_n; ++n) {
    factorial *= n;
    const T scale = derivs[static_cast<std::size_t>(n)] / T(factorial);
    for (int i = 0; i <= a.order_x(); ++i)
      for (int j = 0; j <= a.order_t(); ++j) result.coeff(i, j) = result.coeff(i, j) + scale * power.coeff(i, j);
    if (n < max_n) power = power * h;
  }
  return result;
}

namespace detail {

inline void require_finite(double v, const char* op) {
  if (!std::isfinite(v)) throw OverflowError(std::string("non-finite intermediate in ") + op);
}

template <class T>
using DerivArray = std::array<T, Taylor2<T>::kMaxOrderX + Taylor2<T>::kMaxOrderT + 1>;

}  // namespace detail

template <class T>
Taylor2<T> reciprocal(const Taylor2<T>& b) {
  detail::DerivArray<T> d;
  const T inv = T(1.0) / b.value();
  detail::require_finite(value_of(inv), "division");
  T power = inv;
  double sign_fact = 1.0;
  for (std::size_t n = 0; n < d.size(); ++n) {
    d[n] = T(sign_fact) * power;
    power = power * inv;
    sign_fact *= -static_cast<double>(n + 1);
  }
  return compose<T>(b, d);
}

template <class T>
Taylor2<T> operator/(const Taylor2<T>& a, const Taylor2<T>& b) {
  if (b.is_constant()) {
    Taylor2<T> r = a;
    for (int i = 0; i <= a.order_x(); ++i)
      for (int j = 0; j <= a.order_t(); ++j) r.coeff(i, j) = a.coeff(i, j) / b.value();
    detail::require_finite(value_of(r.value()), "division");
    return r;
  }
  return a * reciprocal(b);
}

EDPINN_TAYLOR_SCALAR_OP(/)
#undef EDPINN_TAYLOR_SCALAR_OP

template <class T>
Taylor2<T> tanh(const Taylor2<T>& a) {
  using std::tanh;
  // Derivatives of tanh are polynomials in y = tanh(a): P_{n+1} = P_n'(y) (1 - y^2).
  const T y = tanh(a.value());
  constexpr int kMaxN = Taylor2<T>::kMaxOrderX + Taylor2<T>::kMaxOrderT;
  std::array<std::array<double, kMaxN + 3>, kMaxN + 1> poly{};
  poly[0][1] = 1.0;
  for (int n = 0; n < kMaxN; ++n)
    for (int p = 1; p < kMaxN + 2; ++p) {
      const double dp = p * poly[n][p];
      poly[n + 1][p - 1] += dp;
      poly[n + 1][p + 1] -= dp;
    }
  detail::DerivArray<T> d;
  for (int n = 0; n <= kMaxN; ++n) {
    T acc(0.0);
    for (int p = kMaxN + 2; p-- > 0;) acc = acc * y + T(poly[n][p]);
    d[n] = acc;
  }
  return compose<T>(a, d);
}

template <class T>
Taylor2<T> exp(const Taylor2<T>& a) {
  using std::exp;
  const T e = exp(a.value());
  detail::require_finite(value_of(e), "exp");
  detail::DerivArray<T> d;
  d.fill(e);
  return compose<T>(a, d);
}

template <class T>
Taylor2<T> log(const Taylor2<T>& a) {
  using std::log;
  if (!(value_of(a.value()) > 0.0)) throw OverflowError("log of non-positive value");
  detail::DerivArray<T> d;
  d[0] = log(a.value());
  const T inv = T(1.0) / a.value();
  T power = inv;
  double c = 1.0;
  for (std::size_t n = 1; n < d.size(); ++n) {
    d[n] = T(c) * power;
    power = power * inv;
    c *= -static_cast<double>(n);
  }
  return compose<T>(a, d);
}

template <class T>
Taylor2<T> sin(const Taylor2<T>& a) {
  using std::cos;
  using std::sin;
  const T s = sin(a.value());
  const T c = cos(a.value());
  detail::DerivArray<T> d;
  for (std::size_t n = 0; n < d.size(); ++n) {
    switch (n % 4) {
      case 0: d[n] = s; break;
      case 1: d[n] = c; break;
      case 2: d[n] = -s; break;
      default: d[n] = -c; break;
    }
  }
  return compose<T>(a, d);
}

template <class T>
Taylor2<T> cos(const Taylor2<T>& a) {
  using std::cos;
  using std::sin;
  const T s = sin(a.value());
  const T c = cos(a.value());
  detail::DerivArray<T> d;
  for (std::size_t n = 0; n < d.size(); ++n) {
    switch (n % 4) {
      case 0: d[n] = c; break;
      case 1: d[n] = -s; break;
      case 2: d[n] = -c; break;
      default: d[n] = s; break;
    }
  }
  return compose<T>(a, d);
}

/// a^r for real r. Integer r uses repeated multiplication so negative bases work.
template <class T>
Taylor2<T> pow(const Taylor2<T>& a, double r) {
  using std::pow;
  if (r == std::floor(r) && r >= 0.0 && r <= 16.0) {
    Taylor2<T> result(1.0);
    for (int i = 0; i < static_cast<int>(r); ++i) result = result * a;
    return result;
  }
  detail::DerivArray<T> d;
  double c = 1.0;
  for (std::size_t n = 0; n < d.size(); ++n) {
    d[n] = T(c) * pow(a.value(), r - static_cast<double>(n));
    detail::require_finite(value_of(d[n]), "pow");
    c *= r - static_cast<double>(n);
  }
  return compose<T>(a, d);
}

template <class T>
Taylor2<T> sqrt(const Taylor2<T>& a) {
  return pow(a, 0.5);
}

/// Non-smooth primitives are rejected so derivative tables stay exact.
template <class T>
Taylor2<T> abs(const Taylor2<T>&) {
  throw UnsupportedPrimitiveError("abs");
}
template <class T>
Taylor2<T> floor(const Taylor2<T>&) {
  throw UnsupportedPrimitiveError("floor");
}
template <class T>
Taylor2<T> max(const Taylor2<T>&, const Taylor2<T>&) {
  throw UnsupportedPrimitiveError("max");
}
template <class T>
Taylor2<T> min(const Taylor2<T>&, const Taylor2<T>&) {
  throw UnsupportedPrimitiveError("min");
}

}  // namespace edpinn::ad
