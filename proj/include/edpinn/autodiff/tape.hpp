#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "edpinn/errors.hpp"

namespace edpinn::ad {

class Tape;

/// Scalar recorded on a Tape. A Var without a tape is a constant.
class Var {
 public:
  Var() = default;
  Var(double constant) : value_(constant) {}  // NOLINT(google-explicit-constructor)

  double value() const noexcept { return value_; }
  bool is_constant() const noexcept { return tape_ == nullptr; }
  Tape* tape() const noexcept { return tape_; }
  std::uint32_t index() const noexcept { return index_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t index, double value) : tape_(tape), index_(index), value_(value) {}

  Tape* tape_ = nullptr;
  std::uint32_t index_ = 0;
  double value_ = 0.0;
};

/// Linear record of primitive operations. One backward sweep gives the
/// adjoint of every recorded node. Confined to one thread.
class Tape {
 public:
  Var variable(double value);

  std::size_t size() const noexcept { return nodes_.size(); }
  void clear() noexcept { nodes_.clear(); }

  /// d(output)/d(node) for every node on the tape.
  std::vector<double> adjoints(const Var& output) const;

  /// d(output)/d(w) for each w in wrt; constants get 0.
  std::vector<double> gradient(const Var& output, std::span<const Var> wrt) const;

  Var push(double value, const Var& a, double da);
  Var push(double value, const Var& a, double da, const Var& b, double db);

 private:
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  struct Node {
    std::uint32_t lhs;
    std::uint32_t rhs;
    double dlhs;
    double drhs;
  };
  std::vector<Node> nodes_;
};

namespace detail {

inline Tape* common_tape(const Var& a, const Var& b) {
  if (a.tape() && b.tape() && a.tape() != b.tape())
    throw Error("operands recorded on different tapes");
  return a.tape() ? a.tape() : b.tape();
}

inline Var unary(const Var& a, double value, double da) {
  if (a.is_constant()) return Var(value);
  return a.tape()->push(value, a, da);
}

inline Var binary(const Var& a, const Var& b, double value, double da, double db) {
  Tape* tape = common_tape(a, b);
  if (!tape) return Var(value);
  return tape->push(value, a, da, b, db);
}

inline double checked(double v, const char* op) {
  if (!std::isfinite(v)) throw OverflowError(std::string("non-finite result in ") + op);
  return v;
}

}  // namespace detail

inline Var operator+(const Var& a, const Var& b) {
  return detail::binary(a, b, a.value() + b.value(), 1.0, 1.0);
}
inline Var operator-(const Var& a, const Var& b) {
  return detail::binary(a, b, a.value() - b.value(), 1.0, -1.0);
}
inline Var operator*(const Var& a, const Var& b) {
  return detail::binary(a, b, a.value() * b.value(), b.value(), a.value());
}
inline Var operator/(const Var& a, const Var& b) {
  const double q = detail::checked(a.value() / b.value(), "division");
  return detail::binary(a, b, q, 1.0 / b.value(), -q / b.value());
}
inline Var operator-(const Var& a) { return detail::unary(a, -a.value(), -1.0); }

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }
inline Var& operator/=(Var& a, const Var& b) { return a = a / b; }

inline bool operator<(const Var& a, const Var& b) { return a.value() < b.value(); }
inline bool operator<=(const Var& a, const Var& b) { return a.value() <= b.value(); }
inline bool operator>(const Var& a, const Var& b) { return a.value() > b.value(); }
inline bool operator>=(const Var& a, const Var& b) { return a.value() >= b.value(); }

inline Var tanh(const Var& a) {
  const double y = std::tanh(a.value());
  return detail::unary(a, y, 1.0 - y * y);
}
inline Var exp(const Var& a) {
  const double y = detail::checked(std::exp(a.value()), "exp");
  return detail::unary(a, y, y);
}
inline Var log(const Var& a) {
  const double y = detail::checked(std::log(a.value()), "log");
  return detail::unary(a, y, 1.0 / a.value());
}
inline Var sin(const Var& a) { return detail::unary(a, std::sin(a.value()), std::cos(a.value())); }
inline Var cos(const Var& a) { return detail::unary(a, std::cos(a.value()), -std::sin(a.value())); }
inline Var pow(const Var& a, double r) {
  const double y = detail::checked(std::pow(a.value(), r), "pow");
  return detail::unary(a, y, r * std::pow(a.value(), r - 1.0));
}
inline Var sqrt(const Var& a) {
  const double y = detail::checked(std::sqrt(a.value()), "sqrt");
  return detail::unary(a, y, 0.5 / y);
}

inline double value_of(double v) { return v; }
inline double value_of(const Var& v) { return v.value(); }

}  // namespace edpinn::ad
