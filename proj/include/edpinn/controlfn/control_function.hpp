#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "edpinn/autodiff/taylor.hpp"
#include "edpinn/errors.hpp"

namespace edpinn::controlfn {

enum class ControlKind { strong, weak, adaptive, custom };

/// Which one-sided limit to take exactly at a knot. The library default is
/// the right-hand piece.
enum class Side { right, left };

struct ControlValues {
  double value = 0.0;
  double d1 = 0.0;  // dF/dt
  double d2 = 0.0;  // d2F/dt2
};

/// Partials of (F, F', F'') with respect to the saturation time T_f.
struct TfSensitivity {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Trainable saturation time T_f = T_p + (T - T_p) * sigmoid(logit), which
/// keeps T_f strictly inside (T_p, T). logit = 0 gives the midpoint.
struct AdaptiveTf {
  double t_p = 0.0;
  double t_end = 1.0;
  double logit = 0.0;

  double value() const { return t_p + (t_end - t_p) * sigmoid(); }
  double d_value_d_logit() const {
    const double s = sigmoid();
    return (t_end - t_p) * s * (1.0 - s);
  }
  double sigmoid() const { return 1.0 / (1.0 + std::exp(-logit)); }
};

/// Analytic middle piece, written in the local variable s = (t - T_p) * scale
/// where scale maps [T_p, T_f] onto the piece's native window. The piece is
///   poly(s) + sum_i exp(exp_polys_i(s)) + sum_j c_j cos^2(omega_j (s + native_t_p)).
struct AnalyticPiece {
  double native_t_p = 0.0;
  double native_t_f = 1.0;
  std::vector<double> poly;
  std::vector<std::vector<double>> exp_polys;
  std::vector<std::pair<double, double>> cos_squared;  // (coefficient, omega)

  /// Re-expands a polynomial in absolute t about native_t_p.
  static std::vector<double> shift_polynomial(const std::vector<double>& in_t, double origin);

  template <class J>
  J evaluate(const J& s) const {
    using std::cos;
    using std::exp;
    J acc = horner_(poly, s);
    for (const auto& e : exp_polys) acc = acc + exp(horner_(e, s));
    for (const auto& [c, omega] : cos_squared) {
      const J cz = cos((s + native_t_p) * omega);
      acc = acc + cz * cz * c;
    }
    return acc;
  }

 private:
  template <class J>
  static J horner_(const std::vector<double>& coeffs, const J& s) {
    J acc(0.0);
    for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * s + coeffs[i];
    return acc;
  }
};

/// Outcome of the endpoint / join / monotonicity checks.
struct InvariantReport {
  double endpoint_error = 0.0;  // max(|F(T_p)|, |F(T_f) - 1|)
  double join_error = 0.0;      // max one-sided derivative mismatch at T_p, T_f
  double min_slope = 0.0;       // min F' over the interior grid
  bool endpoints_ok = false;
  bool joins_ok = false;
  bool monotone = false;
  bool passes() const { return endpoints_ok && joins_ok; }
};

/// Extrapolation control function: 0 on [0, T_p], a smooth join on
/// [T_p, T_f), and 1 from T_f on.
class ControlFunction {
 public:
  /// Hermite join on [T_p, T] (T_f = T).
  static ControlFunction strong(double t_p, double t_end, int smoothness_order = 1);
  /// Hermite join saturating at T_f = T_p + (T - T_p) / m.
  static ControlFunction weak(double t_p, double t_end, int m = 5, int smoothness_order = 1);
  /// Hermite join with trainable T_f.
  static ControlFunction adaptive(double t_p, double t_end, double logit = 0.0, int smoothness_order = 1);
  /// User piece on [t_p, t_f). Rejected unless the invariant suite passes.
  static ControlFunction custom(std::string name, double t_p, double t_end, double t_f, AnalyticPiece piece,
                                int smoothness_order = 1);

  ControlKind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  double t_p() const noexcept { return t_p_; }
  double t_end() const noexcept { return t_end_; }
  double t_f() const { return kind_ == ControlKind::adaptive ? adaptive_.value() : t_f_; }
  int smoothness_order() const noexcept { return smoothness_order_; }
  int weak_divisor() const noexcept { return m_; }
  bool is_hermite() const noexcept { return kind_ != ControlKind::custom; }
  bool monotone() const noexcept { return monotone_; }
  const AnalyticPiece& piece() const { return piece_; }

  bool trainable() const noexcept { return kind_ == ControlKind::adaptive; }
  double tf_logit() const noexcept { return adaptive_.logit; }
  void set_tf_logit(double logit);
  const AdaptiveTf& adaptive_tf() const { return adaptive_; }

  /// Same shape on a different interval, e.g. when the function is reused for
  /// a later level. Custom pieces are mapped affinely onto the new window.
  ControlFunction retargeted(double t_p, double t_end) const;

  ControlValues eval(double t, Side side = Side::right) const;
  /// d(F, F', F'')/dT_f; zero outside (T_p, T_f). Adaptive kind only.
  TfSensitivity eval_dtf(double t) const;

  /// Generic evaluation on jets (or plain doubles) under the right-hand convention.
  template <class J>
  J evaluate(const J& t) const {
    return evaluate_with_tf(t, t_f());
  }

  /// As evaluate, with the saturation time supplied by the caller so that it
  /// can itself be a differentiable quantity.
  template <class J, class S>
  J evaluate_with_tf(const J& t, const S& t_f) const {
    const double tv = ad::value_of(scalar_of(t));
    const double tfv = ad::value_of(scalar_of(t_f));
    if (tv < t_p_) return J(0.0);
    if (tv >= tfv) return J(1.0);
    if (is_hermite()) {
      const J s = (t - t_p_) / (J(t_f) - t_p_);
      if (smoothness_order_ >= 2) return s * s * s * (s * (s * 6.0 - 15.0) + 10.0);
      return s * s * (3.0 - s * 2.0);
    }
    const double scale = (piece_.native_t_f - piece_.native_t_p) / (tfv - t_p_);
    return piece_.evaluate((t - t_p_) * scale);
  }

  InvariantReport check_invariants(int grid_points = 10000, double tol = 1e-12) const;

 private:
  ControlFunction() = default;
  void validate_knots() const;

  template <class J>
  static auto scalar_of(const J& j) {
    if constexpr (requires { j.value(); })
      return j.value();
    else
      return j;
  }

  ControlKind kind_ = ControlKind::strong;
  std::string name_;
  double t_p_ = 0.0;
  double t_end_ = 1.0;
  double t_f_ = 1.0;
  int m_ = 1;
  int smoothness_order_ = 1;
  bool monotone_ = true;
  AdaptiveTf adaptive_;
  AnalyticPiece piece_;
};

}  // namespace edpinn::controlfn
