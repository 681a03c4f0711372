#include "edpinn/controlfn/control_function.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace edpinn::controlfn {

namespace {

using Jet = ad::Taylor2<double>;

// Normalised profile g(s) on [0, 1] and its first three derivatives.
struct Profile {
  double g, g1, g2, g3;
};

Profile hermite_profile(double s, int order) {
  if (order >= 2) {
    const double s2 = s * s;
    return {s2 * s * (s * (6.0 * s - 15.0) + 10.0), 30.0 * s2 * (s - 1.0) * (s - 1.0),
            60.0 * s * (s - 1.0) * (2.0 * s - 1.0), 60.0 * (6.0 * s2 - 6.0 * s + 1.0)};
  }
  return {s * s * (3.0 - 2.0 * s), 6.0 * s * (1.0 - s), 6.0 - 12.0 * s, -12.0};
}

std::vector<double> binomial_row(std::size_t n) {
  std::vector<double> row(n + 1, 1.0);
  for (std::size_t k = 1; k < n; ++k) row[k] = row[k - 1] * static_cast<double>(n - k + 1) / static_cast<double>(k);
  return row;
}

}  // namespace

std::vector<double> AnalyticPiece::shift_polynomial(const std::vector<double>& in_t, double origin) {
  // p(s + origin) = sum_n c_n sum_k C(n,k) origin^(n-k) s^k
  std::vector<double> out(in_t.size(), 0.0);
  for (std::size_t n = 0; n < in_t.size(); ++n) {
    const auto binom = binomial_row(n);
    for (std::size_t k = 0; k <= n; ++k)
      out[k] += in_t[n] * binom[k] * std::pow(origin, static_cast<double>(n - k));
  }
  return out;
}

void ControlFunction::validate_knots() const {
  const double tf = t_f();
  if (!(t_p_ < tf)) {
    std::ostringstream msg;
    msg << "control function '" << name_ << "': saturation time T_f=" << tf << " must exceed T_p=" << t_p_;
    throw DomainError(msg.str());
  }
  if (tf > t_end_ * (1.0 + 1e-15) + 1e-15) throw DomainError("control function '" + name_ + "': T_f beyond T");
  if (smoothness_order_ < 1 || smoothness_order_ > 2) throw DomainError("smoothness order must be 1 or 2");
}

ControlFunction ControlFunction::strong(double t_p, double t_end, int smoothness_order) {
  ControlFunction f;
  f.kind_ = ControlKind::strong;
  f.name_ = "strong";
  f.t_p_ = t_p;
  f.t_end_ = t_end;
  f.t_f_ = t_end;
  f.smoothness_order_ = smoothness_order;
  f.validate_knots();
  return f;
}

ControlFunction ControlFunction::weak(double t_p, double t_end, int m, int smoothness_order) {
  if (m < 1) throw DomainError("weak control function: M must be a positive integer");
  ControlFunction f;
  f.kind_ = ControlKind::weak;
  f.name_ = "weak";
  f.t_p_ = t_p;
  f.t_end_ = t_end;
  f.m_ = m;
  f.t_f_ = t_p + (t_end - t_p) / m;
  f.smoothness_order_ = smoothness_order;
  f.validate_knots();
  return f;
}

ControlFunction ControlFunction::adaptive(double t_p, double t_end, double logit, int smoothness_order) {
  ControlFunction f;
  f.kind_ = ControlKind::adaptive;
  f.name_ = "adaptive";
  f.t_p_ = t_p;
  f.t_end_ = t_end;
  f.adaptive_ = {t_p, t_end, logit};
  f.t_f_ = f.adaptive_.value();
  f.smoothness_order_ = smoothness_order;
  f.validate_knots();
  return f;
}

ControlFunction ControlFunction::custom(std::string name, double t_p, double t_end, double t_f, AnalyticPiece piece,
                                        int smoothness_order) {
  ControlFunction f;
  f.kind_ = ControlKind::custom;
  f.name_ = std::move(name);
  f.t_p_ = t_p;
  f.t_end_ = t_end;
  f.t_f_ = t_f;
  f.smoothness_order_ = smoothness_order;
  f.piece_ = std::move(piece);
  f.validate_knots();
  const InvariantReport report = f.check_invariants();
  if (!report.passes()) {
    std::ostringstream msg;
    msg << "control function '" << f.name_ << "' fails the invariant suite (endpoint error " << report.endpoint_error
        << ", join error " << report.join_error << ")";
    throw DomainError(msg.str());
  }
  f.monotone_ = report.monotone;
  return f;
}

void ControlFunction::set_tf_logit(double logit) {
  if (kind_ != ControlKind::adaptive) throw DomainError("only adaptive control functions carry a trainable T_f");
  adaptive_.logit = logit;
  t_f_ = adaptive_.value();
}

ControlFunction ControlFunction::retargeted(double t_p, double t_end) const {
  switch (kind_) {
    case ControlKind::strong: return strong(t_p, t_end, smoothness_order_);
    case ControlKind::weak: return weak(t_p, t_end, m_, smoothness_order_);
    case ControlKind::adaptive: return adaptive(t_p, t_end, 0.0, smoothness_order_);
    case ControlKind::custom: {
      // Keep the ratio (T_f - T_p) / (T - T_p) of the original.
      const double frac = (t_f_ - t_p_) / (t_end_ - t_p_);
      const double tf = (frac == 1.0) ? t_end : t_p + (t_end - t_p) * frac;
      return custom(name_, t_p, t_end, tf, piece_, smoothness_order_);
    }
  }
  return *this;
}

ControlValues ControlFunction::eval(double t, Side side) const {
  const double tf = t_f();
  const bool before = side == Side::right ? t < t_p_ : t <= t_p_;
  const bool after = side == Side::right ? t >= tf : t > tf;
  if (before) return {0.0, 0.0, 0.0};
  if (after) return {1.0, 0.0, 0.0};
  if (is_hermite()) {
    const double width = tf - t_p_;
    const double s = (t - t_p_) / width;
    const Profile p = hermite_profile(s, smoothness_order_);
    return {p.g, p.g1 / width, p.g2 / (width * width)};
  }
  // The piece itself, not evaluate_with_tf: the left limit at T_f must come
  // from the middle piece.
  const Jet tj = Jet::variable_t(t, 0, 2);
  const double scale = (piece_.native_t_f - piece_.native_t_p) / (tf - t_p_);
  const Jet f = piece_.evaluate((tj - t_p_) * scale);
  return {f.derivative(0, 0), f.derivative(0, 1), f.derivative(0, 2)};
}

TfSensitivity ControlFunction::eval_dtf(double t) const {
  if (kind_ != ControlKind::adaptive) throw DomainError("T_f sensitivity requested for a non-adaptive control function");
  const double tf = t_f();
  if (t < t_p_ || t >= tf) return {};
  const double width = tf - t_p_;
  const double s = (t - t_p_) / width;
  const Profile p = hermite_profile(s, smoothness_order_);
  // ds/dT_f = -s / width; each d/dt brings a factor 1/width.
  return {-p.g1 * s / width, -(s * p.g2 + p.g1) / (width * width),
          -(s * p.g3 + 2.0 * p.g2) / (width * width * width)};
}

InvariantReport ControlFunction::check_invariants(int grid_points, double tol) const {
  InvariantReport r;
  const double tf = t_f();
  const ControlValues at_tp_right = eval(t_p_, Side::right);
  const ControlValues at_tf_left = eval(tf, Side::left);
  const ControlValues at_tf_right = eval(tf, Side::right);
  r.endpoint_error = std::max(std::abs(at_tp_right.value), std::abs(at_tf_left.value - 1.0));
  r.endpoint_error = std::max(r.endpoint_error, std::abs(at_tf_right.value - 1.0));
  // Left of T_p and right of T_f are constant pieces, so their slopes are 0.
  r.join_error = std::max(std::abs(at_tp_right.d1), std::abs(at_tf_left.d1));
  if (smoothness_order_ >= 2) r.join_error = std::max({r.join_error, std::abs(at_tp_right.d2), std::abs(at_tf_left.d2)});
  r.endpoints_ok = r.endpoint_error <= tol;
  r.joins_ok = r.join_error <= tol;
  r.min_slope = std::numeric_limits<double>::infinity();
  for (int i = 1; i < grid_points; ++i) {
    const double t = t_p_ + (tf - t_p_) * static_cast<double>(i) / grid_points;
    r.min_slope = std::min(r.min_slope, eval(t).d1);
  }
  r.monotone = r.min_slope >= -1e-15;
  return r;
}

}  // namespace edpinn::controlfn
