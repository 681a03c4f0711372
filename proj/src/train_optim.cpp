#include "edpinn/train/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "edpinn/errors.hpp"

namespace edpinn::train {

using Eigen::VectorXd;

void adam_step(Eigen::Ref<VectorXd> params, const VectorXd& grads, AdamState& state, const AdamConfig& c) {
  if (grads.size() != params.size()) throw ShapeError("adam: gradient and parameter lengths differ");
  if (state.m.size() != params.size()) {
    state.m = VectorXd::Zero(params.size());
    state.v = VectorXd::Zero(params.size());
    state.step = 0;
  }
  ++state.step;
  state.m = c.beta1 * state.m + (1.0 - c.beta1) * grads;
  state.v = c.beta2 * state.v + (1.0 - c.beta2) * grads.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  params.array() -= c.lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + c.eps);
}

std::string to_string(Termination reason) {
  switch (reason) {
    case Termination::gradient_tol:
      return "gradient_tolerance";
    case Termination::relative_tol:
      return "relative_loss_tolerance";
    case Termination::max_iterations:
      return "max_iterations";
    case Termination::line_search_failure:
      return "line_search_failure";
    case Termination::stopped:
      return "stopped";
  }
  return "unknown";
}

namespace {

struct Probe {
  double alpha, value, slope;
};

// Minimizer of the cubic through (a, fa, da) and (b, fb, db), safeguarded
// into the interior of [a, b].
double cubic_min(const Probe& a, const Probe& b) {
  const double d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - a.slope * b.slope;
  const double lo = std::min(a.alpha, b.alpha), hi = std::max(a.alpha, b.alpha);
  double x = 0.5 * (lo + hi);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
    const double denom = b.slope - a.slope + 2.0 * d2;
    if (denom != 0.0) x = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / denom;
  }
  const double margin = 0.1 * (hi - lo);
  if (!std::isfinite(x) || x < lo + margin || x > hi - margin) x = 0.5 * (lo + hi);
  return x;
}

class LineSearch {
 public:
  LineSearch(const Objective& f, const VectorXd& x, const VectorXd& dir, double f0, double slope0,
             const LbfgsConfig& c, int& evaluations)
      : f_(f), x_(x), dir_(dir), f0_(f0), slope0_(slope0), c_(c), evals_(evaluations) {}

  // Returns true on success; trial point in x_new/g_new/f_new.
  bool run(double alpha, VectorXd& x_new, VectorXd& g_new, double& f_new) {
    Probe prev{0.0, f0_, slope0_};
    for (int i = 0; i < c_.max_line_search; ++i) {
      const Probe cur = eval(alpha, x_new, g_new);
      if (approximate_wolfe(cur)) {
        f_new = cur.value;
        return true;
      }
      if (!std::isfinite(cur.value) || cur.value > f0_ + c_.c1 * alpha * slope0_ || (i > 0 && cur.value >= prev.value))
        return zoom(prev, cur, x_new, g_new, f_new);
      if (std::abs(cur.slope) <= -c_.c2 * slope0_) {
        f_new = cur.value;
        return true;
      }
      if (cur.slope >= 0.0) return zoom(cur, prev, x_new, g_new, f_new);
      prev = cur;
      alpha *= 2.0;
    }
    return false;
  }

 private:
  // Near a minimizer the decrease in f falls below its rounding and the
  // Armijo test becomes noise. Accept on the slope instead when f has not
  // risen beyond that rounding (Hager and Zhang's approximate Wolfe test).
  bool approximate_wolfe(const Probe& p) const {
    return std::isfinite(p.value) && p.value <= f0_ + kRounding * std::abs(f0_) &&
           std::abs(p.slope) <= -c_.c2 * slope0_ && p.slope <= (2.0 * c_.c1 - 1.0) * slope0_;
  }
  static constexpr double kRounding = 1e-14;

  Probe eval(double alpha, VectorXd& x_new, VectorXd& g_new) {
    x_new = x_ + alpha * dir_;
    g_new.resize(x_.size());
    double v;
    try {
      v = f_(x_new, g_new);
    } catch (const DivergenceError&) {
      v = std::numeric_limits<double>::infinity();
      g_new.setZero();
    }
    ++evals_;
    return {alpha, v, std::isfinite(v) ? g_new.dot(dir_) : 0.0};
  }

  bool zoom(Probe lo, Probe hi, VectorXd& x_new, VectorXd& g_new, double& f_new) {
    for (int i = 0; i < c_.max_line_search; ++i) {
      const double alpha = std::isfinite(hi.value) ? cubic_min(lo, hi) : 0.5 * (lo.alpha + hi.alpha);
      if (std::abs(hi.alpha - lo.alpha) <= 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
      const Probe cur = eval(alpha, x_new, g_new);
      if (approximate_wolfe(cur)) {
        f_new = cur.value;
        return true;
      }
      if (!std::isfinite(cur.value) || cur.value > f0_ + c_.c1 * alpha * slope0_ || cur.value >= lo.value) {
        hi = cur;
      } else {
        if (std::abs(cur.slope) <= -c_.c2 * slope0_) {
          f_new = cur.value;
          return true;
        }
        if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = cur;
      }
    }
    // Accept the best sufficient-decrease point, if any.
    if (lo.alpha > 0.0 && lo.value < f0_) {
      const Probe p = eval(lo.alpha, x_new, g_new);
      f_new = p.value;
      return true;
    }
    return false;
  }

  const Objective& f_;
  const VectorXd& x_;
  const VectorXd& dir_;
  double f0_, slope0_;
  const LbfgsConfig& c_;
  int& evals_;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, VectorXd& x, const LbfgsConfig& c, const IterationCallback& cb) {
  if (c.memory < 1) throw ConfigError("lbfgs memory must be >= 1");
  LbfgsResult result;
  VectorXd g(x.size());
  double fx = f(x, g);
  result.evaluations = 1;
  result.value = fx;
  if (!std::isfinite(fx)) throw DivergenceError("non-finite loss at the L-BFGS starting point");
  if (g.lpNorm<Eigen::Infinity>() <= c.gradient_tol) {
    result.reason = Termination::gradient_tol;
    return result;
  }

  std::deque<VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  VectorXd x_new, g_new, dir;
  for (int k = 0; k < c.max_iterations; ++k) {
    // Two-loop recursion.
    dir = -g;
    const std::size_t m = s_hist.size();
    std::vector<double> alpha(m);
    for (std::size_t i = m; i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(dir);
      dir -= alpha[i] * y_hist[i];
    }
    if (m > 0) dir *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(dir);
      dir += (alpha[i] - beta) * s_hist[i];
    }
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      // Not a descent direction: restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -g;
      slope = -g.squaredNorm();
    }
    const double alpha0 = m == 0 ? std::min(1.0, 1.0 / g.lpNorm<1>()) : 1.0;
    double f_new = fx;
    LineSearch ls(f, x, dir, fx, slope, c, result.evaluations);
    if (!ls.run(alpha0, x_new, g_new, f_new) || !(f_new <= fx + 1e-14 * std::abs(fx))) {
      result.reason = Termination::line_search_failure;
      break;
    }
    VectorXd s = x_new - x;
    VectorXd y = g_new - g;
    const double sy = s.dot(y);
    const double f_old = fx;
    x.swap(x_new);
    g.swap(g_new);
    fx = f_new;
    result.value = fx;
    result.iterations = k + 1;
    if (sy > 1e-10 * s.norm() * y.norm()) {
      if (static_cast<int>(s_hist.size()) == c.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }
    if (cb && !cb(result.iterations, fx, x)) {
      result.reason = Termination::stopped;
      return result;
    }
    if (g.lpNorm<Eigen::Infinity>() <= c.gradient_tol) {
      result.reason = Termination::gradient_tol;
      return result;
    }
    if (std::abs(f_old - fx) <= c.relative_tol * std::max({std::abs(f_old), std::abs(fx), 1.0})) {
      result.reason = Termination::relative_tol;
      return result;
    }
  }
  if (result.iterations >= c.max_iterations) result.reason = Termination::max_iterations;
  return result;
}

}  // namespace edpinn::train
