#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace edpinn::train {

struct AdamState {
  Eigen::VectorXd m, v;
  long step = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update in place.
void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grads, AdamState& state,
               const AdamConfig& config);

/// f(x) returning the value and writing the gradient.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsConfig {
  int memory = 50;
  int max_iterations = 20000;
  double c1 = 1e-4;
  double c2 = 0.9;
  double gradient_tol = 1e-9;   // on the infinity norm
  double relative_tol = 1e-12;  // |f_k - f_{k+1}| / max(|f_k|, |f_{k+1}|, 1)
  int max_line_search = 25;
};

enum class Termination { gradient_tol, relative_tol, max_iterations, line_search_failure, stopped };
std::string to_string(Termination reason);

struct LbfgsResult {
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  Termination reason = Termination::max_iterations;
};

/// Called after each accepted iterate; returning false stops the run.
using IterationCallback = std::function<bool(int iteration, double value, const Eigen::VectorXd& x)>;

/// Limited-memory BFGS, two-loop recursion, strong-Wolfe line search. On a
/// line-search failure the best iterate seen is returned in x.
LbfgsResult lbfgs_minimize(const Objective& f, Eigen::VectorXd& x, const LbfgsConfig& config,
                           const IterationCallback& on_iteration = {});

}  // namespace edpinn::train
