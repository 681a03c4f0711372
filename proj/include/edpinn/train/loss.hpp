#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "edpinn/network/model.hpp"
#include "edpinn/pde/problem.hpp"

namespace edpinn::train {

struct LossWeights {
  double w_s = 1.0;
  double w_r = 1.0;
  void validate() const;
};

struct LossValue {
  double total = 0.0;
  double supervised = 0.0;  // L_s
  double residual = 0.0;    // L_r
};

/// L = w_s L_s + w_r L_r over a fixed sample batch, where L_s is the mean
/// squared initial mismatch plus the mean boundary term and L_r the mean
/// squared residual.
class LossFunction {
 public:
  LossFunction(const pde::PdeProblem& problem, const network::InputEmbedding& embedding, const pde::SampleBatch& batch,
               LossWeights weights, Eigen::Index chunk = 256);

  LossValue value(const network::Model& model) const;
  /// grad (length Model::trainable_count()) is overwritten.
  LossValue value_and_gradient(const network::Model& model, Eigen::Ref<Eigen::VectorXd> grad) const;

  /// Derivative layout the residual needs.
  network::ChannelLayout residual_layout() const;

 private:
  LossValue run(const network::Model& model, Eigen::VectorXd* grad) const;
  // Evaluators keep their work buffers between calls on the same model.
  struct Evaluators {
    const network::Model* model = nullptr;
    std::unique_ptr<network::BatchEvaluator> initial, residual;
    std::vector<std::unique_ptr<network::BatchEvaluator>> left, right;
  };
  Evaluators& evaluators(const network::Model& model) const;
  mutable Evaluators evaluators_;

  const pde::PdeProblem& problem_;
  const network::InputEmbedding& embedding_;
  const pde::SampleBatch& batch_;
  LossWeights weights_;
  Eigen::Index chunk_;
};

/// Squared residual at one point and its gradient with respect to the
/// model's trainable parameters, recorded on a scalar tape through Taylor
/// jets. Slow; a reference for the batched path.
struct ResidualGradient {
  double squared_residual = 0.0;
  Eigen::VectorXd gradient;
};
ResidualGradient grad_params_of_residual(const network::Model& model, const network::InputEmbedding& embedding,
                                         const pde::PdeProblem& problem, std::span<const double> x, double t);

}  // namespace edpinn::train
