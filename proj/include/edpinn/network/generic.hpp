#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "edpinn/autodiff/taylor.hpp"
#include "edpinn/network/model.hpp"

namespace edpinn::network {

/// Scalar-per-point evaluation of a Model on Taylor jets. Independent of the
/// batched evaluator; used to cross-check it and to build tape gradients.
///
/// S is double or ad::Var. `trainable` holds the flat parameters of the
/// model's trainable term (and its T_f logit last, if adaptive); when empty
/// the stored values are used and every parameter is a constant.
template <class S>
ad::Taylor2<S> forward_generic(const Model& model, const InputEmbedding& embedding, std::span<const double> x,
                               double t, int axis, int order_x, int order_t, std::span<const S> trainable = {}) {
  using J = ad::Taylor2<S>;
  if (!model.allow_extrapolation() && t > model.domain_end())
    throw DomainError("t lies beyond the last trained interval end");
  if (static_cast<int>(x.size()) != embedding.spatial_dim) throw ShapeError("point has the wrong spatial dimension");

  const J tj = J::variable_t(S(t), order_x, order_t);
  std::vector<J> z;
  if (embedding.kind == InputEmbedding::Kind::identity) {
    for (int i = 0; i < embedding.spatial_dim; ++i) {
      const double xi = x[static_cast<std::size_t>(i)];
      z.push_back(i == axis ? J::variable_x(S(xi), order_x, order_t) : J(order_x, order_t, S(xi)));
    }
  } else {
    for (int i = 0; i < embedding.spatial_dim; ++i) {
      const double period = embedding.periods[static_cast<std::size_t>(i)];
      const double xi = x[static_cast<std::size_t>(i)];
      const double wrapped = xi - period * std::floor(xi / period + 0.5);
      const J xj = i == axis ? J::variable_x(S(wrapped), order_x, order_t) : J(order_x, order_t, S(wrapped));
      for (int h = 1; h <= embedding.harmonics; ++h) {
        const double w = 2.0 * std::numbers::pi * h / period;
        z.push_back(cos(xj * w));
        z.push_back(sin(xj * w));
      }
    }
  }
  z.push_back(tj);

  const auto terms = model.terms();
  const int trainable_index = model.trainable_term();
  const bool use_flat = !trainable.empty();
  if (use_flat && trainable.size() != model.trainable_count()) throw ShapeError("trainable vector has the wrong length");

  // Control values per term, as jets in t.
  std::vector<J> control(terms.size(), J(1.0));
  for (std::size_t l = 0; l < terms.size(); ++l) {
    const auto* c = terms[l].control;
    if (!c) continue;
    if (use_flat && static_cast<int>(l) == trainable_index && c->trainable()) {
      const S& logit = trainable[trainable.size() - 1];
      const auto& a = c->adaptive_tf();
      const S tf = S(a.t_p) + S(a.t_end - a.t_p) / (S(1.0) + exp(S(0.0) - logit));
      control[l] = c->evaluate_with_tf(tj, tf);
    } else {
      control[l] = c->evaluate(tj);
    }
  }

  const int layers = model.layer_count();
  std::size_t pos = 0;
  for (int k = 0; k < layers; ++k) {
    const Layer& shape = model.shape().layer(static_cast<std::size_t>(k));
    const Eigen::Index rows = shape.weight.rows(), cols = shape.weight.cols();
    std::vector<J> a(static_cast<std::size_t>(rows), J(0.0));
    for (std::size_t l = 0; l < terms.size(); ++l) {
      const J& f = control[l];
      const bool zero = [&] {
        for (int i = 0; i <= order_x; ++i)
          for (int j = 0; j <= order_t; ++j)
            if (ad::value_of(f.coeff(i, j)) != 0.0) return false;
        return true;
      }();
      if (terms[l].control && zero && !(use_flat && static_cast<int>(l) == trainable_index)) continue;
      const Layer& w = terms[l].params->layer(static_cast<std::size_t>(k));
      const bool flat = use_flat && static_cast<int>(l) == trainable_index;
      for (Eigen::Index i = 0; i < rows; ++i) {
        J sum = flat ? J(trainable[pos + static_cast<std::size_t>(rows * cols + i)]) : J(w.bias[i]);
        for (Eigen::Index j = 0; j < cols; ++j) {
          const S wij = flat ? trainable[pos + static_cast<std::size_t>(j * rows + i)] : S(w.weight(i, j));
          sum = sum + z[static_cast<std::size_t>(j)] * wij;
        }
        a[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)] + (terms[l].control ? f * sum : sum);
      }
    }
    pos += static_cast<std::size_t>(rows * cols + rows);
    if (k + 1 < layers)
      for (auto& v : a) v = tanh(v);
    z = std::move(a);
  }
  return z.front();
}

}  // namespace edpinn::network
