#include "edpinn/network/model.hpp"

#include <sstream>

#include "edpinn/errors.hpp"

namespace edpinn::network {

namespace {

using Eigen::ArrayXXd;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;

auto block(MatrixXd& m, int channel, Index b) { return m.middleCols(channel * b, b); }
auto block(const MatrixXd& m, int channel, Index b) { return m.middleCols(channel * b, b); }

}  // namespace

Model::Model(const controlfn::IntervalSchedule& schedule, const controlfn::ActiveLevel* active) {
  terms_.push_back({&schedule.base(), nullptr});
  for (const auto& level : schedule.levels()) terms_.push_back({&level.delta, &level.control});
  if (active) {
    schedule.base().require_same_shape(active->delta, "active correction");
    terms_.push_back({&active->delta, &active->control});
    trainable_ = static_cast<int>(terms_.size()) - 1;
  }
  domain_end_ = active ? active->control.t_end() : schedule.end();
}

Model Model::single(const ParamSet& params, double domain_end) {
  params.validate();
  Model m;
  m.terms_.push_back({&params, nullptr});
  m.trainable_ = 0;
  m.domain_end_ = domain_end;
  return m;
}

Model Model::for_training(const controlfn::IntervalSchedule& schedule, const controlfn::ActiveLevel& active) {
  schedule.base().require_same_shape(active.delta, "active correction");
  auto merged = std::make_shared<ParamSet>(schedule.base());
  for (const auto& level : schedule.levels()) *merged += level.delta;
  Model m;
  m.owned_ = merged;
  m.terms_.push_back({merged.get(), nullptr});
  m.terms_.push_back({&active.delta, &active.control});
  m.trainable_ = 1;
  m.domain_end_ = active.control.t_end();
  return m;
}

void Model::set_trainable_term(int index) {
  if (index < -1 || index >= static_cast<int>(terms_.size())) throw ShapeError("trainable term index out of range");
  trainable_ = index;
}

std::size_t Model::trainable_count() const {
  if (trainable_ < 0) return 0;
  const Term& t = terms_[static_cast<std::size_t>(trainable_)];
  return t.params->parameter_count() + (t.control && t.control->trainable() ? 1 : 0);
}

SpaceTimeBatch SpaceTimeBatch::single(std::span<const double> x, double t) {
  SpaceTimeBatch b;
  b.x.resize(static_cast<Index>(x.size()), 1);
  for (std::size_t i = 0; i < x.size(); ++i) b.x(static_cast<Index>(i), 0) = x[i];
  b.t.resize(1);
  b.t[0] = t;
  return b;
}

BatchEvaluator::BatchEvaluator(const Model& model, const InputEmbedding& embedding, ChannelLayout layout, int axis)
    : model_(model), embedding_(embedding), layout_(layout), axis_(axis) {
  embedding_.validate();
  if (layout.order_x < 0 || layout.order_x > 3 || layout.order_t < 0 || layout.order_t > 2)
    throw ShapeError("supported derivative orders are x <= 3 and t <= 2");
  if (axis < 0 || axis >= embedding.spatial_dim) throw ShapeError("derivative axis out of range");
  if (model.shape().input_size() != embedding.input_size()) {
    std::ostringstream msg;
    msg << "network expects " << model.shape().input_size() << " inputs, embedding produces "
        << embedding.input_size();
    throw ShapeError(msg.str());
  }
  if (layout.order_t >= 2) {
    for (const Term& term : model.terms())
      if (term.control && term.control->smoothness_order() < 2)
        throw DomainError("u_tt requested but control function '" + term.control->name() +
                          "' is only C1; use smoothness_order = 2 so that F'' vanishes at both knots");
  }
}

void BatchEvaluator::prepare_terms(const RowVectorXd& t) {
  const auto terms = model_.terms();
  terms_.assign(terms.size(), TermState{});
  for (std::size_t l = 0; l < terms.size(); ++l) {
    const auto* control = terms[l].control;
    TermState& s = terms_[l];
    if (!control) continue;
    s.f.resize(batch_);
    s.f1.resize(batch_);
    s.f2.resize(batch_);
    bool zero = true, one = true;
    for (Index i = 0; i < batch_; ++i) {
      const auto v = control->eval(t[i], side_);
      s.f[i] = v.value;
      s.f1[i] = v.d1;
      s.f2[i] = v.d2;
      zero = zero && v.value == 0.0 && v.d1 == 0.0 && v.d2 == 0.0;
      one = one && v.value == 1.0 && v.d1 == 0.0 && v.d2 == 0.0;
    }
    s.mode = zero ? Mode::skip : one ? Mode::unit : Mode::varying;
    if (s.mode == Mode::varying && static_cast<int>(l) == model_.trainable_term() && control->trainable()) {
      s.s0.resize(batch_);
      s.s1.resize(batch_);
      s.s2.resize(batch_);
      for (Index i = 0; i < batch_; ++i) {
        const auto d = control->eval_dtf(t[i]);
        s.s0[i] = d.value;
        s.s1[i] = d.d1;
        s.s2[i] = d.d2;
      }
    }
  }
}

void BatchEvaluator::accumulate(MatrixXd& pre, const MatrixXd& product, const TermState& s) const {
  const Index b = batch_;
  const int spatial = 1 + layout_.order_x;
  for (int c = 0; c < spatial; ++c)
    block(pre, c, b).array() += block(product, c, b).array().rowwise() * s.f.array();
  if (layout_.order_t >= 1) {
    const int t1 = layout_.t(1);
    block(pre, t1, b).array() += block(product, t1, b).array().rowwise() * s.f.array() +
                                 block(product, 0, b).array().rowwise() * s.f1.array();
  }
  if (layout_.order_t >= 2) {
    const int t1 = layout_.t(1), t2 = layout_.t(2);
    block(pre, t2, b).array() += block(product, t2, b).array().rowwise() * s.f.array() +
                                 2.0 * (block(product, t1, b).array().rowwise() * s.f1.array()) +
                                 block(product, 0, b).array().rowwise() * s.f2.array();
  }
}

void BatchEvaluator::product_adjoint(const MatrixXd& pre_adjoint, const TermState& s, MatrixXd& out) const {
  const Index b = batch_;
  out.resize(pre_adjoint.rows(), pre_adjoint.cols());
  for (int c = 0; c < layout_.count(); ++c)
    block(out, c, b).array() = block(pre_adjoint, c, b).array().rowwise() * s.f.array();
  if (layout_.order_t >= 1)
    block(out, 0, b).array() += block(pre_adjoint, layout_.t(1), b).array().rowwise() * s.f1.array();
  if (layout_.order_t >= 2) {
    block(out, 0, b).array() += block(pre_adjoint, layout_.t(2), b).array().rowwise() * s.f2.array();
    block(out, layout_.t(1), b).array() +=
        2.0 * (block(pre_adjoint, layout_.t(2), b).array().rowwise() * s.f1.array());
  }
}

// Truncated Taylor composition of tanh along each direction:
//   y1 = s1 a1, y2 = s1 a2 + s2 a1^2, y3 = s1 a3 + 3 s2 a1 a2 + s3 a1^3
// with s_k the k-th derivative of tanh at a0 (plain derivatives, not Taylor
// coefficients).
void BatchEvaluator::tanh_forward(const MatrixXd& pre, ArrayXXd& y0, MatrixXd& out) {
  const Index b = batch_;
  out.resize(pre.rows(), pre.cols());
  // 1 - 2/(e^{2a} + 1): vectorizes, and is within a few ulp of tanh.
  y0 = 1.0 - 2.0 / ((2.0 * block(pre, 0, b).array()).exp() + 1.0);
  block(out, 0, b) = y0.matrix();
  const int max_order = std::max(layout_.order_x, layout_.order_t);
  if (max_order == 0) return;
  ArrayXXd& s1 = scratch_[0];
  ArrayXXd& s2 = scratch_[1];
  ArrayXXd& s3 = scratch_[2];
  s1 = 1.0 - y0.square();
  if (max_order >= 2) s2 = -2.0 * y0 * s1;
  if (max_order >= 3) s3 = -2.0 * s1.square() - 2.0 * y0 * s2;
  auto direction = [&](auto channel, int order) {
    if (order == 0) return;
    const auto a1 = block(pre, channel(1), b).array();
    block(out, channel(1), b) = (s1 * a1).matrix();
    if (order >= 2) {
      const auto a2 = block(pre, channel(2), b).array();
      block(out, channel(2), b) = (s1 * a2 + s2 * a1.square()).matrix();
      if (order >= 3) {
        const auto a3 = block(pre, channel(3), b).array();
        block(out, channel(3), b) = (s1 * a3 + 3.0 * s2 * a1 * a2 + s3 * a1.cube()).matrix();
      }
    }
  };
  direction([&](int n) { return layout_.x(n); }, layout_.order_x);
  direction([&](int n) { return layout_.t(n); }, layout_.order_t);
}

void BatchEvaluator::tanh_backward(const MatrixXd& out_adjoint, const MatrixXd& pre, const ArrayXXd& y0,
                                   MatrixXd& in) {
  const Index b = batch_;
  in.resize(pre.rows(), pre.cols());
  const int max_order = std::max(layout_.order_x, layout_.order_t);
  ArrayXXd& s1 = scratch_[0];
  ArrayXXd& s2 = scratch_[1];
  ArrayXXd& s3 = scratch_[2];
  ArrayXXd& s4 = scratch_[3];
  ArrayXXd& a0_adj = scratch_[4];
  s1 = 1.0 - y0.square();
  if (max_order >= 1) s2 = -2.0 * y0 * s1;
  if (max_order >= 2) s3 = -2.0 * s1.square() - 2.0 * y0 * s2;
  if (max_order >= 3) s4 = -6.0 * s1 * s2 - 2.0 * y0 * s3;
  a0_adj = s1 * block(out_adjoint, 0, b).array();
  auto direction = [&](auto channel, int order) {
    if (order == 0) return;
    const auto a1 = block(pre, channel(1), b).array();
    const auto g1 = block(out_adjoint, channel(1), b).array();
    if (order == 1) {
      block(in, channel(1), b) = (s1 * g1).matrix();
      a0_adj += s2 * a1 * g1;
      return;
    }
    const auto a2 = block(pre, channel(2), b).array();
    const auto g2 = block(out_adjoint, channel(2), b).array();
    if (order == 2) {
      block(in, channel(1), b) = (s1 * g1 + 2.0 * s2 * a1 * g2).matrix();
      block(in, channel(2), b) = (s1 * g2).matrix();
      a0_adj += s2 * a1 * g1 + (s2 * a2 + s3 * a1.square()) * g2;
      return;
    }
    const auto a3 = block(pre, channel(3), b).array();
    const auto g3 = block(out_adjoint, channel(3), b).array();
    block(in, channel(1), b) = (s1 * g1 + 2.0 * s2 * a1 * g2 + (3.0 * s2 * a2 + 3.0 * s3 * a1.square()) * g3).matrix();
    block(in, channel(2), b) = (s1 * g2 + 3.0 * s2 * a1 * g3).matrix();
    block(in, channel(3), b) = (s1 * g3).matrix();
    a0_adj += s2 * a1 * g1 + (s2 * a2 + s3 * a1.square()) * g2 +
              (s2 * a3 + 3.0 * s3 * a1 * a2 + s4 * a1.cube()) * g3;
  };
  direction([&](int n) { return layout_.x(n); }, layout_.order_x);
  direction([&](int n) { return layout_.t(n); }, layout_.order_t);
  block(in, 0, b) = a0_adj.matrix();
}

const MatrixXd& BatchEvaluator::forward(const SpaceTimeBatch& batch, bool record) {
  batch_ = batch.size();
  if (batch.x.rows() != embedding_.spatial_dim || batch.x.cols() != batch_)
    throw ShapeError("batch x must be spatial_dim x B");
  if (!model_.allow_extrapolation()) {
    for (Index i = 0; i < batch_; ++i)
      if (batch.t[i] > model_.domain_end()) {
        std::ostringstream msg;
        msg << "t=" << batch.t[i] << " lies beyond the last trained interval end " << model_.domain_end();
        throw DomainError(msg.str());
      }
  }
  prepare_terms(batch.t);
  const int layers = model_.layer_count();
  const auto terms = model_.terms();
  const int trainable = model_.trainable_term();
  const bool keep_product = record && trainable >= 0 &&
                            terms_[static_cast<std::size_t>(trainable)].mode == Mode::varying &&
                            terms[static_cast<std::size_t>(trainable)].control->trainable();
  recorded_ = record;
  // Buffers persist across calls; same-size reuse avoids reallocating.
  cache_.resize(static_cast<std::size_t>(layers));

  cache_[0].input = embedding_.embed_channels(batch.x, batch.t, axis_, layout_.order_x, layout_.order_t);
  const int channels = layout_.count();
  for (int k = 0; k < layers; ++k) {
    LayerCache& cache = cache_[static_cast<std::size_t>(k)];
    const MatrixXd& z = cache.input;
    const Index fan_out = model_.shape().layer(static_cast<std::size_t>(k)).weight.rows();
    MatrixXd& pre = cache.pre;
    pre.setZero(fan_out, channels * batch_);
    for (std::size_t l = 0; l < terms.size(); ++l) {
      const TermState& s = terms_[l];
      if (s.mode == Mode::skip) continue;
      const Layer& w = terms[l].params->layer(static_cast<std::size_t>(k));
      if (s.mode == Mode::unit) {
        pre.noalias() += w.weight * z;
        block(pre, 0, batch_).colwise() += w.bias;
      } else {
        MatrixXd& product =
            keep_product && static_cast<int>(l) == trainable ? cache.trainable_product : product_scratch_;
        product.noalias() = w.weight * z;
        block(product, 0, batch_).colwise() += w.bias;
        accumulate(pre, product, s);
      }
    }
    if (k + 1 < layers) {
      tanh_forward(pre, cache.tanh_value, cache_[static_cast<std::size_t>(k) + 1].input);
    } else {
      output_.resize(channels, batch_);
      for (int c = 0; c < channels; ++c) output_.row(c) = block(pre, c, batch_);
    }
  }
  if (!output_.allFinite()) throw OverflowError("non-finite network output");
  return output_;
}

void BatchEvaluator::backward(const MatrixXd& output_adjoint, Eigen::Ref<Eigen::VectorXd> grad) {
  if (!recorded_) throw ShapeError("backward() needs a preceding forward(record = true)");
  recorded_ = false;
  const int trainable = model_.trainable_term();
  if (trainable < 0) throw ShapeError("model has no trainable term");
  if (grad.size() != static_cast<Index>(model_.trainable_count())) throw ShapeError("gradient has the wrong length");
  const int channels = layout_.count();
  if (output_adjoint.rows() != channels || output_adjoint.cols() != batch_)
    throw ShapeError("output adjoint must be channels x B");

  const auto terms = model_.terms();
  const Term& trainable_term = terms[static_cast<std::size_t>(trainable)];
  const TermState& ts = terms_[static_cast<std::size_t>(trainable)];
  const bool adaptive = trainable_term.control && trainable_term.control->trainable();
  const int layers = model_.layer_count();

  // Offsets of each layer's block in the flat gradient.
  std::vector<Index> offset(static_cast<std::size_t>(layers) + 1, 0);
  for (int k = 0; k < layers; ++k) {
    const Layer& w = trainable_term.params->layer(static_cast<std::size_t>(k));
    offset[static_cast<std::size_t>(k) + 1] = offset[static_cast<std::size_t>(k)] + w.weight.size() + w.bias.size();
  }

  double logit_grad = 0.0;
  MatrixXd& pre_adj = adjoint_[0];
  MatrixXd& out_adj = adjoint_[1];
  MatrixXd& input_adj = adjoint_[2];
  pre_adj.resize(1, channels * batch_);
  for (int c = 0; c < channels; ++c) block(pre_adj, c, batch_) = output_adjoint.row(c);

  for (int k = layers - 1; k >= 0; --k) {
    const LayerCache& cache = cache_[static_cast<std::size_t>(k)];
    if (k + 1 < layers) {
      out_adj.swap(pre_adj);
      tanh_backward(out_adj, cache.pre, cache.tanh_value, pre_adj);
    }

    if (k > 0) input_adj.setZero(cache.input.rows(), cache.input.cols());
    for (std::size_t l = 0; l < terms.size(); ++l) {
      const TermState& s = terms_[l];
      if (s.mode == Mode::skip) continue;
      const bool is_trainable = static_cast<int>(l) == trainable;
      if (!is_trainable && k == 0) continue;
      const Layer& w = terms[l].params->layer(static_cast<std::size_t>(k));
      if (s.mode == Mode::varying) product_adjoint(pre_adj, s, product_scratch_);
      const MatrixXd& product_adj = s.mode == Mode::varying ? product_scratch_ : pre_adj;

      if (is_trainable) {
        const Index pos = offset[static_cast<std::size_t>(k)];
        Eigen::Map<MatrixXd> gw(grad.data() + pos, w.weight.rows(), w.weight.cols());
        gw.noalias() += product_adj * cache.input.transpose();
        grad.segment(pos + w.weight.size(), w.bias.size()) += block(product_adj, 0, batch_).rowwise().sum();

        if (adaptive && s.mode == Mode::varying) {
          // Adjoints of F, F', F'' per point, then chain through T_f.
          const MatrixXd& p = cache.trainable_product;
          RowVectorXd f_adj = RowVectorXd::Zero(batch_);
          for (int c = 0; c < channels; ++c)
            f_adj += (block(pre_adj, c, batch_).array() * block(p, c, batch_).array()).colwise().sum().matrix();
          RowVectorXd f1_adj = RowVectorXd::Zero(batch_), f2_adj = RowVectorXd::Zero(batch_);
          if (layout_.order_t >= 1)
            f1_adj += (block(pre_adj, layout_.t(1), batch_).array() * block(p, 0, batch_).array())
                          .colwise()
                          .sum()
                          .matrix();
          if (layout_.order_t >= 2) {
            f1_adj += 2.0 * (block(pre_adj, layout_.t(2), batch_).array() * block(p, layout_.t(1), batch_).array())
                                .colwise()
                                .sum()
                                .matrix();
            f2_adj += (block(pre_adj, layout_.t(2), batch_).array() * block(p, 0, batch_).array())
                          .colwise()
                          .sum()
                          .matrix();
          }
          logit_grad += f_adj.dot(ts.s0) + f1_adj.dot(ts.s1) + f2_adj.dot(ts.s2);
        }
      }
      if (k > 0) input_adj.noalias() += w.weight.transpose() * product_adj;
    }
    if (k > 0) pre_adj.swap(input_adj);
  }
  if (adaptive) grad[grad.size() - 1] += logit_grad * trainable_term.control->adaptive_tf().d_value_d_logit();
}

double forward(const Model& model, const InputEmbedding& embedding, std::span<const double> x, double t) {
  BatchEvaluator ev(model, embedding, ChannelLayout{});
  return ev.forward(SpaceTimeBatch::single(x, t))(0, 0);
}

PointJet forward_jet(const Model& model, const InputEmbedding& embedding, std::span<const double> x, double t,
                     ChannelLayout layout, int axis, controlfn::Side side) {
  BatchEvaluator ev(model, embedding, layout, axis);
  ev.set_side(side);
  const MatrixXd& out = ev.forward(SpaceTimeBatch::single(x, t));
  PointJet j;
  j.u = out(0, 0);
  double* xs[] = {&j.u_x, &j.u_xx, &j.u_xxx};
  for (int n = 1; n <= layout.order_x; ++n) *xs[n - 1] = out(layout.x(n), 0);
  if (layout.order_t >= 1) j.u_t = out(layout.t(1), 0);
  if (layout.order_t >= 2) j.u_tt = out(layout.t(2), 0);
  return j;
}

RowVectorXd evaluate(const Model& model, const InputEmbedding& embedding, const SpaceTimeBatch& batch, Index chunk) {
  BatchEvaluator ev(model, embedding, ChannelLayout{});
  RowVectorXd out(batch.size());
  for (Index start = 0; start < batch.size(); start += chunk) {
    const Index n = std::min(chunk, batch.size() - start);
    SpaceTimeBatch part{batch.x.middleCols(start, n), batch.t.segment(start, n)};
    out.segment(start, n) = ev.forward(part).row(0);
  }
  return out;
}

}  // namespace edpinn::network
