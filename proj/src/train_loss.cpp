#include "edpinn/train/loss.hpp"

#include <cmath>
#include <sstream>

#include "edpinn/errors.hpp"
#include "edpinn/network/generic.hpp"

namespace edpinn::train {

using Eigen::Index;
using Eigen::MatrixXd;

void LossWeights::validate() const {
  if (w_s < 0.0 || w_r < 0.0) throw ConfigError("loss weights must be non-negative");
  if (w_s == 0.0 && w_r == 0.0) throw ConfigError("loss weights w_s and w_r cannot both be zero");
}

LossFunction::LossFunction(const pde::PdeProblem& problem, const network::InputEmbedding& embedding,
                           const pde::SampleBatch& batch, LossWeights weights, Index chunk)
    : problem_(problem), embedding_(embedding), batch_(batch), weights_(weights), chunk_(chunk) {
  weights_.validate();
  if (batch.initial_count() + batch.boundary_count() + batch.residual_count() == 0)
    throw ShapeError("loss needs a nonempty sample batch");
}

network::ChannelLayout LossFunction::residual_layout() const { return {problem_.orders.x, problem_.orders.t}; }

LossValue LossFunction::value(const network::Model& model) const { return run(model, nullptr); }

LossValue LossFunction::value_and_gradient(const network::Model& model, Eigen::Ref<Eigen::VectorXd> grad) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Index>(model.trainable_count()));
  const LossValue v = run(model, &g);
  grad = g;
  return v;
}

namespace {

[[noreturn]] void diverged(const char* what, double value, double t, double x) {
  std::ostringstream msg;
  msg << "non-finite " << what << " (" << value << ") at t=" << t << ", x=" << x;
  throw DivergenceError(msg.str(), t, x);
}

network::SpaceTimeBatch slice(const MatrixXd& x, const Eigen::RowVectorXd& t, Index start, Index n) {
  return {x.middleCols(start, n), t.segment(start, n)};
}

}  // namespace

LossFunction::Evaluators& LossFunction::evaluators(const network::Model& model) const {
  if (evaluators_.model == &model) return evaluators_;
  Evaluators e;
  e.model = &model;
  e.initial = std::make_unique<network::BatchEvaluator>(model, embedding_, network::ChannelLayout{0, 0});
  e.residual = std::make_unique<network::BatchEvaluator>(model, embedding_, residual_layout(), 0);
  const network::ChannelLayout layout{problem_.boundary == pde::BoundaryKind::periodic_with_derivative ? 1 : 0, 0};
  for (int dim = 0; dim < problem_.spatial_dim(); ++dim) {
    e.left.push_back(std::make_unique<network::BatchEvaluator>(model, embedding_, layout, dim));
    e.right.push_back(std::make_unique<network::BatchEvaluator>(model, embedding_, layout, dim));
  }
  evaluators_ = std::move(e);
  return evaluators_;
}

LossValue LossFunction::run(const network::Model& model, Eigen::VectorXd* grad) const {
  const bool need_grad = grad != nullptr;
  LossValue out;
  Evaluators& evs = evaluators(model);

  // Initial condition.
  const Index n0 = batch_.initial_count();
  double ic = 0.0;
  if (n0 > 0) {
    network::BatchEvaluator& ev = *evs.initial;
    const Eigen::RowVectorXd t0 = Eigen::RowVectorXd::Zero(n0);
    for (Index start = 0; start < n0; start += chunk_) {
      const Index n = std::min(chunk_, n0 - start);
      const MatrixXd& u = ev.forward(slice(batch_.x_initial, t0, start, n), need_grad);
      MatrixXd adj(1, n);
      for (Index i = 0; i < n; ++i) {
        const double r = u(0, i) - batch_.u_initial[start + i];
        if (!std::isfinite(r)) diverged("initial mismatch", r, 0.0, batch_.x_initial(0, start + i));
        ic += r * r;
        adj(0, i) = weights_.w_s * 2.0 * r / static_cast<double>(n0);
      }
      if (need_grad) ev.backward(adj, *grad);
    }
    ic /= static_cast<double>(n0);
  }

  // Boundary.
  const Index nb = batch_.boundary_count();
  double bc = 0.0;
  if (nb > 0) {
    const bool dirichlet = problem_.boundary == pde::BoundaryKind::dirichlet;
    const bool with_derivative = problem_.boundary == pde::BoundaryKind::periodic_with_derivative;
    for (int dim = 0; dim < problem_.spatial_dim(); ++dim) {
      std::vector<Index> idx;
      for (Index i = 0; i < nb; ++i)
        if (batch_.boundary_dim[static_cast<std::size_t>(i)] == dim) idx.push_back(i);
      if (idx.empty()) continue;
      const Index m = static_cast<Index>(idx.size());
      MatrixXd xl(problem_.spatial_dim(), m), xr(problem_.spatial_dim(), m);
      Eigen::RowVectorXd tb(m);
      Eigen::VectorXd target(m);
      for (Index k = 0; k < m; ++k) {
        xl.col(k) = batch_.x_left.col(idx[static_cast<std::size_t>(k)]);
        xr.col(k) = batch_.x_right.col(idx[static_cast<std::size_t>(k)]);
        tb[k] = batch_.t_boundary[idx[static_cast<std::size_t>(k)]];
        target[k] = batch_.u_boundary[idx[static_cast<std::size_t>(k)]];
      }
      const network::ChannelLayout layout{with_derivative ? 1 : 0, 0};
      network::BatchEvaluator& left = *evs.left[static_cast<std::size_t>(dim)];
      network::BatchEvaluator& right = *evs.right[static_cast<std::size_t>(dim)];
      const double scale = weights_.w_s * 2.0 / static_cast<double>(nb);
      for (Index start = 0; start < m; start += chunk_) {
        const Index n = std::min(chunk_, m - start);
        const MatrixXd& ul = left.forward(slice(xl, tb, start, n), need_grad);
        MatrixXd adj_l = MatrixXd::Zero(layout.count(), n);
        if (dirichlet) {
          for (Index i = 0; i < n; ++i) {
            const double r = ul(0, i) - target[start + i];
            if (!std::isfinite(r)) diverged("boundary mismatch", r, tb[start + i], xl(0, start + i));
            bc += r * r;
            adj_l(0, i) = scale * r;
          }
          if (need_grad) left.backward(adj_l, *grad);
          continue;
        }
        const MatrixXd& ur = right.forward(slice(xr, tb, start, n), need_grad);
        MatrixXd adj_r(layout.count(), n);
        for (Index i = 0; i < n; ++i) {
          for (int c = 0; c < layout.count(); ++c) {
            const double r = ul(c, i) - ur(c, i);
            if (!std::isfinite(r)) diverged("periodic mismatch", r, tb[start + i], xl(0, start + i));
            bc += r * r;
            adj_l(c, i) = scale * r;
          }
        }
        adj_r = -adj_l;
        if (need_grad) {
          left.backward(adj_l, *grad);
          right.backward(adj_r, *grad);
        }
      }
    }
    bc /= static_cast<double>(nb);
  }

  // Residual.
  const Index nr = batch_.residual_count();
  double res = 0.0;
  if (nr > 0) {
    const network::ChannelLayout layout = residual_layout();
    network::BatchEvaluator& ev = *evs.residual;
    ad::Tape tape;
    const double scale = weights_.w_r * 2.0 / static_cast<double>(nr);
    for (Index start = 0; start < nr; start += chunk_) {
      const Index n = std::min(chunk_, nr - start);
      const MatrixXd& u = ev.forward(slice(batch_.x_residual, batch_.t_residual, start, n), need_grad);
      MatrixXd adj = MatrixXd::Zero(layout.count(), n);
      for (Index i = 0; i < n; ++i) {
        pde::FieldDerivs<double> d;
        d.u = u(0, i);
        double* xs[] = {&d.u_x, &d.u_xx, &d.u_xxx};
        for (int k = 1; k <= layout.order_x; ++k) *xs[k - 1] = u(layout.x(k), i);
        if (layout.order_t >= 1) d.u_t = u(layout.t(1), i);
        if (layout.order_t >= 2) d.u_tt = u(layout.t(2), i);
        pde::ResidualLinearization lin;
        try {
          lin = pde::linearize_residual(problem_, d, tape);
        } catch (const OverflowError&) {
          diverged("residual", d.u, batch_.t_residual[start + i], batch_.x_residual(0, start + i));
        }
        if (!std::isfinite(lin.value))
          diverged("residual", lin.value, batch_.t_residual[start + i], batch_.x_residual(0, start + i));
        res += lin.value * lin.value;
        const double a = scale * lin.value;
        adj(0, i) = a * lin.partials.u;
        const double px[] = {lin.partials.u_x, lin.partials.u_xx, lin.partials.u_xxx};
        for (int k = 1; k <= layout.order_x; ++k) adj(layout.x(k), i) = a * px[k - 1];
        if (layout.order_t >= 1) adj(layout.t(1), i) = a * lin.partials.u_t;
        if (layout.order_t >= 2) adj(layout.t(2), i) = a * lin.partials.u_tt;
      }
      if (need_grad) ev.backward(adj, *grad);
    }
    res /= static_cast<double>(nr);
  }

  out.supervised = ic + bc;
  out.residual = res;
  out.total = weights_.w_s * out.supervised + weights_.w_r * out.residual;
  if (!std::isfinite(out.total)) throw DivergenceError("non-finite loss");
  return out;
}

ResidualGradient grad_params_of_residual(const network::Model& model, const network::InputEmbedding& embedding,
                                         const pde::PdeProblem& problem, std::span<const double> x, double t) {
  if (model.trainable_term() < 0) throw ShapeError("model has no trainable term");
  const network::Term& term = model.terms()[static_cast<std::size_t>(model.trainable_term())];
  Eigen::VectorXd flat = term.params->flatten();
  std::vector<double> values(flat.data(), flat.data() + flat.size());
  if (term.control && term.control->trainable()) values.push_back(term.control->tf_logit());

  const ad::TapedLoss loss = [&](std::span<const ad::Var> p) {
    const auto jet = network::forward_generic<ad::Var>(model, embedding, x, t, 0, problem.orders.x, problem.orders.t, p);
    pde::FieldDerivs<ad::Var> d;
    d.u = jet.derivative(0, 0);
    ad::Var* xs[] = {&d.u_x, &d.u_xx, &d.u_xxx};
    for (int k = 1; k <= problem.orders.x; ++k) *xs[k - 1] = jet.derivative(k, 0);
    if (problem.orders.t >= 1) d.u_t = jet.derivative(0, 1);
    if (problem.orders.t >= 2) d.u_tt = jet.derivative(0, 2);
    const ad::Var r = problem.residual(d);
    return r * r;
  };
  const auto g = ad::grad_params(loss, values, values.size());
  ResidualGradient out;
  out.squared_residual = g.value;
  out.gradient = Eigen::Map<const Eigen::VectorXd>(g.gradient.data(), static_cast<Index>(g.gradient.size()));
  return out;
}

}  // namespace edpinn::train
