#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "edpinn/controlfn/schedule.hpp"
#include "edpinn/network/embedding.hpp"
#include "edpinn/network/params.hpp"

namespace edpinn::network {

/// One additive contribution F(t) * (W z + b) to every layer. A null control
/// means F = 1 everywhere.
struct Term {
  const ParamSet* params = nullptr;
  const controlfn::ControlFunction* control = nullptr;
};

/// Non-owning view of a time-modulated network: the sum of its terms.
/// Terms are evaluated in order, base first.
class Model {
 public:
  /// Full stack, optionally with the level under training on top.
  explicit Model(const controlfn::IntervalSchedule& schedule, const controlfn::ActiveLevel* active = nullptr);

  /// Plain network with constant parameters on [0, domain_end].
  static Model single(const ParamSet& params, double domain_end);

  /// View used while training `active`: base and frozen levels are summed
  /// into one constant term (they all have F = 1 past the schedule end).
  static Model for_training(const controlfn::IntervalSchedule& schedule, const controlfn::ActiveLevel& active);

  std::span<const Term> terms() const noexcept { return terms_; }
  const ParamSet& shape() const { return *terms_.front().params; }
  int layer_count() const { return static_cast<int>(shape().layer_count()); }

  /// Index of the term whose parameters receive gradients, or -1.
  int trainable_term() const noexcept { return trainable_; }
  void set_trainable_term(int index);
  /// Trainable parameter count: the term's params plus one for an adaptive T_f.
  std::size_t trainable_count() const;

  double domain_end() const noexcept { return domain_end_; }
  bool allow_extrapolation() const noexcept { return allow_extrapolation_; }
  void set_allow_extrapolation(bool allow) noexcept { allow_extrapolation_ = allow; }

 private:
  Model() = default;

  std::vector<Term> terms_;
  std::shared_ptr<const ParamSet> owned_;
  int trainable_ = -1;
  double domain_end_ = 0.0;
  bool allow_extrapolation_ = false;
};

/// Derivative channels carried through the network: the value, then
/// d^n/dx^n for n = 1..order_x along one spatial axis, then d^n/dt^n for
/// n = 1..order_t.
struct ChannelLayout {
  int order_x = 0;  // <= 3
  int order_t = 0;  // <= 2

  int count() const noexcept { return 1 + order_x + order_t; }
  int x(int n) const noexcept { return n; }
  int t(int n) const noexcept { return order_x + n; }
};

struct SpaceTimeBatch {
  Eigen::MatrixXd x;     // spatial_dim x B
  Eigen::RowVectorXd t;  // 1 x B

  Eigen::Index size() const noexcept { return t.cols(); }
  static SpaceTimeBatch single(std::span<const double> x, double t);
};

/// Batched forward pass over input-derivative channels, with an exact
/// reverse sweep for parameter gradients.
///
/// Each layer computes A = sum_l F_l(t) (W_l Z + b_l) channel by channel with
/// the Leibniz rule in t (so u_t carries F'(t) (W_l Z + b_l)), then applies
/// tanh through truncated Taylor composition on hidden layers.
class BatchEvaluator {
 public:
  BatchEvaluator(const Model& model, const InputEmbedding& embedding, ChannelLayout layout, int axis = 0);

  /// Returns a (channels x B) matrix. With record = true the intermediates
  /// are kept for one following backward().
  const Eigen::MatrixXd& forward(const SpaceTimeBatch& batch, bool record = false);

  /// Accumulates d(loss)/d(trainable) into grad, given d(loss)/d(outputs)
  /// as a (channels x B) matrix. grad has Model::trainable_count() entries.
  void backward(const Eigen::MatrixXd& output_adjoint, Eigen::Ref<Eigen::VectorXd> grad);

  const ChannelLayout& layout() const noexcept { return layout_; }
  /// One-sided convention for F exactly at knots (right-hand by default).
  void set_side(controlfn::Side side) noexcept { side_ = side; }

 private:
  enum class Mode { skip, unit, varying };
  struct TermState {
    Mode mode = Mode::unit;
    Eigen::RowVectorXd f, f1, f2;        // F, F', F'' per point
    Eigen::RowVectorXd s0, s1, s2;       // dF/dT_f, dF'/dT_f, dF''/dT_f
  };
  struct LayerCache {
    Eigen::MatrixXd input;               // Z_{k-1}, channels side by side
    Eigen::MatrixXd pre;                 // A_k
    Eigen::ArrayXXd tanh_value;          // tanh(A_k channel 0)
    Eigen::MatrixXd trainable_product;   // W Z + b of the trainable term (adaptive only)
  };

  void prepare_terms(const Eigen::RowVectorXd& t);
  void accumulate(Eigen::MatrixXd& pre, const Eigen::MatrixXd& product, const TermState& s) const;
  void product_adjoint(const Eigen::MatrixXd& pre_adjoint, const TermState& s, Eigen::MatrixXd& out) const;
  void tanh_forward(const Eigen::MatrixXd& pre, Eigen::ArrayXXd& y0, Eigen::MatrixXd& out);
  void tanh_backward(const Eigen::MatrixXd& out_adjoint, const Eigen::MatrixXd& pre, const Eigen::ArrayXXd& y0,
                     Eigen::MatrixXd& in);

  const Model& model_;
  const InputEmbedding& embedding_;
  ChannelLayout layout_;
  int axis_;
  controlfn::Side side_ = controlfn::Side::right;
  Eigen::Index batch_ = 0;
  std::vector<TermState> terms_;
  std::vector<LayerCache> cache_;
  bool recorded_ = false;
  Eigen::MatrixXd output_;
  Eigen::MatrixXd product_scratch_;
  std::array<Eigen::MatrixXd, 3> adjoint_;
  std::array<Eigen::ArrayXXd, 5> scratch_;
};

/// Value and requested input derivatives at a single point.
struct PointJet {
  double u = 0.0, u_x = 0.0, u_xx = 0.0, u_xxx = 0.0, u_t = 0.0, u_tt = 0.0;
};

double forward(const Model& model, const InputEmbedding& embedding, std::span<const double> x, double t);
PointJet forward_jet(const Model& model, const InputEmbedding& embedding, std::span<const double> x, double t,
                     ChannelLayout layout, int axis = 0, controlfn::Side side = controlfn::Side::right);

/// Values only, evaluated in chunks to bound memory.
Eigen::RowVectorXd evaluate(const Model& model, const InputEmbedding& embedding, const SpaceTimeBatch& batch,
                            Eigen::Index chunk = 8192);

}  // namespace edpinn::network
