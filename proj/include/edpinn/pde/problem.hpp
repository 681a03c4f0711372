#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "edpinn/autodiff/derivatives.hpp"
#include "edpinn/network/embedding.hpp"

namespace edpinn::pde {

enum class ProblemId { allen_cahn, convection, kdv };
enum class BoundaryKind { dirichlet, periodic, periodic_with_derivative };
enum class SamplingStrategy { uniform, latin_hypercube };

/// Field value and input derivatives at one point.
template <class S>
struct FieldDerivs {
  S u{0.0}, u_t{0.0}, u_tt{0.0}, u_x{0.0}, u_xx{0.0}, u_xxx{0.0};
};

template <class S>
S residual_allen_cahn(const S& u, const S& u_t, const S& u_xx) {
  return u_t - 0.0001 * u_xx + 5.0 * u * u * u - 5.0 * u;
}

template <class S>
S residual_convection(const S& u_t, const S& u_x, double beta) {
  return u_t + beta * u_x;
}

template <class S>
S residual_kdv(const S& u, const S& u_t, const S& u_x, const S& u_xxx) {
  return u_t + u * u_x + 0.0025 * u_xxx;
}

/// N_0, N_b, N_r.
struct SampleCounts {
  int initial = 0;
  int boundary = 0;
  int residual = 0;
};

/// Time-dependent problem u_t + N(u) = 0 on a box in x and (0, T] in t.
struct PdeProblem {
  ProblemId id = ProblemId::allen_cahn;
  std::string name;
  std::vector<std::pair<double, double>> domain;  // per spatial dimension
  double t_end = 1.0;
  double beta = 0.0;  // convection speed
  BoundaryKind boundary = BoundaryKind::periodic;
  std::function<double(std::span<const double>)> initial;
  std::function<double(std::span<const double>, double)> dirichlet;  // dirichlet kind only
  ad::DerivativeOrders orders;

  // Network size and sample counts used for this benchmark.
  int hidden_layers = 4;
  int width = 50;
  SampleCounts counts;

  int spatial_dim() const { return static_cast<int>(domain.size()); }
  bool has_utt() const { return orders.t >= 2; }
  /// Fourier embedding with one harmonic per periodic dimension.
  network::InputEmbedding default_embedding(int harmonics = 1) const;
  void validate() const;

  template <class S>
  S residual(const FieldDerivs<S>& d) const {
    switch (id) {
      case ProblemId::allen_cahn:
        return residual_allen_cahn(d.u, d.u_t, d.u_xx);
      case ProblemId::convection:
        return residual_convection(d.u_t, d.u_x, beta);
      case ProblemId::kdv:
        return residual_kdv(d.u, d.u_t, d.u_x, d.u_xxx);
    }
    return S(0.0);
  }
};

/// u_t - 1e-4 u_xx + 5u^3 - 5u = 0 on (-1, 1), u(x, 0) = x^2 cos(pi x).
PdeProblem allen_cahn();
/// u_t + beta u_x = 0 on (0, 2 pi), u(x, 0) = sin x.
PdeProblem convection(double beta);
/// u_t + u u_x + 0.0025 u_xxx = 0 on (-1, 1), u(x, 0) = cos(pi x).
PdeProblem kdv();
/// "allen_cahn", "convection" or "kdv"; throws ConfigError otherwise.
PdeProblem problem_by_name(const std::string& name, double beta = 40.0);
std::string to_string(ProblemId id);

/// Residual value and its partials with respect to each field derivative.
struct ResidualLinearization {
  double value = 0.0;
  FieldDerivs<double> partials;
};
ResidualLinearization linearize_residual(const PdeProblem& problem, const FieldDerivs<double>& d, ad::Tape& tape);

/// Training points for one time window (t_lo, t_hi].
struct SampleBatch {
  double t_lo = 0.0, t_hi = 1.0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd x_initial;  // d x N_0, at t = 0
  Eigen::VectorXd u_initial;  // I(x)
  // Boundary point i sits on the faces of dimension boundary_dim[i]; for the
  // periodic kinds x_left/x_right are the paired points. For dirichlet only
  // x_left is used and may lie on either face.
  Eigen::MatrixXd x_left, x_right;
  Eigen::RowVectorXd t_boundary;
  std::vector<int> boundary_dim;
  Eigen::VectorXd u_boundary;  // dirichlet targets
  Eigen::MatrixXd x_residual;  // d x N_r
  Eigen::RowVectorXd t_residual;

  int initial_count() const { return static_cast<int>(u_initial.size()); }
  int boundary_count() const { return static_cast<int>(t_boundary.size()); }
  int residual_count() const { return static_cast<int>(t_residual.size()); }
};

/// Initial points are drawn only when t_lo = 0.
SampleBatch sample(const PdeProblem& problem, SampleCounts counts, double t_lo, double t_hi,
                   SamplingStrategy strategy, std::uint64_t seed);

}  // namespace edpinn::pde
