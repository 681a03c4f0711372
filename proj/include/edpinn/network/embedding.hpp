#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace edpinn::network {

/// Maps a space-time point to the network input vector.
///
/// identity:          X = (x_1..x_d, t)
/// fourier_periodic:  X = (cos(2 pi h x_i / P_i), sin(2 pi h x_i / P_i) for
///                    i = 1..d, h = 1..H, t); exactly P_i-periodic in x_i.
struct InputEmbedding {
  enum class Kind { identity, fourier_periodic };

  Kind kind = Kind::identity;
  int spatial_dim = 1;
  std::vector<double> periods;  // fourier_periodic only, one per dimension
  int harmonics = 1;

  static InputEmbedding identity(int spatial_dim = 1);
  static InputEmbedding fourier(std::vector<double> periods, int harmonics = 1);

  int input_size() const;
  void validate() const;

  Eigen::VectorXd embed(std::span<const double> x, double t) const;

  /// Embedded inputs and their derivatives for a batch.
  ///
  /// x is spatial_dim x B, t is 1 x B. Returns a (input_size) x (C*B) matrix
  /// with channel blocks {value, d/dx_axis^1..order_x, d/dt^1..order_t}.
  Eigen::MatrixXd embed_channels(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& t, int axis, int order_x,
                                 int order_t) const;
};

}  // namespace edpinn::network
