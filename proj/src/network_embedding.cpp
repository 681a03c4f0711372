#include "edpinn/network/embedding.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "edpinn/errors.hpp"

namespace edpinn::network {

namespace {

// Reduce x to [-P/2, P/2) so the two ends of a period give identical inputs.
double wrap(double x, double period) { return x - period * std::floor(x / period + 0.5); }

}  // namespace

InputEmbedding InputEmbedding::identity(int spatial_dim) {
  InputEmbedding e;
  e.kind = Kind::identity;
  e.spatial_dim = spatial_dim;
  e.validate();
  return e;
}

InputEmbedding InputEmbedding::fourier(std::vector<double> periods, int harmonics) {
  InputEmbedding e;
  e.kind = Kind::fourier_periodic;
  e.spatial_dim = static_cast<int>(periods.size());
  e.periods = std::move(periods);
  e.harmonics = harmonics;
  e.validate();
  return e;
}

void InputEmbedding::validate() const {
  if (spatial_dim < 1) throw ShapeError("embedding: spatial dimension must be >= 1");
  if (kind == Kind::fourier_periodic) {
    if (static_cast<int>(periods.size()) != spatial_dim)
      throw ShapeError("embedding: need one period per spatial dimension");
    if (harmonics < 1) throw ShapeError("embedding: harmonics must be >= 1");
    for (double p : periods)
      if (!(p > 0.0)) throw ShapeError("embedding: periods must be positive");
  }
}

int InputEmbedding::input_size() const {
  return kind == Kind::identity ? spatial_dim + 1 : 2 * harmonics * spatial_dim + 1;
}

Eigen::VectorXd InputEmbedding::embed(std::span<const double> x, double t) const {
  if (static_cast<int>(x.size()) != spatial_dim)
    throw ShapeError("embedding: point has " + std::to_string(x.size()) + " spatial coordinates, expected " +
                     std::to_string(spatial_dim));
  Eigen::VectorXd out(input_size());
  if (kind == Kind::identity) {
    for (int i = 0; i < spatial_dim; ++i) out[i] = x[static_cast<std::size_t>(i)];
  } else {
    int row = 0;
    for (int i = 0; i < spatial_dim; ++i)
      for (int h = 1; h <= harmonics; ++h) {
        const double w = 2.0 * std::numbers::pi * h / periods[static_cast<std::size_t>(i)];
        const double xr = wrap(x[static_cast<std::size_t>(i)], periods[static_cast<std::size_t>(i)]);
        out[row++] = std::cos(w * xr);
        out[row++] = std::sin(w * xr);
      }
  }
  out[input_size() - 1] = t;
  return out;
}

Eigen::MatrixXd InputEmbedding::embed_channels(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& t, int axis,
                                               int order_x, int order_t) const {
  if (x.rows() != spatial_dim || x.cols() != t.cols()) throw ShapeError("embedding: batch shape mismatch");
  if (axis < 0 || axis >= spatial_dim) throw ShapeError("embedding: derivative axis out of range");
  const Eigen::Index batch = t.cols();
  const int channels = 1 + order_x + order_t;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(input_size(), channels * batch);
  const int t_row = input_size() - 1;
  out.block(t_row, 0, 1, batch) = t;
  if (order_t >= 1) out.block(t_row, (1 + order_x) * batch, 1, batch).setOnes();

  if (kind == Kind::identity) {
    out.topLeftCorner(spatial_dim, batch) = x;
    if (order_x >= 1) out.block(axis, batch, 1, batch).setOnes();
    return out;
  }

  int row = 0;
  for (int i = 0; i < spatial_dim; ++i)
    for (int h = 1; h <= harmonics; ++h, row += 2) {
      const double w = 2.0 * std::numbers::pi * h / periods[static_cast<std::size_t>(i)];
      const double period = periods[static_cast<std::size_t>(i)];
      const Eigen::ArrayXd arg = w * x.row(i).transpose().array().unaryExpr([period](double v) { return wrap(v, period); });
      const Eigen::ArrayXd c = arg.cos();
      const Eigen::ArrayXd s = arg.sin();
      out.block(row, 0, 1, batch) = c.transpose().matrix();
      out.block(row + 1, 0, 1, batch) = s.transpose().matrix();
      if (i != axis) continue;
      // d^n/dx^n cos(wx) cycles through -w sin, -w^2 cos, w^3 sin.
      double wn = 1.0;
      for (int n = 1; n <= order_x; ++n) {
        wn *= w;
        const Eigen::Index col = n * batch;
        switch (n % 4) {
          case 1:
            out.block(row, col, 1, batch) = (-wn * s).transpose().matrix();
            out.block(row + 1, col, 1, batch) = (wn * c).transpose().matrix();
            break;
          case 2:
            out.block(row, col, 1, batch) = (-wn * c).transpose().matrix();
            out.block(row + 1, col, 1, batch) = (-wn * s).transpose().matrix();
            break;
          case 3:
            out.block(row, col, 1, batch) = (wn * s).transpose().matrix();
            out.block(row + 1, col, 1, batch) = (-wn * c).transpose().matrix();
            break;
          default:
            break;
        }
      }
    }
  return out;
}

}  // namespace edpinn::network
