#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace edpinn::network {

/// One affine layer: weight is fan_out x fan_in.
struct Layer {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

/// Per-layer weights and biases of a fully connected network. Also used for
/// correction terms, which share the shape of the network they correct.
class ParamSet {
 public:
  ParamSet() = default;
  explicit ParamSet(std::vector<Layer> layers);

  /// sizes = {input, hidden..., output}.
  static ParamSet zeros(std::span<const int> sizes);
  static ParamSet zeros_like(const ParamSet& other);

  std::size_t layer_count() const noexcept { return layers_.size(); }
  const Layer& layer(std::size_t k) const { return layers_.at(k); }
  Layer& layer(std::size_t k) { return layers_.at(k); }
  std::span<const Layer> layers() const noexcept { return layers_; }

  std::vector<int> sizes() const;
  std::size_t parameter_count() const;
  int input_size() const;

  /// Throws ShapeError naming the first inconsistent layer.
  void validate() const;
  void require_same_shape(const ParamSet& other, const char* what) const;
  bool same_shape(const ParamSet& other) const;

  /// Layer by layer: weight column-major, then bias.
  Eigen::VectorXd flatten() const;
  void assign(std::span<const double> flat);

  ParamSet& operator+=(const ParamSet& other);
  friend ParamSet operator+(ParamSet a, const ParamSet& b) { return a += b; }

 private:
  std::vector<Layer> layers_;
};

/// Glorot-uniform weights with bound sqrt(6/(fan_in+fan_out)); zero biases.
ParamSet xavier_init(std::span<const int> sizes, std::uint64_t seed);

/// {input, width x hidden_layers, 1}.
std::vector<int> mlp_sizes(int input_size, int hidden_layers, int width);

}  // namespace edpinn::network
