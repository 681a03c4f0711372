#include "edpinn/network/params.hpp"

#include <cmath>
#include <string>

#include "edpinn/errors.hpp"
#include "edpinn/rng.hpp"

namespace edpinn::network {

ParamSet::ParamSet(std::vector<Layer> layers) : layers_(std::move(layers)) { validate(); }

ParamSet ParamSet::zeros(std::span<const int> sizes) {
  if (sizes.size() < 2) throw ShapeError("a network needs at least input and output sizes");
  std::vector<Layer> layers;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    if (sizes[k] < 1 || sizes[k + 1] < 1) throw ShapeError("layer sizes must be >= 1");
    layers.push_back({Eigen::MatrixXd::Zero(sizes[k + 1], sizes[k]), Eigen::VectorXd::Zero(sizes[k + 1])});
  }
  return ParamSet(std::move(layers));
}

ParamSet ParamSet::zeros_like(const ParamSet& other) {
  const auto s = other.sizes();
  return zeros(s);
}

std::vector<int> ParamSet::sizes() const {
  std::vector<int> s;
  if (layers_.empty()) return s;
  s.push_back(static_cast<int>(layers_.front().weight.cols()));
  for (const auto& l : layers_) s.push_back(static_cast<int>(l.weight.rows()));
  return s;
}

std::size_t ParamSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

int ParamSet::input_size() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols()); }

void ParamSet::validate() const {
  if (layers_.empty()) throw ShapeError("network has no layers");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& l = layers_[k];
    const std::string name = "layer " + std::to_string(k + 1);
    if (l.bias.size() != l.weight.rows()) throw ShapeError(name + ": bias length does not match weight rows");
    if (k > 0 && l.weight.cols() != layers_[k - 1].weight.rows())
      throw ShapeError(name + ": fan_in does not match previous layer fan_out");
    if (!l.weight.allFinite() || !l.bias.allFinite()) throw ShapeError(name + ": non-finite parameter");
  }
  if (layers_.back().weight.rows() != 1) throw ShapeError("output layer must have one unit");
}

bool ParamSet::same_shape(const ParamSet& other) const { return sizes() == other.sizes(); }

void ParamSet::require_same_shape(const ParamSet& other, const char* what) const {
  if (other.layers_.size() != layers_.size())
    throw ShapeError(std::string(what) + ": layer count " + std::to_string(other.layers_.size()) + " vs " +
                     std::to_string(layers_.size()));
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& a = layers_[k];
    const auto& b = other.layers_[k];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() || a.bias.size() != b.bias.size())
      throw ShapeError(std::string(what) + ": shape mismatch at layer " + std::to_string(k + 1));
  }
}

Eigen::VectorXd ParamSet::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index pos = 0;
  for (const auto& l : layers_) {
    flat.segment(pos, l.weight.size()) = l.weight.reshaped();
    pos += l.weight.size();
    flat.segment(pos, l.bias.size()) = l.bias;
    pos += l.bias.size();
  }
  return flat;
}

void ParamSet::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count())
    throw ShapeError("flat parameter vector has " + std::to_string(flat.size()) + " entries, expected " +
                     std::to_string(parameter_count()));
  std::size_t pos = 0;
  for (auto& l : layers_) {
    for (Eigen::Index j = 0; j < l.weight.cols(); ++j)
      for (Eigen::Index i = 0; i < l.weight.rows(); ++i) l.weight(i, j) = flat[pos++];
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = flat[pos++];
  }
}

ParamSet& ParamSet::operator+=(const ParamSet& other) {
  require_same_shape(other, "parameter sum");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    layers_[k].weight += other.layers_[k].weight;
    layers_[k].bias += other.layers_[k].bias;
  }
  return *this;
}

ParamSet xavier_init(std::span<const int> sizes, std::uint64_t seed) {
  ParamSet p = ParamSet::zeros(sizes);
  CounterRng rng(seed, /*stream=*/0x78617669ULL);
  for (std::size_t k = 0; k < p.layer_count(); ++k) {
    auto& w = p.layer(k).weight;
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = bound * (2.0 * rng.next_uniform() - 1.0);
  }
  return p;
}

std::vector<int> mlp_sizes(int input_size, int hidden_layers, int width) {
  std::vector<int> s{input_size};
  for (int i = 0; i < hidden_layers; ++i) s.push_back(width);
  s.push_back(1);
  return s;
}

}  // namespace edpinn::network
