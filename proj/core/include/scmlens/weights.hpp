#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "scmlens/model.hpp"
#include "scmlens/tensor.hpp"

namespace scmlens {

struct LayerWeights {
  Tensor kernel;  // conv: Kh x Kw x Cin x Cout; dense: in x out
  Tensor bias;    // Cout or out
  friend bool operator==(const LayerWeights&, const LayerWeights&) = default;
};

/// Parameters of every conv2d and dense layer, indexed like ModelSpec::layers.
class WeightStore {
 public:
  WeightStore() = default;

  /// All-zero parameters of the shapes the model implies.
  static WeightStore zeros(const ModelSpec& model);

  const LayerWeights& at(std::size_t layer) const;
  LayerWeights& at(std::size_t layer);
  const LayerWeights& at(const ModelSpec& model, std::string_view id) const { return at(model.layer_index(id)); }
  LayerWeights& at(const ModelSpec& model, std::string_view id) { return at(model.layer_index(id)); }

  bool has(std::size_t layer) const { return layer < present_.size() && present_[layer]; }

  friend bool operator==(const WeightStore&, const WeightStore&) = default;

 private:
  std::vector<LayerWeights> layers_;
  std::vector<bool> present_;
};

/// Kernel and bias shapes of a parameterized layer.
std::pair<Shape, Shape> parameter_shapes(const ModelSpec& model, std::size_t layer);
bool is_parameterized(LayerKind kind);

/// Exact byte length of a weights file for the model, header included.
std::size_t expected_weights_bytes(const ModelSpec& model);

WeightStore load_weights(std::string_view bytes, const ModelSpec& model);
std::string serialize_weights(const WeightStore& weights, const ModelSpec& model);

WeightStore load_weights_file(const std::string& path, const ModelSpec& model);
void save_weights_file(const WeightStore& weights, const ModelSpec& model, const std::string& path);

}  // namespace scmlens
