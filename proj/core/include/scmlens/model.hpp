#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "scmlens/tensor.hpp"

namespace scmlens {

enum class LayerKind { Conv2d, MaxPool, Relu, Flatten, Dense, Add, Softmax };

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view text);

struct ConvParams {
  std::size_t filters = 0;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;
  Padding padding = Padding::Valid;
  friend bool operator==(const ConvParams&, const ConvParams&) = default;
};

struct PoolParams {
  std::size_t window = 2;
  std::size_t stride = 2;
  friend bool operator==(const PoolParams&, const PoolParams&) = default;
};

struct DenseParams {
  std::size_t units = 0;
  friend bool operator==(const DenseParams&, const DenseParams&) = default;
};

using LayerParams = std::variant<std::monostate, ConvParams, PoolParams, DenseParams>;

/// Reserved input id naming the image fed to the network.
inline constexpr std::string_view kImageId = "input";
inline constexpr std::size_t kImage = std::numeric_limits<std::size_t>::max();

struct LayerSpec {
  std::string id;
  LayerKind kind = LayerKind::Relu;
  LayerParams params;
  std::vector<std::string> inputs;

  const ConvParams& conv() const { return std::get<ConvParams>(params); }
  const PoolParams& pool() const { return std::get<PoolParams>(params); }
  const DenseParams& dense() const { return std::get<DenseParams>(params); }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// A conv or dense layer whose per-filter responses become SCM nodes.
struct RecordedLayer {
  std::string id;
  std::size_t layer = 0;
  /// Layer whose output is the recorded response: the layer itself, or a
  /// directly following relu and/or maxpool.
  std::size_t record_point = 0;
  bool is_conv = false;
  std::size_t node_count = 0;
  Shape response_shape;
};

/// Derived graph facts, filled in by validate_model.
struct Topology {
  std::vector<std::vector<std::size_t>> inputs;  // kImage marks the image
  std::vector<std::vector<std::size_t>> consumers;
  std::vector<std::size_t> order;                // execution order
  std::vector<Shape> output_shapes;
  std::size_t terminal = 0;
  std::size_t logits_layer = 0;                  // dense layer producing the class scores
  std::vector<RecordedLayer> recorded;           // in execution order
  std::vector<std::ptrdiff_t> owner;             // per layer: recorded index whose chain it belongs to, or -1
};

struct ModelSpec {
  std::string name;
  Shape input_shape;  // H, W, C
  std::vector<LayerSpec> layers;
  std::vector<std::string> recorded_layers;

  Topology topology;

  std::size_t layer_index(std::string_view id) const;
  const RecordedLayer& recorded(std::string_view id) const;
  /// Index into topology.recorded, or throws ValidationError.
  std::size_t recorded_index(std::string_view id) const;

  /// Declared content only; topology is derived.
  bool same_declaration(const ModelSpec& other) const;
};

/// Checks references, acyclicity and shapes; fills inferred topology.
void validate_model(ModelSpec& model);

ModelSpec parse_model(std::string_view text);
std::string serialize_model(const ModelSpec& model);

ModelSpec load_model_file(const std::string& path);
void save_model_file(const ModelSpec& model, const std::string& path);

}  // namespace scmlens
