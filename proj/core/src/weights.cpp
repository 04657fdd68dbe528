#include "scmlens/weights.hpp"

#include "binary_io.hpp"
#include "scmlens/error.hpp"

namespace scmlens {

namespace {
constexpr std::string_view kMagic = "SCMW";
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 8;
}  // namespace

bool is_parameterized(LayerKind kind) { return kind == LayerKind::Conv2d || kind == LayerKind::Dense; }

std::pair<Shape, Shape> parameter_shapes(const ModelSpec& model, std::size_t layer) {
  const auto& spec = model.layers.at(layer);
  const auto src = model.topology.inputs.at(layer).front();
  const Shape& in = src == kImage ? model.input_shape : model.topology.output_shapes.at(src);
  if (spec.kind == LayerKind::Conv2d) {
    const auto& p = spec.conv();
    return {{p.kernel_h, p.kernel_w, in.at(2), p.filters}, {p.filters}};
  }
  if (spec.kind == LayerKind::Dense) return {{in.at(0), spec.dense().units}, {spec.dense().units}};
  throw ValidationError("layer '" + spec.id + "' has no parameters");
}

WeightStore WeightStore::zeros(const ModelSpec& model) {
  WeightStore store;
  store.layers_.resize(model.layers.size());
  store.present_.assign(model.layers.size(), false);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (!is_parameterized(model.layers[i].kind)) continue;
    auto [k, b] = parameter_shapes(model, i);
    store.layers_[i] = {Tensor(k), Tensor(b)};
    store.present_[i] = true;
  }
  return store;
}

const LayerWeights& WeightStore::at(std::size_t layer) const {
  if (!has(layer)) throw ValidationError("no weights bound to layer index " + std::to_string(layer));
  return layers_[layer];
}

LayerWeights& WeightStore::at(std::size_t layer) {
  if (!has(layer)) throw ValidationError("no weights bound to layer index " + std::to_string(layer));
  return layers_[layer];
}

std::size_t expected_weights_bytes(const ModelSpec& model) {
  std::size_t total = kHeaderBytes;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (!is_parameterized(model.layers[i].kind)) continue;
    auto [k, b] = parameter_shapes(model, i);
    total += 4 * (element_count(k) + element_count(b));
  }
  return total;
}

WeightStore load_weights(std::string_view bytes, const ModelSpec& model) {
  detail::ByteReader in(bytes, "weights");
  in.expect_magic(kMagic);
  in.expect_version(kVersion);
  const std::size_t expected = expected_weights_bytes(model);
  if (bytes.size() != expected) {
    const std::string what = bytes.size() < expected ? "truncated" : "surplus bytes";
    throw FormatError("weights: " + what + ": expected " + std::to_string(expected) + " bytes for model '" +
                      model.name + "', got " + std::to_string(bytes.size()));
  }
  WeightStore store = WeightStore::zeros(model);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (!store.has(i)) continue;
    auto& w = store.at(i);
    for (float& v : w.kernel.data()) v = in.f32();
    for (float& v : w.bias.data()) v = in.f32();
  }
  in.expect_end();
  return store;
}

std::string serialize_weights(const WeightStore& weights, const ModelSpec& model) {
  detail::ByteWriter out;
  out.put_bytes(kMagic);
  out.put_u32(kVersion);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (!is_parameterized(model.layers[i].kind)) continue;
    const auto& w = weights.at(i);
    auto [k, b] = parameter_shapes(model, i);
    if (w.kernel.shape() != k || w.bias.shape() != b) {
      throw ValidationError("weights of layer '" + model.layers[i].id + "' have shapes " +
                            to_string(w.kernel.shape()) + "/" + to_string(w.bias.shape()) + ", model implies " +
                            to_string(k) + "/" + to_string(b));
    }
    for (float v : w.kernel.data()) out.put_f32(v);
    for (float v : w.bias.data()) out.put_f32(v);
  }
  return out.take();
}

WeightStore load_weights_file(const std::string& path, const ModelSpec& model) {
  const std::string bytes = detail::read_file(path);
  try {
    return load_weights(bytes, model);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void save_weights_file(const WeightStore& weights, const ModelSpec& model, const std::string& path) {
  detail::write_file(path, serialize_weights(weights, model));
}

}  // namespace scmlens
