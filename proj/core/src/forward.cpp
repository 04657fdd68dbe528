#include "scmlens/forward.hpp"

#include <algorithm>

#include "scmlens/error.hpp"
#include "scmlens/parallel.hpp"

namespace scmlens {

Network::Network(ModelSpec spec, WeightStore weights) : spec_(std::move(spec)), weights_(std::move(weights)) {
  if (spec_.topology.order.size() != spec_.layers.size()) validate_model(spec_);
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    if (!is_parameterized(spec_.layers[i].kind)) continue;
    const auto [k, b] = parameter_shapes(spec_, i);
    const auto& w = weights_.at(i);
    if (w.kernel.shape() != k || w.bias.shape() != b) {
      throw ValidationError("weights for layer '" + spec_.layers[i].id + "' have shapes " +
                            to_string(w.kernel.shape()) + "/" + to_string(w.bias.shape()) + ", expected " +
                            to_string(k) + "/" + to_string(b));
    }
  }
}

Network load_network(const std::string& model_path, const std::string& weights_path) {
  ModelSpec spec = load_model_file(model_path);
  WeightStore weights = load_weights_file(weights_path, spec);
  return Network(std::move(spec), std::move(weights));
}

void AblationMask::validate(const ModelSpec& model) const {
  for (const auto& [layer, filter] : entries_) {
    std::size_t slot = 0;
    try {
      slot = model.recorded_index(layer);
    } catch (const ValidationError&) {
      throw ValidationError("ablation mask references unknown or unrecorded layer '" + layer + "'");
    }
    const auto& rec = model.topology.recorded[slot];
    if (!rec.is_conv) throw ValidationError("ablation mask references non-conv layer '" + layer + "'");
    if (filter >= rec.node_count) {
      throw ValidationError("ablation mask references filter " + std::to_string(filter) + " of layer '" + layer +
                            "', which has " + std::to_string(rec.node_count) + " filters");
    }
  }
}

ForwardTrace forward(const Network& net, const Tensor& image, const AblationMask& mask) {
  const ModelSpec& spec = net.spec();
  const Topology& topo = spec.topology;
  if (image.shape() != spec.input_shape) {
    throw ValidationError("image shape " + to_string(image.shape()) + " does not match model input " +
                          to_string(spec.input_shape));
  }
  mask.validate(spec);

  std::vector<std::vector<std::size_t>> zeroed(topo.recorded.size());
  for (const auto& [layer, filter] : mask.entries()) zeroed[spec.recorded_index(layer)].push_back(filter);

  const std::size_t n = spec.layers.size();
  std::vector<Tensor> outputs(n);
  std::vector<std::size_t> uses(n);
  for (std::size_t i = 0; i < n; ++i) uses[i] = topo.consumers[i].size();

  ForwardTrace trace;
  trace.responses.resize(topo.recorded.size());
  trace.interventional = !mask.empty();

  for (const std::size_t i : topo.order) {
    const LayerSpec& layer = spec.layers[i];
    auto input = [&](std::size_t k) -> const Tensor& {
      const std::size_t src = topo.inputs[i][k];
      return src == kImage ? image : outputs[src];
    };
    Tensor out;
    switch (layer.kind) {
      case LayerKind::Conv2d: {
        const auto& w = net.weights().at(i);
        out = conv2d(input(0), w.kernel, w.bias.data(), layer.conv().stride, layer.conv().padding);
        break;
      }
      case LayerKind::MaxPool:
        out = maxpool2d(input(0), layer.pool().window, layer.pool().stride);
        break;
      case LayerKind::Relu:
        out = relu(input(0));
        break;
      case LayerKind::Flatten:
        out = input(0).reshaped({input(0).size()});
        break;
      case LayerKind::Dense: {
        const auto& w = net.weights().at(i);
        out = dense(input(0).data(), w.kernel, w.bias.data());
        break;
      }
      case LayerKind::Add:
        out = add(input(0), input(1));
        break;
      case LayerKind::Softmax: {
        auto probs = softmax(input(0).data());
        const std::size_t len = probs.size();
        out = Tensor({len}, std::move(probs));
        break;
      }
    }

    const std::ptrdiff_t owner = topo.owner[i];
    if (owner >= 0 && topo.recorded[owner].record_point == i) {
      const std::size_t channels = out.shape().back();
      for (const std::size_t f : zeroed[owner]) {
        auto data = out.data();
        for (std::size_t k = f; k < data.size(); k += channels) data[k] = 0.0f;
      }
      trace.responses[owner] = out;
    }
    if (i == topo.logits_layer) trace.logits = out.values();

    for (const std::size_t src : topo.inputs[i]) {
      if (src != kImage && --uses[src] == 0) outputs[src] = Tensor();
    }
    if (uses[i] > 0) outputs[i] = std::move(out);
  }

  trace.predicted_class = argmax(trace.logits);
  return trace;
}

std::vector<std::size_t> predict_all(const Network& net, const LabeledDataset& dataset, const AblationMask& mask) {
  mask.validate(net.spec());
  std::vector<std::size_t> predictions(dataset.size());
  parallel_for(dataset.size(),
               [&](std::size_t i) { predictions[i] = forward(net, dataset.images[i], mask).predicted_class; });
  return predictions;
}

double model_accuracy(const Network& net, const LabeledDataset& dataset, const AblationMask& mask) {
  if (dataset.empty()) throw ValidationError("accuracy of an empty dataset is undefined");
  const auto predictions = predict_all(net, dataset, mask);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) hits += predictions[i] == dataset.labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(dataset.size());
}

}  // namespace scmlens
