#include "scmlens/model.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>

#include <json.hpp>

#include "binary_io.hpp"
#include "scmlens/error.hpp"

namespace scmlens {

using nlohmann::json;

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Relu: return "relu";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    case LayerKind::Add: return "add";
    case LayerKind::Softmax: return "softmax";
  }
  return "?";
}

LayerKind parse_layer_kind(std::string_view text) {
  static const std::map<std::string_view, LayerKind> kinds = {
      {"conv2d", LayerKind::Conv2d}, {"maxpool", LayerKind::MaxPool}, {"relu", LayerKind::Relu},
      {"flatten", LayerKind::Flatten}, {"dense", LayerKind::Dense},     {"add", LayerKind::Add},
      {"softmax", LayerKind::Softmax}};
  auto it = kinds.find(text);
  if (it == kinds.end()) throw FormatError("unknown layer kind '" + std::string(text) + "'");
  return it->second;
}

std::size_t ModelSpec::layer_index(std::string_view id) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].id == id) return i;
  }
  throw ValidationError("unknown layer '" + std::string(id) + "'");
}

std::size_t ModelSpec::recorded_index(std::string_view id) const {
  for (std::size_t i = 0; i < topology.recorded.size(); ++i) {
    if (topology.recorded[i].id == id) return i;
  }
  throw ValidationError("layer '" + std::string(id) + "' is not a recorded layer");
}

const RecordedLayer& ModelSpec::recorded(std::string_view id) const { return topology.recorded[recorded_index(id)]; }

bool ModelSpec::same_declaration(const ModelSpec& other) const {
  return name == other.name && input_shape == other.input_shape && layers == other.layers &&
         recorded_layers == other.recorded_layers;
}

namespace {

std::string shape_error(const LayerSpec& layer, const std::string& what) {
  return "shape inference failed at layer '" + layer.id + "': " + what;
}

Shape infer_shape(const LayerSpec& layer, const std::vector<const Shape*>& in) {
  auto fail = [&](const std::string& what) -> Shape { throw ValidationError(shape_error(layer, what)); };
  const Shape& first = *in.front();
  switch (layer.kind) {
    case LayerKind::Conv2d: {
      const auto& p = layer.conv();
      if (first.size() != 3) return fail("conv2d expects H x W x C input, got " + to_string(first));
      if (p.filters == 0 || p.kernel_h == 0 || p.kernel_w == 0 || p.stride == 0) {
        return fail("conv2d filters, kernel and stride must be positive");
      }
      const std::size_t oh = conv_output_extent(first[0], p.kernel_h, p.stride, p.padding);
      const std::size_t ow = conv_output_extent(first[1], p.kernel_w, p.stride, p.padding);
      if (oh == 0 || ow == 0) {
        return fail("kernel " + std::to_string(p.kernel_h) + "x" + std::to_string(p.kernel_w) +
                    " does not fit input " + to_string(first));
      }
      return {oh, ow, p.filters};
    }
    case LayerKind::MaxPool: {
      const auto& p = layer.pool();
      if (first.size() != 3) return fail("maxpool expects H x W x C input, got " + to_string(first));
      if (p.window == 0 || p.stride == 0) return fail("maxpool window and stride must be positive");
      if (p.window > first[0] || p.window > first[1]) {
        return fail("pool window " + std::to_string(p.window) + " exceeds input " + to_string(first));
      }
      return {pool_output_extent(first[0], p.window, p.stride), pool_output_extent(first[1], p.window, p.stride),
              first[2]};
    }
    case LayerKind::Relu:
      return first;
    case LayerKind::Flatten:
      return {element_count(first)};
    case LayerKind::Dense: {
      if (first.size() != 1) return fail("dense expects a flattened input, got " + to_string(first));
      if (layer.dense().units == 0) return fail("dense units must be positive");
      return {layer.dense().units};
    }
    case LayerKind::Add:
      if (*in[0] != *in[1]) {
        return fail("add inputs have different shapes " + to_string(*in[0]) + " and " + to_string(*in[1]));
      }
      return first;
    case LayerKind::Softmax:
      if (first.size() != 1) return fail("softmax expects a vector input, got " + to_string(first));
      return first;
  }
  return fail("unhandled layer kind");
}

bool params_match_kind(const LayerSpec& layer) {
  switch (layer.kind) {
    case LayerKind::Conv2d: return std::holds_alternative<ConvParams>(layer.params);
    case LayerKind::MaxPool: return std::holds_alternative<PoolParams>(layer.params);
    case LayerKind::Dense: return std::holds_alternative<DenseParams>(layer.params);
    default: return std::holds_alternative<std::monostate>(layer.params);
  }
}

}  // namespace

void validate_model(ModelSpec& model) {
  Topology topo;
  const std::size_t n = model.layers.size();
  if (model.input_shape.size() != 3 || element_count(model.input_shape) == 0) {
    throw ValidationError("input_shape must be [H, W, C] with positive sizes, got " + to_string(model.input_shape));
  }
  if (n == 0) throw ValidationError("model has no layers");

  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& layer = model.layers[i];
    if (layer.id.empty() || layer.id == kImageId) {
      throw ValidationError("layer " + std::to_string(i) + " has an empty or reserved id '" + layer.id + "'");
    }
    if (!index.emplace(layer.id, i).second) throw ValidationError("duplicate layer id '" + layer.id + "'");
    if (!params_match_kind(layer)) {
      throw ValidationError("layer '" + layer.id + "' carries parameters that do not match kind " +
                            std::string(to_string(layer.kind)));
    }
  }

  topo.inputs.resize(n);
  topo.consumers.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& layer = model.layers[i];
    const std::size_t arity = layer.kind == LayerKind::Add ? 2 : 1;
    if (layer.inputs.size() != arity) {
      throw ValidationError("layer '" + layer.id + "' of kind " + std::string(to_string(layer.kind)) + " needs " +
                            std::to_string(arity) + " input(s), has " + std::to_string(layer.inputs.size()));
    }
    for (const auto& ref : layer.inputs) {
      if (ref == kImageId) {
        topo.inputs[i].push_back(kImage);
        continue;
      }
      auto it = index.find(ref);
      if (it == index.end()) {
        throw ValidationError("dangling input reference: layer '" + layer.id + "' consumes unknown layer '" + ref +
                              "'");
      }
      topo.inputs[i].push_back(it->second);
      topo.consumers[it->second].push_back(i);
    }
  }

  // Kahn's algorithm; ties resolved by declaration index.
  std::vector<std::size_t> pending(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto src : topo.inputs[i]) pending[i] += src != kImage ? 1 : 0;
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (pending[i] == 0) ready.push(i);
  }
  while (!ready.empty()) {
    const std::size_t i = ready.top();
    ready.pop();
    topo.order.push_back(i);
    for (auto c : topo.consumers[i]) {
      // a layer may consume the same producer twice (add(x, x))
      if (--pending[c] == 0) ready.push(c);
    }
  }
  if (topo.order.size() != n) {
    std::string members;
    for (std::size_t i = 0; i < n; ++i) {
      if (pending[i] > 0) members += (members.empty() ? "'" : ", '") + model.layers[i].id + "'";
    }
    throw ValidationError("cycle detected in layer graph among " + members);
  }

  topo.output_shapes.assign(n, {});
  for (auto i : topo.order) {
    std::vector<const Shape*> in;
    for (auto src : topo.inputs[i]) in.push_back(src == kImage ? &model.input_shape : &topo.output_shapes[src]);
    topo.output_shapes[i] = infer_shape(model.layers[i], in);
  }

  std::vector<std::size_t> terminals;
  for (std::size_t i = 0; i < n; ++i) {
    if (topo.consumers[i].empty()) terminals.push_back(i);
  }
  if (terminals.size() != 1) {
    throw ValidationError("model must have exactly one terminal layer, found " + std::to_string(terminals.size()));
  }
  topo.terminal = terminals.front();
  {
    std::size_t t = topo.terminal;
    if (model.layers[t].kind == LayerKind::Softmax && topo.inputs[t].front() != kImage) t = topo.inputs[t].front();
    if (model.layers[t].kind != LayerKind::Dense) {
      throw ValidationError("terminal layer '" + model.layers[topo.terminal].id +
                            "' must be a dense layer or a softmax over one");
    }
    topo.logits_layer = t;
  }

  std::set<std::string, std::less<>> seen;
  std::vector<std::size_t> recorded_layers;
  for (const auto& id : model.recorded_layers) {
    auto it = index.find(id);
    if (it == index.end()) throw ValidationError("recorded layer '" + id + "' does not exist");
    const auto kind = model.layers[it->second].kind;
    if (kind != LayerKind::Conv2d && kind != LayerKind::Dense) {
      throw ValidationError("recorded layer '" + id + "' must be conv2d or dense, is " + std::string(to_string(kind)));
    }
    if (!seen.insert(id).second) throw ValidationError("recorded layer '" + id + "' listed twice");
    recorded_layers.push_back(it->second);
  }
  std::vector<std::size_t> position(n);
  for (std::size_t k = 0; k < n; ++k) position[topo.order[k]] = k;
  std::sort(recorded_layers.begin(), recorded_layers.end(),
            [&](std::size_t a, std::size_t b) { return position[a] < position[b]; });

  topo.owner.assign(n, -1);
  for (auto layer : recorded_layers) {
    RecordedLayer rec;
    rec.id = model.layers[layer].id;
    rec.layer = layer;
    rec.is_conv = model.layers[layer].kind == LayerKind::Conv2d;
    rec.node_count = rec.is_conv ? model.layers[layer].conv().filters : model.layers[layer].dense().units;
    const auto slot = static_cast<std::ptrdiff_t>(topo.recorded.size());
    std::size_t point = layer;
    topo.owner[point] = slot;
    auto absorb = [&](LayerKind kind) {
      if (topo.consumers[point].size() == 1 && model.layers[topo.consumers[point].front()].kind == kind) {
        point = topo.consumers[point].front();
        topo.owner[point] = slot;
      }
    };
    absorb(LayerKind::Relu);
    if (rec.is_conv) absorb(LayerKind::MaxPool);
    rec.record_point = point;
    rec.response_shape = topo.output_shapes[point];
    topo.recorded.push_back(std::move(rec));
  }

  model.topology = std::move(topo);
}

namespace {

std::size_t get_size(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw FormatError(where + ": missing field '" + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw FormatError(where + ": field '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

LayerSpec parse_layer(const json& j, std::size_t position) {
  const std::string where = "layers[" + std::to_string(position) + "]";
  if (!j.is_object()) throw FormatError(where + ": expected an object");
  LayerSpec layer;
  if (!j.contains("id") || !j["id"].is_string()) throw FormatError(where + ": missing string field 'id'");
  layer.id = j["id"].get<std::string>();
  if (!j.contains("kind") || !j["kind"].is_string()) throw FormatError(where + ": missing string field 'kind'");
  try {
    layer.kind = parse_layer_kind(j["kind"].get<std::string>());
  } catch (const FormatError& e) {
    throw FormatError(where + " ('" + layer.id + "'): " + e.what());
  }
  const json params = j.contains("params") ? j["params"] : json::object();
  if (!params.is_object()) throw FormatError(where + ": 'params' must be an object");
  const std::string pwhere = where + ".params";
  switch (layer.kind) {
    case LayerKind::Conv2d: {
      ConvParams p;
      p.filters = get_size(params, "filters", pwhere);
      if (!params.contains("kernel")) throw FormatError(pwhere + ": missing field 'kernel'");
      const auto& k = params["kernel"];
      if (k.is_number_integer()) {
        p.kernel_h = p.kernel_w = k.get<std::size_t>();
      } else if (k.is_array() && k.size() == 2 && k[0].is_number_integer() && k[1].is_number_integer()) {
        p.kernel_h = k[0].get<std::size_t>();
        p.kernel_w = k[1].get<std::size_t>();
      } else {
        throw FormatError(pwhere + ": 'kernel' must be an integer or [kh, kw]");
      }
      p.stride = params.contains("stride") ? get_size(params, "stride", pwhere) : 1;
      const std::string pad = params.value("padding", std::string("valid"));
      if (pad == "valid") {
        p.padding = Padding::Valid;
      } else if (pad == "same") {
        p.padding = Padding::Same;
      } else {
        throw FormatError(pwhere + ": padding must be 'valid' or 'same', got '" + pad + "'");
      }
      layer.params = p;
      break;
    }
    case LayerKind::MaxPool: {
      PoolParams p;
      p.window = get_size(params, "window", pwhere);
      p.stride = params.contains("stride") ? get_size(params, "stride", pwhere) : p.window;
      layer.params = p;
      break;
    }
    case LayerKind::Dense:
      layer.params = DenseParams{get_size(params, "units", pwhere)};
      break;
    default:
      break;
  }
  if (!j.contains("inputs") || !j["inputs"].is_array()) throw FormatError(where + ": missing array field 'inputs'");
  for (const auto& ref : j["inputs"]) {
    if (!ref.is_string()) throw FormatError(where + ": input references must be strings");
    layer.inputs.push_back(ref.get<std::string>());
  }
  return layer;
}

}  // namespace

ModelSpec parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("model file is not valid structured text: ") + e.what());
  }
  if (!doc.is_object()) throw FormatError("model file must hold an object at top level");
  ModelSpec model;
  model.name = doc.value("name", std::string());
  if (!doc.contains("input_shape") || !doc["input_shape"].is_array()) {
    throw FormatError("model file: missing array field 'input_shape'");
  }
  for (const auto& d : doc["input_shape"]) {
    if (!d.is_number_integer() || d.get<long long>() <= 0) {
      throw FormatError("model file: input_shape entries must be positive integers");
    }
    model.input_shape.push_back(d.get<std::size_t>());
  }
  if (!doc.contains("layers") || !doc["layers"].is_array()) throw FormatError("model file: missing array 'layers'");
  std::size_t position = 0;
  for (const auto& j : doc["layers"]) model.layers.push_back(parse_layer(j, position++));
  if (doc.contains("recorded_layers")) {
    if (!doc["recorded_layers"].is_array()) throw FormatError("model file: 'recorded_layers' must be an array");
    for (const auto& id : doc["recorded_layers"]) {
      if (!id.is_string()) throw FormatError("model file: recorded layer ids must be strings");
      model.recorded_layers.push_back(id.get<std::string>());
    }
  }
  validate_model(model);
  return model;
}

std::string serialize_model(const ModelSpec& model) {
  json doc;
  doc["name"] = model.name;
  doc["input_shape"] = model.input_shape;
  json layers = json::array();
  for (const auto& layer : model.layers) {
    json j;
    j["id"] = layer.id;
    j["kind"] = std::string(to_string(layer.kind));
    json params = json::object();
    if (const auto* c = std::get_if<ConvParams>(&layer.params)) {
      params["filters"] = c->filters;
      params["kernel"] = {c->kernel_h, c->kernel_w};
      params["stride"] = c->stride;
      params["padding"] = c->padding == Padding::Same ? "same" : "valid";
    } else if (const auto* p = std::get_if<PoolParams>(&layer.params)) {
      params["window"] = p->window;
      params["stride"] = p->stride;
    } else if (const auto* d = std::get_if<DenseParams>(&layer.params)) {
      params["units"] = d->units;
    }
    j["params"] = params;
    j["inputs"] = layer.inputs;
    layers.push_back(std::move(j));
  }
  doc["layers"] = std::move(layers);
  doc["recorded_layers"] = model.recorded_layers;
  return doc.dump(2) + "\n";
}

ModelSpec load_model_file(const std::string& path) {
  const std::string text = detail::read_file(path);
  try {
    return parse_model(text);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void save_model_file(const ModelSpec& model, const std::string& path) {
  detail::write_file(path, serialize_model(model));
}

}  // namespace scmlens
