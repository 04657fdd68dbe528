#include "scmlens/causal_graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>

#include "scmlens/error.hpp"

namespace scmlens {

CausalDag::CausalDag(std::vector<CausalLayer> layers) : layers_(std::move(layers)) {
  if (layers_.size() < 2) throw ValidationError("causal DAG needs at least two recorded layers");
  std::size_t next = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    auto& layer = layers_[l];
    if (layer.node_count == 0) throw ValidationError("layer '" + layer.id + "' has no nodes");
    if (layer.first_node != next) throw ValidationError("layer '" + layer.id + "' node block is not contiguous");
    next += layer.node_count;
    if (l == 0) {
      if (!layer.parent_layers.empty() || layer.depth != 0) {
        throw ValidationError("root layer '" + layer.id + "' must have depth 0 and no parents");
      }
      continue;
    }
    if (layer.parent_layers.empty()) {
      throw ValidationError("layer '" + layer.id + "' has no recorded predecessor; only the root layer may");
    }
    std::size_t depth = 0;
    for (auto p : layer.parent_layers) {
      if (p >= l) throw ValidationError("layer '" + layer.id + "' has a parent that does not precede it");
      depth = std::max(depth, layers_[p].depth + 1);
    }
    if (depth != layer.depth) throw ValidationError("layer '" + layer.id + "' has inconsistent depth");
    if (std::tie(layers_[l - 1].depth, layers_[l - 1].id) >= std::tie(layer.depth, layer.id)) {
      throw ValidationError("causal layers are not sorted by (depth, id)");
    }
  }
  output_layer_ = layers_.size() - 1;

  nodes_.reserve(next);
  layer_of_.reserve(next);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    for (std::size_t f = 0; f < layers_[l].node_count; ++f) {
      nodes_.push_back({layers_[l].id, f, layers_[l].depth});
      layer_of_.push_back(l);
    }
  }
  parents_.resize(next);
  children_.resize(next);
  for (std::size_t l = 1; l < layers_.size(); ++l) {
    std::vector<std::size_t> parent_layers = layers_[l].parent_layers;
    std::sort(parent_layers.begin(), parent_layers.end());
    std::vector<std::size_t> block;
    for (auto p : parent_layers) {
      for (std::size_t k = 0; k < layers_[p].node_count; ++k) block.push_back(layers_[p].first_node + k);
    }
    for (std::size_t f = 0; f < layers_[l].node_count; ++f) {
      const std::size_t child = layers_[l].first_node + f;
      parents_[child] = block;
      for (auto parent : block) {
        children_[parent].push_back(child);
        edges_.emplace_back(parent, child);
      }
    }
  }
  std::sort(edges_.begin(), edges_.end());
}

std::vector<std::size_t> CausalDag::roots() const {
  std::vector<std::size_t> out(layers_.front().node_count);
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

std::vector<std::size_t> CausalDag::outputs() const {
  const auto& layer = layers_.at(output_layer_);
  std::vector<std::size_t> out(layer.node_count);
  std::iota(out.begin(), out.end(), layer.first_node);
  return out;
}

std::size_t CausalDag::layer_index(std::string_view id) const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].id == id) return l;
  }
  throw ValidationError("layer '" + std::string(id) + "' is not part of the causal DAG");
}

std::size_t CausalDag::node_index(std::string_view layer, std::size_t filter) const {
  const auto& l = layers_.at(layer_index(layer));
  if (filter >= l.node_count) {
    throw ValidationError("node " + std::string(layer) + ":" + std::to_string(filter) + " does not exist (layer has " +
                          std::to_string(l.node_count) + " nodes)");
  }
  return l.first_node + filter;
}

CausalDag build_dag(const ModelSpec& model) {
  const Topology& topo = model.topology;
  const auto& recorded = topo.recorded;
  if (recorded.size() < 2) throw ValidationError("causal DAG needs at least two recorded layers");
  const auto terminal = std::find_if(recorded.begin(), recorded.end(),
                                     [&](const RecordedLayer& r) { return r.layer == topo.logits_layer; });
  if (terminal == recorded.end()) {
    throw ValidationError("no recorded terminal layer: the logits layer '" + model.layers[topo.logits_layer].id +
                          "' must be recorded");
  }

  // Nearest recorded predecessors, walking back through unrecorded layers.
  std::vector<std::set<std::size_t>> preds(recorded.size());
  for (std::size_t r = 0; r < recorded.size(); ++r) {
    std::vector<std::size_t> stack(topo.inputs[recorded[r].layer].begin(), topo.inputs[recorded[r].layer].end());
    std::set<std::size_t> visited;
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      if (x == kImage || !visited.insert(x).second) continue;
      if (topo.owner[x] >= 0 && static_cast<std::size_t>(topo.owner[x]) != r) {
        preds[r].insert(static_cast<std::size_t>(topo.owner[x]));
        continue;
      }
      stack.insert(stack.end(), topo.inputs[x].begin(), topo.inputs[x].end());
    }
  }

  std::vector<std::size_t> depth(recorded.size(), 0);
  std::size_t roots = 0;
  for (std::size_t r = 0; r < recorded.size(); ++r) {
    if (preds[r].empty()) {
      if (++roots > 1) {
        throw ValidationError("recorded layer '" + recorded[r].id +
                              "' is unreachable from the root layer: it has no recorded predecessor");
      }
      continue;
    }
    for (auto p : preds[r]) depth[r] = std::max(depth[r], depth[p] + 1);
  }

  std::vector<std::size_t> order(recorded.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(depth[a], recorded[a].id) < std::tie(depth[b], recorded[b].id);
  });
  std::vector<std::size_t> slot(recorded.size());
  for (std::size_t k = 0; k < order.size(); ++k) slot[order[k]] = k;

  std::vector<CausalLayer> layers;
  std::size_t first = 0;
  for (auto r : order) {
    CausalLayer layer;
    layer.id = recorded[r].id;
    layer.is_conv = recorded[r].is_conv;
    layer.node_count = recorded[r].node_count;
    layer.first_node = first;
    layer.depth = depth[r];
    for (auto p : preds[r]) layer.parent_layers.push_back(slot[p]);
    std::sort(layer.parent_layers.begin(), layer.parent_layers.end());
    first += layer.node_count;
    layers.push_back(std::move(layer));
  }
  if (layers.back().id != terminal->id) {
    throw ValidationError("logits layer '" + terminal->id + "' is not the deepest recorded layer");
  }
  return CausalDag(std::move(layers));
}

std::vector<std::size_t> topological_order(const CausalDag& dag) {
  const auto& nodes = dag.nodes();
  std::vector<std::size_t> order(nodes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(nodes[a].depth, nodes[a].layer, nodes[a].filter) <
           std::tie(nodes[b].depth, nodes[b].layer, nodes[b].filter);
  });
  std::vector<std::size_t> position(nodes.size());
  for (std::size_t k = 0; k < order.size(); ++k) position[order[k]] = k;
  for (const auto& [parent, child] : dag.edges()) {
    if (position[parent] >= position[child]) throw ValidationError("causal graph contains a cycle");
  }
  return order;
}

}  // namespace scmlens
