#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scmlens/model.hpp"

namespace scmlens {

struct CausalNode {
  std::string layer;
  std::size_t filter = 0;  // conv filter index or dense unit index
  std::size_t depth = 0;
  friend bool operator==(const CausalNode&, const CausalNode&) = default;
};

/// One recorded layer's block of consecutive nodes.
struct CausalLayer {
  std::string id;
  bool is_conv = false;
  std::size_t node_count = 0;
  std::size_t first_node = 0;
  std::size_t depth = 0;
  std::vector<std::size_t> parent_layers;  // indices into CausalDag::layers
  friend bool operator==(const CausalLayer&, const CausalLayer&) = default;
};

/// Filter-level DAG. Nodes are stored in topological order, sorted by
/// (depth, layer id, filter index); a node's parents are every node of the
/// nearest recorded predecessor layers.
class CausalDag {
 public:
  CausalDag() = default;
  /// Layers must be sorted by (depth, id) with parents earlier than children;
  /// nodes, edges and adjacency are derived.
  explicit CausalDag(std::vector<CausalLayer> layers);

  const std::vector<CausalLayer>& layers() const noexcept { return layers_; }
  const std::vector<CausalNode>& nodes() const noexcept { return nodes_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const noexcept { return edges_; }
  const std::vector<std::size_t>& parents(std::size_t node) const { return parents_.at(node); }
  const std::vector<std::size_t>& children(std::size_t node) const { return children_.at(node); }

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t root_layer() const noexcept { return 0; }
  std::size_t output_layer() const noexcept { return output_layer_; }
  std::vector<std::size_t> roots() const;
  std::vector<std::size_t> outputs() const;
  bool is_root(std::size_t node) const { return node < layers_.front().node_count; }

  std::size_t layer_index(std::string_view id) const;
  std::size_t layer_of(std::size_t node) const { return layer_of_.at(node); }
  std::size_t node_index(std::string_view layer, std::size_t filter) const;

  friend bool operator==(const CausalDag& a, const CausalDag& b) {
    return a.layers_ == b.layers_ && a.edges_ == b.edges_ && a.output_layer_ == b.output_layer_;
  }

 private:
  std::vector<CausalLayer> layers_;
  std::vector<CausalNode> nodes_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> layer_of_;
  std::size_t output_layer_ = 0;
};

/// Builds the filter-level DAG from the architecture. The first recorded
/// layer supplies the roots; the logits layer supplies the outputs.
CausalDag build_dag(const ModelSpec& model);

/// Node indices with every parent before its children, ordered by
/// (depth, layer id, filter index).
std::vector<std::size_t> topological_order(const CausalDag& dag);

}  // namespace scmlens
