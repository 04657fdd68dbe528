#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scmlens/dataset.hpp"
#include "scmlens/model.hpp"
#include "scmlens/tensor.hpp"
#include "scmlens/weights.hpp"

namespace scmlens {

/// Architecture plus bound parameters. Immutable once constructed.
class Network {
 public:
  Network(ModelSpec spec, WeightStore weights);

  const ModelSpec& spec() const noexcept { return spec_; }
  const WeightStore& weights() const noexcept { return weights_; }

 private:
  ModelSpec spec_;
  WeightStore weights_;
};

Network load_network(const std::string& model_path, const std::string& weights_path);

/// Filters whose feature maps are zeroed at their layer's recording point.
class AblationMask {
 public:
  AblationMask() = default;

  void add(std::string layer, std::size_t filter) { entries_.emplace(std::move(layer), filter); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::set<std::pair<std::string, std::size_t>>& entries() const noexcept { return entries_; }

  /// Every entry must name a recorded conv layer and an existing filter.
  void validate(const ModelSpec& model) const;

  friend bool operator==(const AblationMask&, const AblationMask&) = default;

 private:
  std::set<std::pair<std::string, std::size_t>> entries_;
};

struct ForwardTrace {
  /// Post-mask response per recorded layer, aligned with Topology::recorded.
  /// Conv responses are H x W x filters; dense responses are vectors.
  std::vector<Tensor> responses;
  std::vector<float> logits;
  std::size_t predicted_class = 0;
  bool interventional = false;

  const Tensor& response(const ModelSpec& model, std::string_view layer) const {
    return responses.at(model.recorded_index(layer));
  }
  friend bool operator==(const ForwardTrace&, const ForwardTrace&) = default;
};

ForwardTrace forward(const Network& net, const Tensor& image, const AblationMask& mask = {});

/// Predicted class per sample.
std::vector<std::size_t> predict_all(const Network& net, const LabeledDataset& dataset,
                                     const AblationMask& mask = {});

/// Fraction of samples whose prediction equals the label.
double model_accuracy(const Network& net, const LabeledDataset& dataset, const AblationMask& mask = {});

}  // namespace scmlens
