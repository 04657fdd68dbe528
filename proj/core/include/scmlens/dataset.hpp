#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "scmlens/tensor.hpp"

namespace scmlens {

struct LabeledDataset {
  Shape image_shape;  // H, W, C
  std::size_t num_classes = 0;
  std::vector<Tensor> images;
  std::vector<std::uint16_t> labels;

  std::size_t size() const noexcept { return images.size(); }
  bool empty() const noexcept { return images.empty(); }

  /// Throws ValidationError on shape or label violations.
  void validate() const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

LabeledDataset load_dataset(std::string_view bytes);
std::string serialize_dataset(const LabeledDataset& dataset);

LabeledDataset load_dataset_file(const std::string& path);
void save_dataset_file(const LabeledDataset& dataset, const std::string& path);

}  // namespace scmlens
