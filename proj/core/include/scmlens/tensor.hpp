#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace scmlens {

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);
std::size_t element_count(const Shape& shape);

/// Dense row-major tensor of 32-bit reals. Image-like tensors are H x W x C.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  const std::vector<float>& values() const noexcept { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  // 3-D accessors (H x W x C).
  float& at(std::size_t y, std::size_t x, std::size_t c) {
    return data_[(y * shape_[1] + x) * shape_[2] + c];
  }
  float at(std::size_t y, std::size_t x, std::size_t c) const {
    return data_[(y * shape_[1] + x) * shape_[2] + c];
  }

  /// Same data, new shape with equal element count.
  Tensor reshaped(Shape shape) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<float> data_;
};

enum class Padding { Valid, Same };

/// Padding amounts before/after along one spatial axis. "same" splits the
/// total evenly and puts the odd pixel on the bottom/right.
struct PadAmount {
  std::size_t before = 0;
  std::size_t after = 0;
};
PadAmount compute_padding(std::size_t extent, std::size_t kernel, std::size_t stride, Padding padding);
std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, std::size_t stride, Padding padding);
std::size_t pool_output_extent(std::size_t extent, std::size_t window, std::size_t stride);

/// input H x W x Cin, kernel Kh x Kw x Cin x Cout, bias Cout.
Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
              std::size_t stride, Padding padding);

Tensor maxpool2d(const Tensor& input, std::size_t window, std::size_t stride);

Tensor relu(const Tensor& input);

/// Elementwise sum of equal-shaped tensors.
Tensor add(const Tensor& a, const Tensor& b);

/// input n, weights n x m (row-major), bias m.
Tensor dense(std::span<const float> input, const Tensor& weights, std::span<const float> bias);

std::vector<float> softmax(std::span<const float> logits);

/// Index of the maximum; the lowest index wins ties.
std::size_t argmax(std::span<const float> values);

}  // namespace scmlens
