#include "scmlens/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "scmlens/error.hpp"

namespace scmlens {

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

namespace {

void check_dims(const Shape& shape) {
  if (shape.empty()) throw ValidationError("tensor shape must have at least one dimension");
  for (auto d : shape) {
    if (d == 0) throw ValidationError("tensor shape " + to_string(shape) + " has a zero dimension");
  }
}

}  // namespace

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)) {
  check_dims(shape_);
  data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_dims(shape_);
  if (data_.size() != element_count(shape_)) {
    throw ValidationError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                          to_string(shape_));
  }
}

Tensor Tensor::reshaped(Shape shape) const {
  if (element_count(shape) != data_.size()) {
    throw ValidationError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

PadAmount compute_padding(std::size_t extent, std::size_t kernel, std::size_t stride, Padding padding) {
  if (padding == Padding::Valid) return {};
  const std::size_t out = (extent + stride - 1) / stride;
  const std::size_t needed = (out - 1) * stride + kernel;
  const std::size_t total = needed > extent ? needed - extent : 0;
  return {total / 2, total - total / 2};
}

std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, std::size_t stride, Padding padding) {
  const PadAmount pad = compute_padding(extent, kernel, stride, padding);
  const std::size_t padded = extent + pad.before + pad.after;
  if (kernel > padded) return 0;
  return (padded - kernel) / stride + 1;
}

std::size_t pool_output_extent(std::size_t extent, std::size_t window, std::size_t stride) {
  if (window > extent) return 0;
  return (extent - window) / stride + 1;
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias, std::size_t stride,
              Padding padding) {
  if (input.rank() != 3 || kernel.rank() != 4 || kernel.dim(2) != input.dim(2) || bias.size() != kernel.dim(3)) {
    throw ValidationError("conv2d shape mismatch: input " + to_string(input.shape()) + ", kernel " +
                          to_string(kernel.shape()) + ", bias [" + std::to_string(bias.size()) + "]");
  }
  if (stride == 0) throw ValidationError("conv2d stride must be at least 1");

  const std::size_t h = input.dim(0), w = input.dim(1), cin = input.dim(2);
  const std::size_t kh = kernel.dim(0), kw = kernel.dim(1), cout = kernel.dim(3);
  const std::size_t oh = conv_output_extent(h, kh, stride, padding);
  const std::size_t ow = conv_output_extent(w, kw, stride, padding);
  if (oh == 0 || ow == 0) {
    throw ValidationError("conv2d kernel " + to_string(kernel.shape()) + " larger than input " +
                          to_string(input.shape()));
  }
  const PadAmount py = compute_padding(h, kh, stride, padding);
  const PadAmount px = compute_padding(w, kw, stride, padding);

  Tensor out({oh, ow, cout});
  std::vector<double> acc(cout);
  const float* in = input.data().data();
  const float* k = kernel.data().data();
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      for (std::size_t c = 0; c < cout; ++c) acc[c] = bias[c];
      for (std::size_t ky = 0; ky < kh; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(py.before);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const std::ptrdiff_t ix =
              static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(px.before);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
          const float* pixel = in + (static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)) * cin;
          const float* taps = k + (ky * kw + kx) * cin * cout;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const double v = pixel[ci];
            if (v == 0.0) continue;
            const float* row = taps + ci * cout;
            for (std::size_t c = 0; c < cout; ++c) acc[c] += v * row[c];
          }
        }
      }
      for (std::size_t c = 0; c < cout; ++c) out.at(oy, ox, c) = static_cast<float>(acc[c]);
    }
  }
  return out;
}

Tensor maxpool2d(const Tensor& input, std::size_t window, std::size_t stride) {
  if (input.rank() != 3) throw ValidationError("maxpool2d expects H x W x C input, got " + to_string(input.shape()));
  if (window == 0 || stride == 0) throw ValidationError("maxpool2d window and stride must be at least 1");
  const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
  if (window > h || window > w) {
    throw ValidationError("maxpool2d window " + std::to_string(window) + " exceeds spatial extent of " +
                          to_string(input.shape()));
  }
  const std::size_t oh = pool_output_extent(h, window, stride);
  const std::size_t ow = pool_output_extent(w, window, stride);
  Tensor out({oh, ow, c});
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        float best = input.at(oy * stride, ox * stride, ch);
        for (std::size_t dy = 0; dy < window; ++dy) {
          for (std::size_t dx = 0; dx < window; ++dx) {
            best = std::max(best, input.at(oy * stride + dy, ox * stride + dx, ch));
          }
        }
        out.at(oy, ox, ch) = best;
      }
    }
  }
  return out;
}

Tensor relu(const Tensor& input) {
  Tensor out = input;
  for (float& v : out.data()) v = v > 0.0f ? v : 0.0f;
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ValidationError("add shape mismatch: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  Tensor out = a;
  auto dst = out.data();
  auto src = b.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  return out;
}

Tensor dense(std::span<const float> input, const Tensor& weights, std::span<const float> bias) {
  if (weights.rank() != 2 || weights.dim(0) != input.size() || weights.dim(1) != bias.size()) {
    throw ValidationError("dense shape mismatch: input [" + std::to_string(input.size()) + "], weights " +
                          to_string(weights.shape()) + ", bias [" + std::to_string(bias.size()) + "]");
  }
  const std::size_t n = input.size(), m = bias.size();
  std::vector<double> acc(bias.begin(), bias.end());
  const float* wd = weights.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = input[i];
    const float* row = wd + i * m;
    for (std::size_t j = 0; j < m; ++j) acc[j] += v * row[j];
  }
  Tensor out({m});
  for (std::size_t j = 0; j < m; ++j) out[j] = static_cast<float>(acc[j]);
  return out;
}

std::vector<float> softmax(std::span<const float> logits) {
  if (logits.empty()) throw ValidationError("softmax of an empty vector");
  const float peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> e(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    e[i] = std::exp(static_cast<double>(logits[i]) - peak);
    total += e[i];
  }
  std::vector<float> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<float>(e[i] / total);
  return out;
}

std::size_t argmax(std::span<const float> values) {
  if (values.empty()) throw ValidationError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace scmlens
