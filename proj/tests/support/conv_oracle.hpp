#pragma once

#include <cstddef>
#include <vector>

namespace scmlens::testing {

// Plain nested-loop convolution over raw HWC / KhKwCinCout arrays, used as
// the reference for conv2d. Padding is given explicitly.
struct ConvCase {
  std::size_t h = 0, w = 0, cin = 0, kh = 0, kw = 0, cout = 0, stride = 1;
  std::size_t pad_top = 0, pad_left = 0, pad_bottom = 0, pad_right = 0;
  std::vector<float> input;
  std::vector<float> kernel;
  std::vector<float> bias;
};

inline std::size_t oracle_out_h(const ConvCase& c) { return (c.h + c.pad_top + c.pad_bottom - c.kh) / c.stride + 1; }
inline std::size_t oracle_out_w(const ConvCase& c) { return (c.w + c.pad_left + c.pad_right - c.kw) / c.stride + 1; }

inline std::vector<double> brute_force_conv(const ConvCase& c) {
  const std::size_t oh = oracle_out_h(c), ow = oracle_out_w(c);
  std::vector<double> out(oh * ow * c.cout, 0.0);
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      for (std::size_t co = 0; co < c.cout; ++co) {
        double acc = c.bias[co];
        for (std::size_t ky = 0; ky < c.kh; ++ky) {
          for (std::size_t kx = 0; kx < c.kw; ++kx) {
            const long iy = static_cast<long>(oy * c.stride + ky) - static_cast<long>(c.pad_top);
            const long ix = static_cast<long>(ox * c.stride + kx) - static_cast<long>(c.pad_left);
            if (iy < 0 || ix < 0 || iy >= static_cast<long>(c.h) || ix >= static_cast<long>(c.w)) continue;
            for (std::size_t ci = 0; ci < c.cin; ++ci) {
              const double x = c.input[(static_cast<std::size_t>(iy) * c.w + static_cast<std::size_t>(ix)) * c.cin + ci];
              const double k = c.kernel[((ky * c.kw + kx) * c.cin + ci) * c.cout + co];
              acc += x * k;
            }
          }
        }
        out[(oy * ow + ox) * c.cout + co] = acc;
      }
    }
  }
  return out;
}

}  // namespace scmlens::testing
