#include <doctest.h>

#include <cmath>
#include <random>

#include "conv_oracle.hpp"
#include "scmlens/error.hpp"
#include "scmlens/tensor.hpp"

using namespace scmlens;

namespace {

Tensor hwc(std::size_t h, std::size_t w, std::size_t c, std::vector<float> v) { return Tensor({h, w, c}, std::move(v)); }

}  // namespace

TEST_CASE("tensor rejects zero dimensions and mismatched data") {
  CHECK_THROWS_AS(Tensor({2, 0}), ValidationError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<float>(3)), ValidationError);
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.reshaped({6}).shape() == Shape{6});
  CHECK_THROWS_AS(t.reshaped({5}), ValidationError);
}

TEST_CASE("conv2d: 1x1 identity kernel reproduces the input") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(-3.0f, 3.0f);
  Tensor in({5, 4, 1});
  for (float& v : in.data()) v = u(rng);
  const Tensor k({1, 1, 1, 1}, {1.0f});
  const std::vector<float> bias{0.0f};
  CHECK(conv2d(in, k, bias, 1, Padding::Valid) == in);
  CHECK(conv2d(in, k, bias, 1, Padding::Same) == in);
}

TEST_CASE("conv2d: zero input and zero bias give zero output") {
  const Tensor in({6, 6, 2});
  Tensor k({3, 3, 2, 3}, 0.7f);
  const std::vector<float> bias(3, 0.0f);
  const Tensor out = conv2d(in, k, bias, 1, Padding::Same);
  CHECK(out.shape() == Shape{6, 6, 3});
  for (float v : out.data()) CHECK(v == 0.0f);
}

TEST_CASE("conv2d: hand example") {
  const Tensor in = hwc(2, 2, 1, {1, 2, 3, 4});
  const Tensor k({2, 2, 1, 1}, {1, 0, 0, 1});
  const Tensor out = conv2d(in, k, std::vector<float>{0.0f}, 1, Padding::Valid);
  CHECK(out.shape() == Shape{1, 1, 1});
  CHECK(out[0] == 5.0f);
}

TEST_CASE("conv2d: same padding puts the odd pixel after") {
  CHECK(compute_padding(5, 3, 1, Padding::Same).before == 1);
  CHECK(compute_padding(5, 3, 1, Padding::Same).after == 1);
  CHECK(compute_padding(4, 2, 1, Padding::Same).before == 0);
  CHECK(compute_padding(4, 2, 1, Padding::Same).after == 1);
  CHECK(compute_padding(5, 2, 2, Padding::Same).before == 0);
  CHECK(compute_padding(5, 2, 2, Padding::Same).after == 1);
  CHECK(conv_output_extent(5, 2, 2, Padding::Same) == 3);
  CHECK(conv_output_extent(5, 3, 2, Padding::Valid) == 2);
  // 2x2 all-ones kernel over [[1,2],[3,4]] with same padding: bottom/right zero pad.
  const Tensor in = hwc(2, 2, 1, {1, 2, 3, 4});
  const Tensor k({2, 2, 1, 1}, 1.0f);
  const Tensor out = conv2d(in, k, std::vector<float>{0.0f}, 1, Padding::Same);
  CHECK(out.values() == std::vector<float>{10, 6, 7, 4});
}

TEST_CASE("conv2d: shape mismatch names both shapes") {
  const Tensor in({4, 4, 2});
  const Tensor k({3, 3, 3, 1});
  try {
    conv2d(in, k, std::vector<float>{0.0f}, 1, Padding::Valid);
    FAIL("expected a shape error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[4x4x2]") != std::string::npos);
    CHECK(msg.find("[3x3x3x1]") != std::string::npos);
  }
  CHECK_THROWS_AS(conv2d(in, Tensor({3, 3, 2, 1}), std::vector<float>{0.0f, 0.0f}, 1, Padding::Valid),
                  ValidationError);
  CHECK_THROWS_AS(conv2d(in, Tensor({3, 3, 2, 1}), std::vector<float>{0.0f}, 0, Padding::Valid), ValidationError);
  CHECK_THROWS_AS(conv2d(in, Tensor({5, 5, 2, 1}), std::vector<float>{0.0f}, 1, Padding::Valid), ValidationError);
}

TEST_CASE("conv2d matches the nested-loop reference on random cases") {
  std::mt19937_64 rng(20240);
  std::uniform_int_distribution<std::size_t> dim(1, 16), ch(1, 4), ker(1, 5), st(1, 3), pad(0, 1);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (int trial = 0; trial < 60; ++trial) {
    testing::ConvCase c;
    c.h = dim(rng);
    c.w = dim(rng);
    c.cin = ch(rng);
    c.cout = ch(rng);
    c.kh = std::min(ker(rng), c.h);
    c.kw = std::min(ker(rng), c.w);
    c.stride = st(rng);
    const Padding p = pad(rng) ? Padding::Same : Padding::Valid;
    const auto ph = compute_padding(c.h, c.kh, c.stride, p);
    const auto pw = compute_padding(c.w, c.kw, c.stride, p);
    c.pad_top = ph.before;
    c.pad_bottom = ph.after;
    c.pad_left = pw.before;
    c.pad_right = pw.after;
    c.input.resize(c.h * c.w * c.cin);
    c.kernel.resize(c.kh * c.kw * c.cin * c.cout);
    c.bias.resize(c.cout);
    for (auto* v : {&c.input, &c.kernel, &c.bias})
      for (float& x : *v) x = u(rng);
    const Tensor out = conv2d(Tensor({c.h, c.w, c.cin}, c.input), Tensor({c.kh, c.kw, c.cin, c.cout}, c.kernel), c.bias,
                              c.stride, p);
    const auto ref = testing::brute_force_conv(c);
    REQUIRE(out.shape() == Shape{testing::oracle_out_h(c), testing::oracle_out_w(c), c.cout});
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(out[i] - ref[i]) <= 1e-5);
  }
}

TEST_CASE("maxpool2d") {
  CHECK(maxpool2d(hwc(2, 2, 1, {1, 2, 3, 4}), 2, 2).values() == std::vector<float>{4});
  const Tensor constant({4, 6, 2}, 2.5f);
  const Tensor pooled = maxpool2d(constant, 2, 2);
  CHECK(pooled.shape() == Shape{2, 3, 2});
  for (float v : pooled.data()) CHECK(v == 2.5f);
  // [[1,5],[2,0]] next to [[3,3],[3,3]]
  const Tensor wide = hwc(2, 4, 1, {1, 5, 3, 3, 2, 0, 3, 3});
  const Tensor out = maxpool2d(wide, 2, 2);
  CHECK(out.shape() == Shape{1, 2, 1});
  CHECK(out.values() == std::vector<float>{5, 3});
  CHECK_THROWS_AS(maxpool2d(wide, 3, 1), ValidationError);
  CHECK_THROWS_AS(maxpool2d(wide, 2, 0), ValidationError);
}

TEST_CASE("relu, dense, softmax, argmax") {
  const Tensor x({2}, {-1.0f, 2.0f});
  CHECK(relu(x).values() == std::vector<float>{0, 2});
  CHECK(relu(relu(x)) == relu(x));

  const Tensor w({2, 2}, {1, 0, 0, 1});
  const std::vector<float> in{1, 2}, bias{1, 1};
  CHECK(dense(in, w, bias).values() == std::vector<float>{2, 3});
  CHECK_THROWS_AS(dense(std::vector<float>{1, 2, 3}, w, bias), ValidationError);
  CHECK_THROWS_AS(dense(in, w, std::vector<float>{1}), ValidationError);

  const auto half = softmax(std::vector<float>{0, 0});
  CHECK(half[0] == doctest::Approx(0.5));
  CHECK(half[1] == doctest::Approx(0.5));

  CHECK(argmax(std::vector<float>{1, 3, 3, 2}) == 1);
  CHECK(argmax(std::vector<float>{0, 0, 0}) == 0);
  CHECK_THROWS_AS(argmax(std::vector<float>{}), ValidationError);
}

TEST_CASE("softmax sums to one and ignores constant shifts") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(-20.0f, 20.0f);
  for (int t = 0; t < 200; ++t) {
    std::vector<float> z(1 + t % 12);
    for (float& v : z) v = u(rng);
    const auto p = softmax(z);
    double sum = 0.0;
    for (float v : p) {
      CHECK(v >= 0.0f);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-6);
    std::vector<float> shifted = z;
    for (float& v : shifted) v += 7.25f;
    const auto q = softmax(shifted);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - q[i]) <= 1e-6);
  }
}

TEST_CASE("relu is idempotent on random tensors") {
  std::mt19937_64 rng(9);
  std::normal_distribution<float> g(0.0f, 1.0f);
  Tensor t({7, 5, 3});
  for (float& v : t.data()) v = g(rng);
  CHECK(relu(relu(t)) == relu(t));
}

TEST_CASE("add requires equal shapes") {
  const Tensor a({2, 2, 1}, 1.0f), b({2, 2, 1}, 2.0f);
  CHECK(add(a, b).values() == std::vector<float>(4, 3.0f));
  CHECK_THROWS_AS(add(a, Tensor({4})), ValidationError);
}
