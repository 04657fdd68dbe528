#include "fixtures.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "scmlens/regression.hpp"

namespace scmlens::testing {

LayerSpec conv(std::string id, std::size_t filters, std::size_t kernel, std::string input, std::size_t stride,
               Padding padding) {
  return {std::move(id), LayerKind::Conv2d, ConvParams{filters, kernel, kernel, stride, padding}, {std::move(input)}};
}

LayerSpec pool(std::string id, std::size_t window, std::string input, std::size_t stride) {
  return {std::move(id), LayerKind::MaxPool, PoolParams{window, stride == 0 ? window : stride}, {std::move(input)}};
}

LayerSpec relu_layer(std::string id, std::string input) {
  return {std::move(id), LayerKind::Relu, std::monostate{}, {std::move(input)}};
}

LayerSpec flatten(std::string id, std::string input) {
  return {std::move(id), LayerKind::Flatten, std::monostate{}, {std::move(input)}};
}

LayerSpec dense_layer(std::string id, std::size_t units, std::string input) {
  return {std::move(id), LayerKind::Dense, DenseParams{units}, {std::move(input)}};
}

LayerSpec add_layer(std::string id, std::string a, std::string b) {
  return {std::move(id), LayerKind::Add, std::monostate{}, {std::move(a), std::move(b)}};
}

LayerSpec softmax_layer(std::string id, std::string input) {
  return {std::move(id), LayerKind::Softmax, std::monostate{}, {std::move(input)}};
}

ModelSpec make_model(std::string name, Shape input, std::vector<LayerSpec> layers,
                     std::vector<std::string> recorded) {
  ModelSpec m;
  m.name = std::move(name);
  m.input_shape = std::move(input);
  m.layers = std::move(layers);
  m.recorded_layers = std::move(recorded);
  validate_model(m);
  return m;
}

Tensor random_tensor(Shape shape, std::mt19937_64& rng, float lo, float hi) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<float> u(lo, hi);
  for (float& v : t.data()) v = u(rng);
  return t;
}

WeightStore random_weights(const ModelSpec& model, std::mt19937_64& rng, float lo, float hi) {
  WeightStore w = WeightStore::zeros(model);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (!w.has(i)) continue;
    auto& lw = w.at(i);
    lw.kernel = random_tensor(lw.kernel.shape(), rng, lo, hi);
    lw.bias = random_tensor(lw.bias.shape(), rng, lo, hi);
  }
  return w;
}

namespace {

float& kernel_at(Tensor& k, std::size_t ky, std::size_t kx, std::size_t ci, std::size_t co) {
  const auto& s = k.shape();
  return k[((ky * s[1] + kx) * s[2] + ci) * s[3] + co];
}

float& dense_at(Tensor& w, std::size_t in, std::size_t out) { return w[in * w.dim(1) + out]; }

std::vector<std::uint16_t> balanced_labels(std::size_t n, std::size_t classes) {
  std::vector<std::uint16_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<std::uint16_t>(i % classes);
  return labels;
}

}  // namespace

ModelSpec chain_model() {
  return make_model("chain", {6, 6, 2},
                    {conv("conv1", 4, 3, "input"), relu_layer("relu1", "conv1"), conv("conv2", 8, 3, "relu1"),
                     relu_layer("relu2", "conv2"), flatten("flat", "relu2"), dense_layer("out", 10, "flat")},
                    {"conv1", "conv2", "out"});
}

Fixture chain_fixture(std::uint64_t seed, std::size_t samples) {
  std::mt19937_64 rng(seed);
  ModelSpec m = chain_model();
  WeightStore w = random_weights(m, rng, -0.5f, 0.5f);
  LabeledDataset d{m.input_shape, 10, {}, {}};
  for (std::size_t i = 0; i < samples; ++i) d.images.push_back(random_tensor(m.input_shape, rng, 0.0f, 1.0f));
  std::uniform_int_distribution<int> label(0, 9);
  for (std::size_t i = 0; i < samples; ++i) d.labels.push_back(static_cast<std::uint16_t>(label(rng)));
  return {Network(std::move(m), std::move(w)), std::move(d)};
}

ModelSpec residual_model() {
  return make_model("residual", {4, 4, 1},
                    {conv("convA", 4, 3, "input", 1, Padding::Same), relu_layer("reluA", "convA"),
                     conv("convB", 4, 3, "reluA", 1, Padding::Same), add_layer("join", "reluA", "convB"),
                     relu_layer("relu_join", "join"), flatten("flat", "relu_join"), dense_layer("out", 3, "flat"),
                     softmax_layer("probs", "out")},
                    {"convA", "convB", "out"});
}

Fixture exact_fit_fixture(std::uint64_t seed, std::size_t samples, bool with_bias) {
  ModelSpec m = make_model("exact_fit", {1, 1, 4},
                           {conv("conv1", 6, 1, "input"), relu_layer("relu1", "conv1"), conv("conv2", 6, 1, "relu1"),
                            relu_layer("relu2", "conv2"), flatten("flat", "relu2"), dense_layer("out", 5, "flat")},
                           {"conv1", "conv2", "out"});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> strong(0.5f, 1.5f);
  std::uniform_real_distribution<float> weak(0.0f, 0.1f);
  std::uniform_real_distribution<float> signed_unit(-1.0f, 1.0f);
  WeightStore w = WeightStore::zeros(m);
  // Mostly one-to-one maps keep the filters from moving in lockstep.
  auto& k1 = w.at(m, "conv1").kernel;
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t f = 0; f < 6; ++f) kernel_at(k1, 0, 0, c, f) = f % 4 == c ? strong(rng) : weak(rng);
  auto& k2 = w.at(m, "conv2").kernel;
  for (std::size_t c = 0; c < 6; ++c)
    for (std::size_t f = 0; f < 6; ++f) kernel_at(k2, 0, 0, c, f) = f == c ? strong(rng) : weak(rng);
  if (with_bias) {
    for (float& b : w.at(m, "conv1").bias.data()) b = weak(rng);
    for (float& b : w.at(m, "conv2").bias.data()) b = weak(rng);
  }
  // The readout has no relu after it, so it may take either sign.
  for (float& v : w.at(m, "out").kernel.data()) v = signed_unit(rng);

  LabeledDataset d{m.input_shape, 5, {}, {}};
  for (std::size_t i = 0; i < samples; ++i) d.images.push_back(random_tensor(m.input_shape, rng, 0.0f, 1.0f));
  if (with_bias) {
    // Centre the logits on the data so that every class gets predicted.
    Network probe(m, w);
    const std::size_t idx = m.recorded_index("conv2");
    std::vector<double> mean(6, 0.0);
    for (const auto& img : d.images) {
      const auto trace = forward(probe, img);
      for (std::size_t j = 0; j < 6; ++j) mean[j] += trace.responses[idx][j] / static_cast<double>(samples);
    }
    auto& out = w.at(m, "out");
    for (std::size_t k = 0; k < 5; ++k) {
      double b = 0.0;
      for (std::size_t j = 0; j < 6; ++j) b -= dense_at(out.kernel, j, k) * mean[j];
      out.bias[k] = static_cast<float>(b);
    }
  }
  Network net(std::move(m), std::move(w));

  // Labels: the model's own prediction, a quarter of them replaced at random.
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> label(0, 4);
  for (std::size_t i = 0; i < samples; ++i) {
    const auto pred = forward(net, d.images[i]).predicted_class;
    d.labels.push_back(static_cast<std::uint16_t>(coin(rng) < 0.25 ? label(rng) : static_cast<int>(pred)));
  }
  return {std::move(net), std::move(d)};
}

Fixture planted_fixture(std::uint64_t seed, std::size_t samples) {
  constexpr std::size_t kClasses = 4;
  ModelSpec m = make_model("planted", {6, 6, 3},
                           {conv("conv1", 4, 3, "input"), relu_layer("relu1", "conv1"), pool("pool1", 2, "relu1"),
                            conv("conv2", 3, 2, "pool1"), relu_layer("relu2", "conv2"), flatten("flat", "relu2"),
                            dense_layer("out", kClasses, "flat")},
                           {"conv1", "conv2", "out"});
  std::mt19937_64 rng(seed);
  WeightStore w = WeightStore::zeros(m);

  // Channel 0 holds a class level plus two noise fields that channels 1
  // and 2 repeat without any class information. Filter 0 averages channel 0;
  // filters 1 and 2 estimate the noise fields; filter 3 also looks at
  // channel 1 but nothing downstream reads it.
  auto& k1 = w.at(m, "conv1").kernel;
  for (std::size_t ky = 0; ky < 3; ++ky) {
    for (std::size_t kx = 0; kx < 3; ++kx) {
      kernel_at(k1, ky, kx, 0, 0) = 1.0f / 9.0f;
      kernel_at(k1, ky, kx, 1, 1) = 1.0f / 9.0f;
      kernel_at(k1, ky, kx, 2, 2) = 1.0f / 9.0f;
      kernel_at(k1, ky, kx, 1, 3) = (ky == 1 || kx == 1) ? 0.2f : 0.0f;
    }
  }
  auto& k2 = w.at(m, "conv2").kernel;
  for (std::size_t ky = 0; ky < 2; ++ky)
    for (std::size_t kx = 0; kx < 2; ++kx)
      for (std::size_t j = 0; j < 3; ++j) kernel_at(k2, ky, kx, j, j) = 0.25f;

  LabeledDataset d{m.input_shape, kClasses, {}, balanced_labels(samples, kClasses)};
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  for (std::size_t i = 0; i < samples; ++i) {
    Tensor img(m.input_shape);
    const float level = 0.5f + 0.5f * static_cast<float>(d.labels[i]);
    for (std::size_t y = 0; y < 6; ++y) {
      for (std::size_t x = 0; x < 6; ++x) {
        const float a = gauss(rng);
        const float b = gauss(rng);
        img.at(y, x, 0) = level + 0.4f * a + 0.3f * b + 0.6f * gauss(rng);
        img.at(y, x, 1) = 0.3f + a;
        img.at(y, x, 2) = 0.3f + b;
      }
    }
    d.images.push_back(std::move(img));
  }

  // Readout: nearest class centre of t = s0 - b1 (s1 - mu1) - b2 (s2 - mu2),
  // with b the within-class regression of s0 on the noise estimates.
  const std::size_t n = samples;
  Eigen::MatrixXd s(static_cast<Eigen::Index>(n), 3);
  {
    Network probe(m, w);
    const std::size_t idx = m.recorded_index("conv2");
    for (std::size_t i = 0; i < n; ++i) {
      const auto trace = forward(probe, d.images[i]);
      for (Eigen::Index j = 0; j < 3; ++j) s(static_cast<Eigen::Index>(i), j) = trace.responses[idx][static_cast<std::size_t>(j)];
    }
  }
  std::array<double, kClasses> level_mean{};
  std::array<double, kClasses> count{};
  for (std::size_t i = 0; i < n; ++i) {
    level_mean[d.labels[i]] += s(static_cast<Eigen::Index>(i), 0);
    count[d.labels[i]] += 1.0;
  }
  for (std::size_t c = 0; c < kClasses; ++c) level_mean[c] /= std::max(count[c], 1.0);
  Eigen::VectorXd resid(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) resid(static_cast<Eigen::Index>(i)) = s(static_cast<Eigen::Index>(i), 0) - level_mean[d.labels[i]];
  const Eigen::VectorXd beta = fit_ols(with_intercept(s.rightCols(2)), resid);
  const double mu1 = s.col(1).mean();
  const double mu2 = s.col(2).mean();
  std::array<double, kClasses> centre{};
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    centre[d.labels[i]] += s(r, 0) - beta(0) * (s(r, 1) - mu1) - beta(1) * (s(r, 2) - mu2);
  }
  auto& wd = w.at(m, "out");
  for (std::size_t c = 0; c < kClasses; ++c) {
    const double mk = centre[c] / std::max(count[c], 1.0);
    dense_at(wd.kernel, 0, c) = static_cast<float>(2.0 * mk);
    dense_at(wd.kernel, 1, c) = static_cast<float>(-2.0 * mk * beta(0));
    dense_at(wd.kernel, 2, c) = static_cast<float>(-2.0 * mk * beta(1));
    wd.bias[c] = static_cast<float>(-mk * mk + 2.0 * mk * (beta(0) * mu1 + beta(1) * mu2));
  }
  return {Network(std::move(m), std::move(w)), std::move(d)};
}

namespace {

// Binary textures on an 8 x 8 grid, shifted by `phase`.
float texture(std::size_t kind, std::size_t y, std::size_t x, std::size_t phase) {
  switch (kind) {
    case 0: return static_cast<float>((y + phase) % 2);
    case 1: return static_cast<float>((x + phase) % 2);
    case 2: return (y + phase) % 4 < 2 ? 1.0f : 0.0f;
    case 3: return (x + phase) % 4 < 2 ? 1.0f : 0.0f;
    case 4: return (x + y + phase) % 4 < 2 ? 1.0f : 0.0f;
    case 5: return (x + 8 - y + phase) % 4 < 2 ? 1.0f : 0.0f;
    case 6: return static_cast<float>((x + y + phase) % 2);
    default: {
      const double cy = static_cast<double>(phase % 8);
      const double cx = static_cast<double>((phase * 5 + 3) % 8);
      const double r2 = (static_cast<double>(y) - cy) * (static_cast<double>(y) - cy) +
                        (static_cast<double>(x) - cx) * (static_cast<double>(x) - cx);
      return static_cast<float>(std::exp(-r2 / 4.5));
    }
  }
}

constexpr std::array<std::array<float, 9>, 8> kPrimitives{{
    {1, 1, 1, 0, 0, 0, -1, -1, -1},
    {1, 0, -1, 1, 0, -1, 1, 0, -1},
    {0, 1, 1, -1, 0, 1, -1, -1, 0},
    {1, 1, 0, 1, 0, -1, 0, -1, -1},
    {-1, -1, -1, -1, 8, -1, -1, -1, -1},
    {-1, -1, -1, 2, 2, 2, -1, -1, -1},
    {-1, 2, -1, -1, 2, -1, -1, 2, -1},
    {1, 1, 1, 1, 1, 1, 1, 1, 1},
}};

}  // namespace

Fixture desk_fixture(std::uint64_t seed, std::size_t samples) {
  constexpr std::size_t kClasses = 10;
  ModelSpec m = make_model(
      "desk", {8, 8, 1},
      {conv("conv1", 8, 3, "input", 1, Padding::Same), relu_layer("relu1", "conv1"), pool("pool1", 2, "relu1"),
       conv("conv2", 16, 3, "pool1", 1, Padding::Same), relu_layer("relu2", "conv2"), pool("pool2", 4, "relu2"),
       flatten("flat", "pool2"), dense_layer("logits", kClasses, "flat"), softmax_layer("probs", "logits")},
      {"conv1", "conv2", "logits"});
  std::mt19937_64 rng(seed);
  WeightStore w = WeightStore::zeros(m);

  auto& k1 = w.at(m, "conv1").kernel;
  for (std::size_t f = 0; f < 8; ++f)
    for (std::size_t t = 0; t < 9; ++t) kernel_at(k1, t / 3, t % 3, 0, f) = kPrimitives[f][t] / 6.0f;

  std::normal_distribution<float> gauss(0.0f, 1.0f);
  auto& k2 = w.at(m, "conv2");
  for (float& v : k2.kernel.data()) v = 0.25f * gauss(rng);
  for (float& v : k2.bias.data()) v = 0.05f * gauss(rng);

  LabeledDataset d{m.input_shape, kClasses, {}, balanced_labels(samples, kClasses)};
  std::uniform_int_distribution<std::size_t> phase(0, 63);
  std::uniform_real_distribution<float> jitter(0.8f, 1.2f);
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t c = d.labels[i];
    const std::size_t primary = c % 8;
    const std::size_t secondary = (c + 1 + (c / 8) * 3) % 8;
    Tensor img(m.input_shape);
    for (std::size_t b = 0; b < 8; ++b) {
      float amp = 0.15f;
      if (b == primary) amp += 1.0f;
      if (b == secondary) amp += 0.6f;
      amp *= jitter(rng);
      const std::size_t p = phase(rng);
      for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t x = 0; x < 8; ++x) img.at(y, x, 0) += amp * texture(b, y, x, p);
    }
    for (float& v : img.data()) v += 0.25f * gauss(rng);
    d.images.push_back(std::move(img));
  }

  // Readout: ridge regression of one-hot labels on the pooled conv2 features.
  {
    Network probe(m, w);
    const std::size_t idx = m.recorded_index("conv2");
    Eigen::MatrixXd x(static_cast<Eigen::Index>(samples), 16);
    for (std::size_t i = 0; i < samples; ++i) {
      const auto trace = forward(probe, d.images[i]);
      for (std::size_t f = 0; f < 16; ++f) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = trace.responses[idx][f];
    }
    const Eigen::MatrixXd design = with_intercept(x);
    auto& wd = w.at(m, "logits");
    for (std::size_t c = 0; c < kClasses; ++c) {
      Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(samples));
      for (std::size_t i = 0; i < samples; ++i)
        if (d.labels[i] == c) y(static_cast<Eigen::Index>(i)) = 1.0;
      const Eigen::VectorXd beta = fit_ridge(design, y, 1e-3);
      for (std::size_t f = 0; f < 16; ++f) dense_at(wd.kernel, f, c) = static_cast<float>(beta(static_cast<Eigen::Index>(f)));
      wd.bias[c] = static_cast<float>(beta(16));
    }
  }
  return {Network(std::move(m), std::move(w)), std::move(d)};
}

std::string bundled_fixture_dir() { return SCMLENS_FIXTURE_DIR; }

}  // namespace scmlens::testing
