#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "scmlens/dataset.hpp"
#include "scmlens/forward.hpp"
#include "scmlens/model.hpp"
#include "scmlens/weights.hpp"

namespace scmlens::testing {

// Layer builders.
LayerSpec conv(std::string id, std::size_t filters, std::size_t kernel, std::string input, std::size_t stride = 1,
               Padding padding = Padding::Valid);
LayerSpec pool(std::string id, std::size_t window, std::string input, std::size_t stride = 0);
LayerSpec relu_layer(std::string id, std::string input);
LayerSpec flatten(std::string id, std::string input);
LayerSpec dense_layer(std::string id, std::size_t units, std::string input);
LayerSpec add_layer(std::string id, std::string a, std::string b);
LayerSpec softmax_layer(std::string id, std::string input);

ModelSpec make_model(std::string name, Shape input, std::vector<LayerSpec> layers,
                     std::vector<std::string> recorded);

Tensor random_tensor(Shape shape, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f);
WeightStore random_weights(const ModelSpec& model, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f);

struct Fixture {
  Network net;
  LabeledDataset data;
};

/// conv1(4) -> relu -> conv2(8) -> relu -> flatten -> out(10), all recorded.
ModelSpec chain_model();
Fixture chain_fixture(std::uint64_t seed = 3, std::size_t samples = 120);

/// convA(4) -> relu -> convB(4) -> add(reluA, convB) -> relu -> flatten ->
/// dense(3) -> softmax; recorded convA, convB, out.
ModelSpec residual_model();

/// 1 x 1 spatial CNN with non-negative conv weights, biases and inputs, so every
/// recorded node value is an exact affine function of its parents.
/// Labels follow the model's own predictions with a share replaced at random.
Fixture exact_fit_fixture(std::uint64_t seed = 7, std::size_t samples = 400, bool with_bias = true);

/// Conv net in which filter 0 of layer "conv1" alone carries the class
/// signal. Filters 1 and 2 measure a noise field the readout subtracts;
/// filter 3 is dead (no outgoing weight). Four balanced classes.
Fixture planted_fixture(std::uint64_t seed = 11, std::size_t samples = 400);

/// Two conv layers (8 and 16 filters) on 8 x 8 textures, 10 classes, with
/// a dense readout fitted by ridge regression on the conv features.
Fixture desk_fixture(std::uint64_t seed = 2024, std::size_t samples = 2000);

/// Directory holding the bundled desk fixture files.
std::string bundled_fixture_dir();

}  // namespace scmlens::testing
