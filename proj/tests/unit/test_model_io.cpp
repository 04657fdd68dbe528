#include <doctest.h>

#include <cstring>
#include <random>
#include <string>

#include "fixtures.hpp"
#include "scmlens/dataset.hpp"
#include "scmlens/error.hpp"
#include "scmlens/model.hpp"
#include "scmlens/weights.hpp"

using namespace scmlens;

namespace {

const char* kMinimal = R"({
  "name": "minimal",
  "input_shape": [8, 8, 1],
  "layers": [
    {"id": "conv1", "kind": "conv2d", "params": {"filters": 4, "kernel": 3, "stride": 1, "padding": "valid"}, "inputs": ["input"]},
    {"id": "relu1", "kind": "relu", "inputs": ["conv1"]},
    {"id": "flat", "kind": "flatten", "inputs": ["relu1"]},
    {"id": "logits", "kind": "dense", "params": {"units": 10}, "inputs": ["flat"]},
    {"id": "probs", "kind": "softmax", "inputs": ["logits"]}
  ],
  "recorded_layers": ["conv1", "logits"]
})";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

std::string error_of(const std::string& text) {
  try {
    parse_model(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace

TEST_CASE("parse_model: minimal schema example") {
  const ModelSpec m = parse_model(kMinimal);
  CHECK(m.name == "minimal");
  CHECK(m.layers.size() == 5);
  CHECK(m.recorded_layers == std::vector<std::string>{"conv1", "logits"});
  CHECK(m.topology.output_shapes[m.layer_index("conv1")] == Shape{6, 6, 4});
  CHECK(m.topology.output_shapes[m.layer_index("flat")] == Shape{144});
  CHECK(m.topology.output_shapes[m.layer_index("probs")] == Shape{10});
  const auto& conv1 = m.recorded("conv1");
  CHECK(conv1.is_conv);
  CHECK(conv1.node_count == 4);
  CHECK(conv1.record_point == m.layer_index("relu1"));
}

TEST_CASE("parse_model: each failure class has its own diagnostic") {
  SUBCASE("unknown kind") {
    CHECK_THROWS_AS(parse_model(replace(kMinimal, "\"relu\"", "\"gelu\"")), FormatError);
    CHECK(error_of(replace(kMinimal, "\"relu\"", "\"gelu\"")).find("unknown layer kind 'gelu'") != std::string::npos);
  }
  SUBCASE("dangling input") {
    const auto msg = error_of(replace(kMinimal, "[\"relu1\"]", "[\"relu9\"]"));
    CHECK(msg.find("dangling input reference") != std::string::npos);
    CHECK(msg.find("relu9") != std::string::npos);
  }
  SUBCASE("shape inference") {
    // Kernel larger than the image.
    const auto msg = error_of(replace(kMinimal, "\"kernel\": 3", "\"kernel\": 9"));
    CHECK(msg.find("shape inference failed at layer 'conv1'") != std::string::npos);
  }
  SUBCASE("cycle") {
    std::string text = replace(kMinimal, "[\"input\"]", "[\"relu1\"]");
    const auto msg = error_of(text);
    CHECK(msg.find("cycle detected") != std::string::npos);
    CHECK(msg.find("conv1") != std::string::npos);
  }
  SUBCASE("malformed text") { CHECK_THROWS_AS(parse_model("{not json"), FormatError); }
  SUBCASE("recorded layer must be conv or dense") {
    CHECK(error_of(replace(kMinimal, "[\"conv1\", \"logits\"]", "[\"relu1\", \"logits\"]"))
              .find("must be conv2d or dense") != std::string::npos);
  }
  SUBCASE("two terminal layers") {
    const auto text = replace(kMinimal, "{\"id\": \"probs\"",
                              "{\"id\": \"extra\", \"kind\": \"relu\", \"inputs\": [\"flat\"]},\n    {\"id\": \"probs\"");
    CHECK(error_of(text).find("exactly one terminal layer") != std::string::npos);
  }
  SUBCASE("duplicate ids") {
    CHECK(error_of(replace(kMinimal, "\"id\": \"flat\"", "\"id\": \"relu1\"")).find("duplicate layer id") !=
          std::string::npos);
  }
}

TEST_CASE("model shape mismatch between dense input and flattened conv output") {
  // An add joining tensors of different shape cannot be inferred.
  ModelSpec m;
  m.name = "bad";
  m.input_shape = {4, 4, 1};
  m.layers = {testing::conv("a", 2, 3, "input", 1, Padding::Same), testing::conv("b", 3, 3, "input", 1, Padding::Same),
              testing::add_layer("j", "a", "b"), testing::flatten("f", "j"), testing::dense_layer("out", 2, "f")};
  m.recorded_layers = {"a", "out"};
  CHECK_THROWS_WITH_AS(validate_model(m), doctest::Contains("shape inference failed at layer 'j'"), ValidationError);
}

TEST_CASE("residual block parses with a two-input add") {
  const ModelSpec m = testing::residual_model();
  const auto& join = m.layers[m.layer_index("join")];
  CHECK(join.kind == LayerKind::Add);
  CHECK(join.inputs.size() == 2);
  const ModelSpec again = parse_model(serialize_model(m));
  CHECK(again.same_declaration(m));
  CHECK(again.layers[again.layer_index("join")].inputs.size() == 2);
}

TEST_CASE("model serialization round-trips") {
  for (const ModelSpec& m : {testing::chain_model(), testing::residual_model(), parse_model(kMinimal)}) {
    const ModelSpec back = parse_model(serialize_model(m));
    CHECK(back.same_declaration(m));
    CHECK(back.topology.order == m.topology.order);
    CHECK(back.topology.output_shapes == m.topology.output_shapes);
    CHECK(serialize_model(back) == serialize_model(m));
  }
}

TEST_CASE("shape inference is deterministic") {
  const ModelSpec a = parse_model(kMinimal);
  const ModelSpec b = parse_model(kMinimal);
  CHECK(a.topology.output_shapes == b.topology.output_shapes);
  CHECK(a.topology.order == b.topology.order);
}

TEST_CASE("weights: zero file of the right length loads as zeros") {
  const ModelSpec m = parse_model(kMinimal);
  // conv 3*3*1*4 + 4, dense 144*10 + 10
  CHECK(expected_weights_bytes(m) == 8 + 4 * (36 + 4 + 1440 + 10));
  std::string bytes = "SCMW";
  put_u32(bytes, 1);
  bytes.append(expected_weights_bytes(m) - 8, '\0');
  const WeightStore w = load_weights(bytes, m);
  CHECK(w == WeightStore::zeros(m));
  CHECK(w.at(m, "conv1").kernel.shape() == Shape{3, 3, 1, 4});
  CHECK(w.at(m, "logits").kernel.shape() == Shape{144, 10});
}

TEST_CASE("weights: truncated, surplus and bad magic are rejected") {
  const ModelSpec m = parse_model(kMinimal);
  std::string bytes = serialize_weights(WeightStore::zeros(m), m);
  const std::string expected = std::to_string(bytes.size());

  std::string short_by_one = bytes.substr(0, bytes.size() - 1);
  CHECK_THROWS_WITH_AS(load_weights(short_by_one, m), doctest::Contains("truncated"), FormatError);
  CHECK_THROWS_WITH_AS(load_weights(short_by_one, m), doctest::Contains(expected.c_str()), FormatError);

  CHECK_THROWS_WITH_AS(load_weights(bytes + "x", m), doctest::Contains("surplus"), FormatError);
  CHECK_THROWS_WITH_AS(load_weights(bytes + "x", m), doctest::Contains(std::to_string(bytes.size() + 1).c_str()),
                       FormatError);

  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_WITH_AS(load_weights(bad, m), doctest::Contains("magic"), FormatError);
  std::string version = bytes;
  version[4] = 2;
  CHECK_THROWS_WITH_AS(load_weights(version, m), doctest::Contains("version"), FormatError);
}

TEST_CASE("weights round-trip bitwise") {
  std::mt19937_64 rng(3);
  const ModelSpec m = testing::residual_model();
  const WeightStore w = testing::random_weights(m, rng);
  const std::string bytes = serialize_weights(w, m);
  const WeightStore back = load_weights(bytes, m);
  CHECK(back == w);
  CHECK(serialize_weights(back, m) == bytes);
}

TEST_CASE("dataset parsing") {
  SUBCASE("empty dataset") {
    LabeledDataset d{{4, 4, 1}, 3, {}, {}};
    const LabeledDataset back = load_dataset(serialize_dataset(d));
    CHECK(back.empty());
    CHECK(back.image_shape == Shape{4, 4, 1});
  }
  SUBCASE("two 4x4x1 samples") {
    std::string bytes = "SCMD";
    for (std::uint32_t v : {1u, 2u, 4u, 4u, 1u, 2u}) put_u32(bytes, v);
    for (int i = 0; i < 32; ++i) {
      const float f = static_cast<float>(i) * 0.5f;
      char raw[4];
      std::memcpy(raw, &f, 4);
      bytes.append(raw, 4);
    }
    bytes += std::string("\x00\x00\x01\x00", 4);
    const LabeledDataset d = load_dataset(bytes);
    CHECK(d.size() == 2);
    CHECK(d.labels == std::vector<std::uint16_t>{0, 1});
    CHECK(d.images[1].at(0, 0, 0) == 8.0f);
    CHECK(serialize_dataset(d) == bytes);

    std::string bad_label = bytes;
    bad_label[bad_label.size() - 2] = 7;
    CHECK_THROWS_WITH_AS(load_dataset(bad_label), doctest::Contains("sample 1"), ValidationError);
    CHECK_THROWS_AS(load_dataset(bytes.substr(0, bytes.size() - 3)), FormatError);
    CHECK_THROWS_AS(load_dataset(bytes + "zz"), FormatError);
  }
}

TEST_CASE("dataset round-trip bitwise") {
  const auto fx = testing::chain_fixture(5, 17);
  const std::string bytes = serialize_dataset(fx.data);
  const LabeledDataset back = load_dataset(bytes);
  CHECK(back == fx.data);
  CHECK(serialize_dataset(back) == bytes);
}

TEST_CASE("missing files raise IoError naming the path") {
  CHECK_THROWS_WITH_AS(load_model_file("/nonexistent/model.json"), doctest::Contains("/nonexistent/model.json"),
                       IoError);
  CHECK_THROWS_WITH_AS(load_dataset_file("/nonexistent/data.bin"), doctest::Contains("/nonexistent/data.bin"),
                       IoError);
}
