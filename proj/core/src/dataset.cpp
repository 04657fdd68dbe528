#include "scmlens/dataset.hpp"

#include "binary_io.hpp"
#include "scmlens/error.hpp"

namespace scmlens {

namespace {
constexpr std::string_view kMagic = "SCMD";
constexpr std::uint32_t kVersion = 1;
}  // namespace

void LabeledDataset::validate() const {
  if (image_shape.size() != 3) throw ValidationError("dataset image shape must be H x W x C");
  if (images.size() != labels.size()) {
    throw ValidationError("dataset has " + std::to_string(images.size()) + " images but " +
                          std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].shape() != image_shape) {
      throw ValidationError("sample " + std::to_string(i) + " has shape " + to_string(images[i].shape()) +
                            ", dataset declares " + to_string(image_shape));
    }
    if (labels[i] >= num_classes) {
      throw ValidationError("sample " + std::to_string(i) + " has label " + std::to_string(labels[i]) +
                            " >= num_classes " + std::to_string(num_classes));
    }
  }
}

LabeledDataset load_dataset(std::string_view bytes) {
  detail::ByteReader in(bytes, "dataset");
  in.expect_magic(kMagic);
  in.expect_version(kVersion);
  const std::size_t n = in.u32();
  LabeledDataset ds;
  const std::size_t h = in.u32(), w = in.u32(), c = in.u32();
  ds.num_classes = in.u32();
  ds.image_shape = {h, w, c};
  const std::size_t pixels = h * w * c;
  if (pixels == 0) in.fail("image dimensions must be positive");
  const std::size_t needed = n * pixels * 4 + n * 2;
  if (in.remaining() != needed) {
    throw FormatError("dataset: header declares " + std::to_string(n) + " samples of " + to_string(ds.image_shape) +
                      " needing " + std::to_string(needed) + " payload bytes, file has " +
                      std::to_string(in.remaining()));
  }
  ds.images.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> data(pixels);
    for (float& v : data) v = in.f32();
    ds.images.emplace_back(ds.image_shape, std::move(data));
  }
  ds.labels.resize(n);
  for (auto& label : ds.labels) label = in.u16();
  in.expect_end();
  ds.validate();
  return ds;
}

std::string serialize_dataset(const LabeledDataset& dataset) {
  dataset.validate();
  detail::ByteWriter out;
  out.put_bytes(kMagic);
  out.put_u32(kVersion);
  out.put_u32(static_cast<std::uint32_t>(dataset.size()));
  for (auto d : dataset.image_shape) out.put_u32(static_cast<std::uint32_t>(d));
  out.put_u32(static_cast<std::uint32_t>(dataset.num_classes));
  for (const auto& img : dataset.images) {
    for (float v : img.data()) out.put_f32(v);
  }
  for (auto label : dataset.labels) out.put_u16(label);
  return out.take();
}

LabeledDataset load_dataset_file(const std::string& path) {
  const std::string bytes = detail::read_file(path);
  try {
    return load_dataset(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void save_dataset_file(const LabeledDataset& dataset, const std::string& path) {
  detail::write_file(path, serialize_dataset(dataset));
}

}  // namespace scmlens
