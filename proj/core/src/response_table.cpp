#include "scmlens/response_table.hpp"

#include <algorithm>
#include <cmath>

#include "binary_io.hpp"
#include "scmlens/error.hpp"

namespace scmlens {

namespace {
constexpr std::string_view kMagic = "SCMR";
constexpr std::uint32_t kVersion = 1;
}  // namespace

ResponseTable::ResponseTable(const ModelSpec& model) {
  for (const auto& rec : model.topology.recorded) {
    layers_.push_back({rec.id, rec.is_conv, rec.node_count, width_});
    width_ += rec.node_count;
  }
}

ResponseTable::ResponseTable(std::vector<TableLayer> layers) : layers_(std::move(layers)) {
  for (auto& layer : layers_) {
    layer.offset = width_;
    width_ += layer.width;
  }
}

std::size_t ResponseTable::layer_index(std::string_view id) const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].id == id) return l;
  }
  throw ValidationError("response table has no layer '" + std::string(id) + "'");
}

std::size_t ResponseTable::column(std::string_view layer, std::size_t filter) const {
  const auto& l = layers_[layer_index(layer)];
  if (filter >= l.width) {
    throw ValidationError("response table layer '" + l.id + "' has no node " + std::to_string(filter));
  }
  return l.offset + filter;
}

bool ResponseTable::is_masked(std::size_t row, std::size_t column) const {
  const RowInfo& ri = info_.at(row);
  if (ri.observational()) return false;
  const auto& l = layers_.at(static_cast<std::size_t>(ri.intervened_layer));
  if (column < l.offset || column >= l.offset + l.width) return false;
  const auto filter = static_cast<std::uint32_t>(column - l.offset);
  return std::find(ri.masked.begin(), ri.masked.end(), filter) != ri.masked.end();
}

std::size_t ResponseTable::append_rows(std::span<const RowInfo> infos) {
  const std::size_t first = info_.size();
  info_.insert(info_.end(), infos.begin(), infos.end());
  values_.resize(info_.size() * width_, 0.0f);
  return first;
}

FilterStats compute_stats(const ResponseTable& table) {
  std::size_t count = 0;
  for (std::size_t r = 0; r < table.rows(); ++r) count += table.info(r).observational() ? 1 : 0;
  if (count < 2) {
    throw ValidationError("filter statistics need at least 2 observational samples, got " + std::to_string(count));
  }
  FilterStats stats;
  for (const auto& layer : table.layers()) {
    if (!layer.is_conv) continue;
    std::vector<FilterStat> out(layer.width);
    for (std::size_t f = 0; f < layer.width; ++f) {
      const std::size_t col = layer.offset + f;
      double mean = 0.0, m2 = 0.0;
      std::size_t n = 0;
      for (std::size_t r = 0; r < table.rows(); ++r) {
        if (!table.info(r).observational()) continue;
        const double x = table.value(r, col);
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
      }
      out[f].mu = static_cast<float>(mean);
      out[f].sigma = static_cast<float>(std::sqrt(std::max(0.0, m2 / static_cast<double>(n))));
    }
    stats.set(layer.id, std::move(out));
  }
  return stats;
}

ResponseTable apply_binary(const ResponseTable& table, const FilterStats& stats) {
  ResponseTable out = table;
  for (const auto& layer : table.layers()) {
    if (!layer.is_conv) continue;
    const auto& layer_stats = stats.layer(layer.id);
    if (layer_stats.size() != layer.width) {
      throw ValidationError("filter statistics for layer '" + layer.id + "' cover " +
                            std::to_string(layer_stats.size()) + " filters, table has " + std::to_string(layer.width));
    }
    for (std::size_t r = 0; r < out.rows(); ++r) {
      auto row = out.row(r);
      for (std::size_t f = 0; f < layer.width; ++f) {
        row[layer.offset + f] = binary_from_norm(row[layer.offset + f], layer_stats[f]);
      }
    }
  }
  return out;
}

std::string serialize_response_cache(const ResponseTable& table) {
  detail::ByteWriter out;
  out.put_bytes(kMagic);
  out.put_u32(kVersion);
  out.put_u32(static_cast<std::uint32_t>(table.rows()));
  out.put_u32(static_cast<std::uint32_t>(table.layers().size()));
  for (const auto& layer : table.layers()) {
    out.put_string(layer.id);
    out.put_u8(layer.is_conv ? 1 : 0);
    out.put_u32(static_cast<std::uint32_t>(layer.width));
  }
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const RowInfo& info = table.info(r);
    out.put_u32(info.sample);
    out.put_i32(info.intervened_layer);
    out.put_u32(static_cast<std::uint32_t>(info.masked.size()));
    for (auto f : info.masked) out.put_u32(f);
    for (float v : table.row(r)) out.put_f32(v);
  }
  return out.take();
}

ResponseTable load_response_cache(std::string_view bytes) {
  detail::ByteReader in(bytes, "response cache");
  in.expect_magic(kMagic);
  in.expect_version(kVersion);
  const std::size_t rows = in.u32();
  const std::size_t n_layers = in.u32();
  std::vector<TableLayer> layers;
  for (std::size_t l = 0; l < n_layers; ++l) {
    TableLayer layer;
    layer.id = in.string();
    layer.is_conv = in.u8() != 0;
    layer.width = in.u32();
    layers.push_back(std::move(layer));
  }
  ResponseTable table(std::move(layers));
  for (std::size_t r = 0; r < rows; ++r) {
    RowInfo info;
    info.sample = in.u32();
    info.intervened_layer = in.i32();
    if (info.intervened_layer >= static_cast<std::int32_t>(n_layers)) in.fail("row references unknown layer");
    const std::size_t masked = in.u32();
    in.require(masked * 4);
    for (std::size_t k = 0; k < masked; ++k) info.masked.push_back(in.u32());
    const std::size_t at = table.append_rows(std::span<const RowInfo>(&info, 1));
    for (float& v : table.row(at)) v = in.f32();
  }
  in.expect_end();
  return table;
}

void save_response_cache_file(const ResponseTable& table, const std::string& path) {
  detail::write_file(path, serialize_response_cache(table));
}

ResponseTable load_response_cache_file(const std::string& path) {
  const std::string bytes = detail::read_file(path);
  try {
    return load_response_cache(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace scmlens
