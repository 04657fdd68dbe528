#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scmlens/model.hpp"
#include "scmlens/transforms.hpp"

namespace scmlens {

struct TableLayer {
  std::string id;
  bool is_conv = false;
  std::size_t width = 0;   // node count
  std::size_t offset = 0;  // first column
  friend bool operator==(const TableLayer&, const TableLayer&) = default;
};

/// Provenance of one row. Observational rows have intervened_layer == -1;
/// interventional rows list the filters zeroed in that (conv) layer.
struct RowInfo {
  std::uint32_t sample = 0;
  std::int32_t intervened_layer = -1;
  std::vector<std::uint32_t> masked;

  bool observational() const noexcept { return intervened_layer < 0; }
  friend bool operator==(const RowInfo&, const RowInfo&) = default;
};

/// Scalar node values per (sample, augmentation pass). Columns are the
/// recorded layers' nodes, layer blocks in execution order.
class ResponseTable {
 public:
  ResponseTable() = default;
  explicit ResponseTable(const ModelSpec& model);
  explicit ResponseTable(std::vector<TableLayer> layers);

  const std::vector<TableLayer>& layers() const noexcept { return layers_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t rows() const noexcept { return info_.size(); }
  const RowInfo& info(std::size_t row) const { return info_.at(row); }

  std::span<const float> row(std::size_t r) const { return {values_.data() + r * width_, width_}; }
  std::span<float> row(std::size_t r) { return {values_.data() + r * width_, width_}; }
  float value(std::size_t r, std::size_t column) const { return values_[r * width_ + column]; }

  std::size_t layer_index(std::string_view id) const;
  std::size_t column(std::string_view layer, std::size_t filter) const;
  /// True when the row's intervention zeroed this column's filter.
  bool is_masked(std::size_t row, std::size_t column) const;

  /// Appends zero-initialised rows and returns the index of the first.
  std::size_t append_rows(std::span<const RowInfo> infos);
  void set_info(std::size_t row, RowInfo info) { info_.at(row) = std::move(info); }

  friend bool operator==(const ResponseTable&, const ResponseTable&) = default;

 private:
  std::vector<TableLayer> layers_;
  std::size_t width_ = 0;
  std::vector<RowInfo> info_;
  std::vector<float> values_;
};

/// Norm statistics from the observational rows of a Frobenius table.
FilterStats compute_stats(const ResponseTable& table);

/// Copy with conv columns mapped through the binary transform.
ResponseTable apply_binary(const ResponseTable& table, const FilterStats& stats);

// Response cache ("SCMR"): header, layer table, then per row its provenance
// and its Frobenius node values as little-endian 32-bit reals.
std::string serialize_response_cache(const ResponseTable& table);
ResponseTable load_response_cache(std::string_view bytes);
void save_response_cache_file(const ResponseTable& table, const std::string& path);
ResponseTable load_response_cache_file(const std::string& path);

}  // namespace scmlens
