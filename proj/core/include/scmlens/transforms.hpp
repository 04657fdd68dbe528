#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scmlens/forward.hpp"
#include "scmlens/model.hpp"
#include "scmlens/tensor.hpp"

namespace scmlens {

enum class TransformKind : std::uint8_t { Frobenius = 0, Binary = 1 };

std::string_view to_string(TransformKind kind);
TransformKind parse_transform(std::string_view text);

/// Mean and population standard deviation of one filter's Frobenius norm.
struct FilterStat {
  float mu = 0.0f;
  float sigma = 0.0f;
  friend bool operator==(const FilterStat&, const FilterStat&) = default;
};

class FilterStats {
 public:
  void set(const std::string& layer, std::vector<FilterStat> stats) { layers_[layer] = std::move(stats); }
  const FilterStat& at(std::string_view layer, std::size_t filter) const;
  const std::vector<FilterStat>& layer(std::string_view layer) const;
  bool has(std::string_view layer) const { return layers_.find(layer) != layers_.end(); }
  const std::map<std::string, std::vector<FilterStat>, std::less<>>& layers() const noexcept { return layers_; }

  friend bool operator==(const FilterStats&, const FilterStats&) = default;

 private:
  std::map<std::string, std::vector<FilterStat>, std::less<>> layers_;
};

double frobenius(std::span<const float> values);
inline double frobenius(const Tensor& m) { return frobenius(m.data()); }

/// Frobenius norm of every channel of an H x W x C response.
std::vector<float> channel_norms(const Tensor& response);

/// 1 when the norm lies below mu + sigma, else 0.
float binary_from_norm(double norm, const FilterStat& stat);
inline float binary(const Tensor& m, const FilterStat& stat) { return binary_from_norm(frobenius(m), stat); }

/// Scalar node values of one recorded layer: per-filter norms for conv
/// layers, the unit values themselves for dense layers.
std::vector<float> node_values(const RecordedLayer& layer, const Tensor& response);

/// Streaming per-filter norm statistics over observational traces.
class FilterStatsAccumulator {
 public:
  explicit FilterStatsAccumulator(const ModelSpec& model);

  /// Interventional traces are ignored.
  void add(const ForwardTrace& trace);
  /// Adds one observational sample given as per-recorded-layer node values.
  void add_norms(std::span<const std::vector<float>> layer_norms);

  std::size_t samples() const noexcept { return count_; }
  /// Throws ValidationError with fewer than two observational samples.
  FilterStats finish() const;

 private:
  const ModelSpec* model_;
  std::size_t count_ = 0;
  std::vector<std::vector<double>> mean_;
  std::vector<std::vector<double>> m2_;
};

FilterStats compute_stats(const ModelSpec& model, std::span<const ForwardTrace> traces);

}  // namespace scmlens
