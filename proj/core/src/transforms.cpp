#include "scmlens/transforms.hpp"

#include <cmath>

#include "scmlens/error.hpp"

namespace scmlens {

std::string_view to_string(TransformKind kind) {
  return kind == TransformKind::Binary ? "binary" : "frobenius";
}

TransformKind parse_transform(std::string_view text) {
  if (text == "frobenius") return TransformKind::Frobenius;
  if (text == "binary") return TransformKind::Binary;
  throw ValidationError("unknown transform '" + std::string(text) + "' (expected frobenius or binary)");
}

const std::vector<FilterStat>& FilterStats::layer(std::string_view layer) const {
  auto it = layers_.find(layer);
  if (it == layers_.end()) throw ValidationError("no filter statistics for layer '" + std::string(layer) + "'");
  return it->second;
}

const FilterStat& FilterStats::at(std::string_view layer, std::size_t filter) const {
  const auto& stats = this->layer(layer);
  if (filter >= stats.size()) {
    throw ValidationError("no filter statistics for " + std::string(layer) + ":" + std::to_string(filter));
  }
  return stats[filter];
}

double frobenius(std::span<const float> values) {
  double sum = 0.0;
  for (float v : values) sum += static_cast<double>(v) * v;
  return std::sqrt(sum);
}

std::vector<float> channel_norms(const Tensor& response) {
  if (response.rank() != 3) {
    throw ValidationError("filter norms need an H x W x C response, got " + to_string(response.shape()));
  }
  const std::size_t channels = response.dim(2);
  std::vector<double> sums(channels, 0.0);
  auto data = response.data();
  for (std::size_t k = 0; k < data.size(); ++k) {
    const double v = data[k];
    sums[k % channels] += v * v;
  }
  std::vector<float> out(channels);
  for (std::size_t c = 0; c < channels; ++c) out[c] = static_cast<float>(std::sqrt(sums[c]));
  return out;
}

float binary_from_norm(double norm, const FilterStat& stat) {
  return norm < static_cast<double>(stat.mu) + static_cast<double>(stat.sigma) ? 1.0f : 0.0f;
}

std::vector<float> node_values(const RecordedLayer& layer, const Tensor& response) {
  if (layer.is_conv) return channel_norms(response);
  return response.values();
}

FilterStatsAccumulator::FilterStatsAccumulator(const ModelSpec& model) : model_(&model) {
  for (const auto& rec : model.topology.recorded) {
    const std::size_t n = rec.is_conv ? rec.node_count : 0;
    mean_.emplace_back(n, 0.0);
    m2_.emplace_back(n, 0.0);
  }
}

void FilterStatsAccumulator::add(const ForwardTrace& trace) {
  if (trace.interventional) return;
  const auto& recorded = model_->topology.recorded;
  std::vector<std::vector<float>> norms(recorded.size());
  for (std::size_t r = 0; r < recorded.size(); ++r) {
    if (recorded[r].is_conv) norms[r] = channel_norms(trace.responses.at(r));
  }
  add_norms(norms);
}

void FilterStatsAccumulator::add_norms(std::span<const std::vector<float>> layer_norms) {
  ++count_;
  const double n = static_cast<double>(count_);
  for (std::size_t r = 0; r < mean_.size(); ++r) {
    for (std::size_t f = 0; f < mean_[r].size(); ++f) {
      const double x = layer_norms[r].at(f);
      const double delta = x - mean_[r][f];
      mean_[r][f] += delta / n;
      m2_[r][f] += delta * (x - mean_[r][f]);
    }
  }
}

FilterStats FilterStatsAccumulator::finish() const {
  if (count_ < 2) {
    throw ValidationError("filter statistics need at least 2 observational samples, got " + std::to_string(count_));
  }
  FilterStats stats;
  const auto& recorded = model_->topology.recorded;
  for (std::size_t r = 0; r < recorded.size(); ++r) {
    if (!recorded[r].is_conv) continue;
    std::vector<FilterStat> layer(mean_[r].size());
    for (std::size_t f = 0; f < layer.size(); ++f) {
      layer[f].mu = static_cast<float>(mean_[r][f]);
      layer[f].sigma = static_cast<float>(std::sqrt(std::max(0.0, m2_[r][f] / static_cast<double>(count_))));
    }
    stats.set(recorded[r].id, std::move(layer));
  }
  return stats;
}

FilterStats compute_stats(const ModelSpec& model, std::span<const ForwardTrace> traces) {
  FilterStatsAccumulator acc(model);
  for (const auto& trace : traces) acc.add(trace);
  return acc.finish();
}

}  // namespace scmlens
