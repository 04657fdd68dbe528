#include "scmlens/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "scmlens/error.hpp"

namespace scmlens {

RankedFilters oracle_rank(const Network& net, const LabeledDataset& dataset, std::string_view layer) {
  const auto& rec = net.spec().recorded(layer);
  if (!rec.is_conv) throw ValidationError("oracle ranking needs a recorded conv layer, '" + rec.id + "' is dense");
  RankedFilters ranked;
  ranked.layer = rec.id;
  ranked.baseline_accuracy = model_accuracy(net, dataset);
  ranked.accuracy.resize(rec.node_count);
  for (std::size_t f = 0; f < rec.node_count; ++f) {
    AblationMask mask;
    mask.add(rec.id, f);
    ranked.accuracy[f] = model_accuracy(net, dataset, mask);
  }
  finalize_ranking(ranked);
  return ranked;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("spearman: sequences differ in length");
  const std::size_t n = a.size();
  if (n < 2) return 0.0;
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double mean = 0.5 * static_cast<double>(n + 1);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (ra[i] - mean) * (rb[i] - mean);
    saa += (ra[i] - mean) * (ra[i] - mean);
    sbb += (rb[i] - mean) * (rb[i] - mean);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

RankComparison compare_rankings(const RankedFilters& scm, const RankedFilters& oracle) {
  if (scm.layer != oracle.layer) {
    throw ValidationError("cannot compare rankings of different layers '" + scm.layer + "' and '" + oracle.layer + "'");
  }
  if (scm.size() != oracle.size() || scm.delta.size() != scm.size() || oracle.delta.size() != oracle.size()) {
    throw ValidationError("cannot compare rankings with different filter counts");
  }
  RankComparison out;
  out.spearman_rho = spearman(scm.delta, oracle.delta);
  const auto a = scm.by_rank();
  const auto b = oracle.by_rank();
  auto overlap = [&](std::size_t k) {
    k = std::min(k, a.size());
    if (k == 0) return 0.0;
    std::set<std::size_t> top(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(k));
    std::size_t shared = 0;
    for (std::size_t i = 0; i < k; ++i) shared += top.count(b[i]);
    return static_cast<double>(shared) / static_cast<double>(k);
  };
  out.top1_overlap = overlap(1);
  out.top3_overlap = overlap(3);
  out.top5_overlap = overlap(5);
  for (std::size_t f = 0; f < scm.size(); ++f) out.paired_deltas.emplace_back(scm.delta[f], oracle.delta[f]);
  return out;
}

}  // namespace scmlens
