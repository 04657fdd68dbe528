#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "scmlens/dataset.hpp"
#include "scmlens/forward.hpp"
#include "scmlens/report.hpp"

namespace scmlens {

/// True-ablation ground truth: real-model accuracy with each filter of a
/// recorded conv layer zeroed in turn (no retraining).
RankedFilters oracle_rank(const Network& net, const LabeledDataset& dataset, std::string_view layer);

/// Ranks 1..n (1 = largest value), averaging tied positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman correlation with average-rank ties. Returns 0 when either side
/// is constant (correlation undefined).
double spearman(std::span<const double> a, std::span<const double> b);

/// Compares importance by accuracy drop; rho is computed on the deltas.
RankComparison compare_rankings(const RankedFilters& scm, const RankedFilters& oracle);

}  // namespace scmlens
