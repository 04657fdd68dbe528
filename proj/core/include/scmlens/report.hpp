#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace scmlens {

/// Per-filter accuracy under do(filter = 0) for one conv layer. Rank 1 is the
/// filter whose removal costs the most accuracy; ties go to the lower index.
struct RankedFilters {
  std::string layer;
  double baseline_accuracy = 0.0;
  std::vector<double> accuracy;
  std::vector<double> delta;  // baseline - accuracy
  std::vector<std::size_t> rank;

  std::size_t size() const noexcept { return accuracy.size(); }
  /// Filter indices ordered by rank.
  std::vector<std::size_t> by_rank() const;
};

struct RankComparison {
  double spearman_rho = 0.0;
  double top1_overlap = 0.0;
  double top3_overlap = 0.0;
  double top5_overlap = 0.0;
  /// (scm delta, oracle delta) per filter.
  std::vector<std::pair<double, double>> paired_deltas;
};

struct ImportanceReport {
  RankedFilters scm;
  std::optional<RankedFilters> oracle;
  std::optional<RankComparison> comparison;
};

/// Fills accuracy-derived deltas and ranks from `accuracy` and `baseline_accuracy`.
void finalize_ranking(RankedFilters& ranked);

inline constexpr const char* kReportCsvHeader = "layer,filter,scm_delta,oracle_delta,scm_rank,oracle_rank";

std::string report_to_json(const ImportanceReport& report);
std::string report_to_csv(const ImportanceReport& report);

}  // namespace scmlens
