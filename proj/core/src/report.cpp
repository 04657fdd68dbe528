#include "scmlens/report.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "scmlens/error.hpp"

namespace scmlens {

std::vector<std::size_t> RankedFilters::by_rank() const {
  std::vector<std::size_t> order(rank.size());
  for (std::size_t f = 0; f < rank.size(); ++f) order.at(rank[f] - 1) = f;
  return order;
}

void finalize_ranking(RankedFilters& ranked) {
  const std::size_t k = ranked.accuracy.size();
  ranked.delta.resize(k);
  for (std::size_t f = 0; f < k; ++f) ranked.delta[f] = ranked.baseline_accuracy - ranked.accuracy[f];
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ranked.delta[a] > ranked.delta[b]; });
  ranked.rank.assign(k, 0);
  for (std::size_t pos = 0; pos < k; ++pos) ranked.rank[order[pos]] = pos + 1;
}

namespace {

nlohmann::json ranked_json(const RankedFilters& r) {
  nlohmann::json j;
  j["layer"] = r.layer;
  j["baseline_accuracy"] = r.baseline_accuracy;
  nlohmann::json filters = nlohmann::json::array();
  for (std::size_t f = 0; f < r.size(); ++f) {
    filters.push_back({{"filter", f}, {"accuracy", r.accuracy[f]}, {"delta", r.delta[f]}, {"rank", r.rank[f]}});
  }
  j["filters"] = std::move(filters);
  return j;
}

std::string number(double v) {
  std::ostringstream out;
  out.precision(9);
  out << v;
  return out.str();
}

}  // namespace

std::string report_to_json(const ImportanceReport& report) {
  nlohmann::json doc;
  doc["layer"] = report.scm.layer;
  doc["scm"] = ranked_json(report.scm);
  if (report.oracle) doc["oracle"] = ranked_json(*report.oracle);
  if (report.comparison) {
    const auto& c = *report.comparison;
    doc["comparison"] = {{"spearman_rho", c.spearman_rho},
                         {"top1_overlap", c.top1_overlap},
                         {"top3_overlap", c.top3_overlap},
                         {"top5_overlap", c.top5_overlap}};
  }
  return doc.dump(2) + "\n";
}

std::string report_to_csv(const ImportanceReport& report) {
  std::string out = std::string(kReportCsvHeader) + "\n";
  for (std::size_t f = 0; f < report.scm.size(); ++f) {
    out += report.scm.layer + "," + std::to_string(f) + "," + number(report.scm.delta[f]) + ",";
    if (report.oracle) out += number(report.oracle->delta.at(f));
    out += "," + std::to_string(report.scm.rank[f]) + ",";
    if (report.oracle) out += std::to_string(report.oracle->rank.at(f));
    out += "\n";
  }
  return out;
}

}  // namespace scmlens
