#include "lrsconflate/quality.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <tuple>
#include <utility>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "text_util.h"

namespace lrsconflate {
namespace {

double Percent(double part, double whole) {
  return whole > 0.0 ? 100.0 * part / whole : 0.0;
}

void WriteSection(std::ostream& out, const std::string& title,
                  const std::string& mileage_note, const QualitySummary& s) {
  out << title << '\n';
  out << fmt::format("  {:<26}: {} of {} ({:.2f}%)\n", "Total edges matched",
                     s.edges_matched, s.total_edges, s.edges_matched_pct);
  out << fmt::format("  {:<26}: {:.2f} of {:.2f} mi ({:.2f}%) [{}]\n",
                     "Total mileage matched", s.miles_matched, s.total_miles,
                     s.miles_matched_pct, mileage_note);
  out << fmt::format("  {:<26}: {} ({:.2f}%)\n", "Edges < 12 m x_bar",
                     s.edges_below_12m, s.edges_below_12m_pct);
  for (const auto& [rank, value] : s.percentiles) {
    out << fmt::format("  {:<26}: {:.1f} m\n",
                       fmt::format("{}th percentile x_bar", rank), value);
  }
}

nlohmann::ordered_json SummaryJson(const QualitySummary& s) {
  nlohmann::ordered_json j;
  j["total_edges"] = s.total_edges;
  j["edges_matched"] = s.edges_matched;
  j["edges_matched_pct"] = s.edges_matched_pct;
  j["total_miles"] = s.total_miles;
  j["miles_matched"] = s.miles_matched;
  j["miles_matched_pct"] = s.miles_matched_pct;
  j["edges_below_12m"] = s.edges_below_12m;
  j["edges_below_12m_pct"] = s.edges_below_12m_pct;
  nlohmann::ordered_json p = nlohmann::ordered_json::object();
  for (const auto& [rank, value] : s.percentiles) {
    p["p" + std::to_string(rank)] = value;
  }
  j["x_bar_percentiles_m"] = p;
  return j;
}

}  // namespace

std::vector<EdgeInfo> CatalogEdges(std::span<const Route> routes) {
  std::vector<EdgeInfo> out;
  for (const auto& route : routes) {
    for (const auto& edge : route.edges) {
      EdgeInfo info;
      info.route_name = route.route_name;
      info.edge_rte_key = edge.edge_rte_key;
      info.master_route_name = edge.master_route_name;
      info.route_category = edge.route_category;
      info.edge_sequence = edge.edge_sequence;
      auto [lo, hi] = std::minmax_element(
          edge.geometry.begin(), edge.geometry.end(),
          [](const MeasuredPoint& a, const MeasuredPoint& b) {
            return a.m < b.m;
          });
      info.miles = hi->m - lo->m;
      out.push_back(std::move(info));
    }
  }
  return out;
}

std::vector<EdgeQuality> ComputeEdgeQuality(
    std::span<const RouteMatchResult> results,
    std::span<const EdgeInfo> catalog) {
  std::map<std::pair<std::string_view, std::string_view>, const EdgeInfo*>
      info_of;
  for (const auto& info : catalog) {
    info_of[{info.route_name, info.edge_rte_key}] = &info;
  }
  std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>>
      sums;
  for (const auto& result : results) {
    for (const auto& row : result.rows) {
      if (!row.matched()) continue;
      auto& [sum, count] = sums[{result.route_name, row.edge_rte_key}];
      sum += row.match.snap_dist_m;
      ++count;
    }
  }
  std::vector<EdgeQuality> out;
  out.reserve(sums.size());
  for (const auto& [key, acc] : sums) {
    EdgeQuality q;
    q.route_name = key.first;
    q.edge_rte_key = key.second;
    q.x_bar = acc.first / static_cast<double>(acc.second);
    q.point_count = acc.second;
    if (auto it = info_of.find({key.first, key.second}); it != info_of.end()) {
      q.master_route_name = it->second->master_route_name;
      q.route_category = it->second->route_category;
      q.miles = it->second->miles;
    }
    out.push_back(std::move(q));
  }
  return out;
}

double NearestRankPercentile(std::span<const double> sorted_values,
                             double percentile) {
  if (sorted_values.empty()) return 0.0;
  const double n = static_cast<double>(sorted_values.size());
  // Multiplying first keeps p * n / 100 exact for integer percentiles.
  auto rank = static_cast<std::size_t>(std::ceil(percentile * n / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, sorted_values.size());
  return sorted_values[rank - 1];
}

QualitySummary Summarize(std::span<const EdgeQuality> qualities,
                         std::size_t total_edges, double total_miles,
                         bool master_only) {
  QualitySummary s;
  s.total_edges = total_edges;
  s.total_miles = total_miles;
  std::vector<double> x_bars;
  for (const auto& q : qualities) {
    if (master_only && !q.is_master()) continue;
    ++s.edges_matched;
    s.miles_matched += q.miles;
    if (q.x_bar < kReviewThresholdMeters) ++s.edges_below_12m;
    x_bars.push_back(q.x_bar);
  }
  std::sort(x_bars.begin(), x_bars.end());
  s.edges_matched_pct =
      Percent(static_cast<double>(s.edges_matched), static_cast<double>(total_edges));
  s.miles_matched_pct = Percent(s.miles_matched, total_miles);
  s.edges_below_12m_pct = Percent(static_cast<double>(s.edges_below_12m),
                                  static_cast<double>(total_edges));
  for (int rank : kReportPercentiles) {
    s.percentiles[rank] = NearestRankPercentile(x_bars, rank);
  }
  return s;
}

ReportTotals TotalsFromCatalog(std::span<const EdgeInfo> catalog) {
  ReportTotals t;
  for (const auto& e : catalog) {
    ++t.total_edges;
    t.total_miles += e.miles;
    if (e.is_master()) {
      ++t.master_edges;
      t.master_miles += e.miles;
    }
  }
  return t;
}

QualityReport BuildQualityReport(std::span<const EdgeQuality> qualities,
                                 const ReportTotals& totals) {
  return {Summarize(qualities, totals.total_edges, totals.total_miles, false),
          Summarize(qualities, totals.master_edges, totals.master_miles, true)};
}

void WriteQualityReportText(std::ostream& out, const QualityReport& report) {
  out << "Conflation quality report\n";
  out << "format_version: 1\n\n";
  WriteSection(out, "All edges", "overlap mileage, collinear routes counted per route",
               report.all_edges);
  out << '\n';
  WriteSection(out, "Master route edges only", "master-route mileage",
               report.master_edges);
}

std::string QualityReportJson(const QualityReport& report) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["all_edges"] = SummaryJson(report.all_edges);
  j["all_edges"]["mileage_basis"] = "overlap";
  j["master_route_edges"] = SummaryJson(report.master_edges);
  j["master_route_edges"]["mileage_basis"] = "master";
  return j.dump(2) + "\n";
}

std::vector<XBarBand> DefaultBands() {
  return {{0.0, 6.0, "0-6"}, {6.0, 12.0, "6-12"}, {12.0, std::nullopt, "12+"}};
}

std::vector<BandSample> SampleBands(std::span<const EdgeQuality> qualities,
                                    std::span<const XBarBand> bands,
                                    std::size_t per_band, std::uint64_t seed) {
  std::vector<BandSample> out;
  std::mt19937_64 rng(seed);
  for (const auto& band : bands) {
    std::vector<const EdgeQuality*> members;
    for (const auto& q : qualities) {
      if (band.Contains(q.x_bar)) members.push_back(&q);
    }
    std::sort(members.begin(), members.end(),
              [](const EdgeQuality* a, const EdgeQuality* b) {
                return std::tie(a->route_name, a->edge_rte_key) <
                       std::tie(b->route_name, b->edge_rte_key);
              });
    // Partial Fisher-Yates on raw engine output; std distributions are not
    // portable across standard libraries.
    const std::size_t take = std::min(per_band, members.size());
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (members.size() - i));
      std::swap(members[i], members[j]);
    }
    BandSample sample{band, {}};
    for (std::size_t i = 0; i < take; ++i) sample.edges.push_back(*members[i]);
    out.push_back(std::move(sample));
  }
  return out;
}

std::map<std::string, std::vector<std::size_t>> CategoryDistributions(
    std::span<const EdgeQuality> qualities) {
  std::map<std::string, std::vector<std::size_t>> out;
  for (const auto& q : qualities) {
    auto& bins = out[q.route_category];
    if (bins.empty()) bins.assign(kHistogramBins + 1, 0);
    const auto bin = q.x_bar >= kHistogramBins
                         ? static_cast<std::size_t>(kHistogramBins)
                         : static_cast<std::size_t>(std::floor(q.x_bar));
    ++bins[bin];
  }
  return out;
}

void WriteCategoryHistogramCsv(
    std::ostream& out,
    const std::map<std::string, std::vector<std::size_t>>& histograms) {
  out << "route_category,bin_lower_m,bin_upper_m,edge_count\n";
  for (const auto& [category, bins] : histograms) {
    for (int b = 0; b < kHistogramBins; ++b) {
      out << CsvEscape(category) << ',' << b << ',' << b + 1 << ','
          << bins[b] << '\n';
    }
    out << CsvEscape(category) << ',' << kHistogramBins << ",inf,"
        << bins[kHistogramBins] << '\n';
  }
}

}  // namespace lrsconflate
