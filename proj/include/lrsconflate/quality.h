#ifndef LRSCONFLATE_QUALITY_H_
#define LRSCONFLATE_QUALITY_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lrsconflate/pipeline.h"

namespace lrsconflate {

// Ingest-side facts about one LRS edge of one route.
struct EdgeInfo {
  std::string route_name;
  std::string edge_rte_key;
  std::string master_route_name;
  std::string route_category;
  std::int64_t edge_sequence = 0;
  double miles = 0.0;  // measure span of the edge

  bool is_master() const { return route_name == master_route_name; }
};

std::vector<EdgeInfo> CatalogEdges(std::span<const Route> routes);

struct EdgeQuality {
  std::string edge_rte_key;
  std::string route_name;
  std::string master_route_name;
  std::string route_category;
  double x_bar = 0.0;  // mean snap distance of matched rows, meters
  std::size_t point_count = 0;
  double miles = 0.0;

  bool is_master() const { return route_name == master_route_name; }
};

// One entry per (route, edge) with at least one matched row, sorted by route
// then edge key. Metadata comes from `catalog`.
std::vector<EdgeQuality> ComputeEdgeQuality(
    std::span<const RouteMatchResult> results,
    std::span<const EdgeInfo> catalog);

inline constexpr std::array<int, 6> kReportPercentiles = {50, 75, 90,
                                                          95, 98, 99};

// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value (1-based).
// Zero for an empty sample.
double NearestRankPercentile(std::span<const double> sorted_values,
                             double percentile);

struct QualitySummary {
  std::size_t total_edges = 0;
  std::size_t edges_matched = 0;
  double edges_matched_pct = 0.0;
  double total_miles = 0.0;
  double miles_matched = 0.0;
  double miles_matched_pct = 0.0;
  std::size_t edges_below_12m = 0;
  double edges_below_12m_pct = 0.0;  // of total_edges
  std::map<int, double> percentiles;  // rank -> x_bar meters
};

inline constexpr double kReviewThresholdMeters = 12.0;

QualitySummary Summarize(std::span<const EdgeQuality> qualities,
                         std::size_t total_edges, double total_miles,
                         bool master_only);

struct ReportTotals {
  std::size_t total_edges = 0;
  double total_miles = 0.0;
  std::size_t master_edges = 0;
  double master_miles = 0.0;
};

ReportTotals TotalsFromCatalog(std::span<const EdgeInfo> catalog);

struct QualityReport {
  QualitySummary all_edges;
  QualitySummary master_edges;
};

QualityReport BuildQualityReport(std::span<const EdgeQuality> qualities,
                                 const ReportTotals& totals);

// Plain-text table with the all-edges and master-route sections.
void WriteQualityReportText(std::ostream& out, const QualityReport& report);
std::string QualityReportJson(const QualityReport& report);

struct XBarBand {
  double lower = 0.0;
  std::optional<double> upper;  // exclusive; nullopt = unbounded
  std::string label;

  bool Contains(double x) const {
    return x >= lower && (!upper || x < *upper);
  }
};

std::vector<XBarBand> DefaultBands();  // [0,6), [6,12), [12,inf)

struct BandSample {
  XBarBand band;
  std::vector<EdgeQuality> edges;
};

// Up to `per_band` edges per band, drawn with a seeded generator whose output
// does not depend on the platform's standard library.
std::vector<BandSample> SampleBands(std::span<const EdgeQuality> qualities,
                                    std::span<const XBarBand> bands,
                                    std::size_t per_band, std::uint64_t seed);

inline constexpr int kHistogramBins = 30;  // 1 m bins over [0, 30)

// Per category: kHistogramBins unit-width bins plus a trailing overflow bin.
std::map<std::string, std::vector<std::size_t>> CategoryDistributions(
    std::span<const EdgeQuality> qualities);

void WriteCategoryHistogramCsv(
    std::ostream& out,
    const std::map<std::string, std::vector<std::size_t>>& histograms);

}  // namespace lrsconflate

#endif  // LRSCONFLATE_QUALITY_H_
