#ifndef LRSCONFLATE_RESULTS_IO_H_
#define LRSCONFLATE_RESULTS_IO_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lrsconflate/conflation_key.h"
#include "lrsconflate/pipeline.h"
#include "lrsconflate/quality.h"
#include "lrsconflate/road_graph.h"
#include "lrsconflate/run_config.h"

namespace lrsconflate {

// Layout of a results directory (format version 1):
//
//   manifest.json           format version and file list
//   conflation_key.csv      the key
//   edges.csv               edge catalog (category, master route, miles)
//   lrs_edges.geojson       LRS input geometry, same schema as the input
//   osm_ways.geojson        every way referenced by a match
//   routes.json             one summary per processed route
//   routes/NNNNNN.csv       match rows of one route, in travel order
//   foldback_audit.csv      rows removed by fold-back cleanup
//   edge_quality.csv        per-edge x_bar
//   quality_report.txt/json summary tables
//   category_histograms.csv x_bar histogram per route category
//   band_samples.geojson    paired LRS/OSM geometry of sampled edges
//   run_report.json         counts, skipped routes and wall time
//   verdicts.jsonl          reviewer verdicts (appended by the service)
inline constexpr int kResultsFormatVersion = 1;

namespace results_files {
inline constexpr char kManifest[] = "manifest.json";
inline constexpr char kKey[] = "conflation_key.csv";
inline constexpr char kEdges[] = "edges.csv";
inline constexpr char kLrsEdges[] = "lrs_edges.geojson";
inline constexpr char kOsmWays[] = "osm_ways.geojson";
inline constexpr char kRoutes[] = "routes.json";
inline constexpr char kRouteRowsDir[] = "routes";
inline constexpr char kFoldbackAudit[] = "foldback_audit.csv";
inline constexpr char kEdgeQuality[] = "edge_quality.csv";
inline constexpr char kQualityText[] = "quality_report.txt";
inline constexpr char kQualityJson[] = "quality_report.json";
inline constexpr char kHistograms[] = "category_histograms.csv";
inline constexpr char kBandSamples[] = "band_samples.geojson";
inline constexpr char kRunReport[] = "run_report.json";
inline constexpr char kVerdicts[] = "verdicts.jsonl";
}  // namespace results_files

struct RouteSummary {
  std::string route_name;
  Orientation orientation = Orientation::kForward;
  RouteOutcome outcome = RouteOutcome::kFailure;
  std::string failure_reason;
  std::string route_category;
  std::size_t point_count = 0;
  std::size_t matched_count = 0;
  std::size_t batch_count = 0;
  double x_bar = 0.0;  // mean snap distance over the route's matched rows
  std::string rows_file;
};

// Writes everything except the quality artifacts, then calls
// RegenerateQuality so quality always derives from the persisted rows.
void WriteResults(const std::filesystem::path& dir,
                  std::span<const Route> routes,
                  std::span<const std::string> skipped_routes,
                  const RoadGraph& graph, const ConflationRun& run,
                  const RunConfig& config);

// Rebuilds edge_quality.csv, the quality reports, histograms and band samples
// from a results directory. Throws ConflationError(kIoError) when the
// directory is missing or incomplete.
QualityReport RegenerateQuality(const std::filesystem::path& dir,
                                std::size_t per_band, std::uint64_t seed);

std::vector<RouteSummary> ReadRouteSummaries(const std::filesystem::path& dir);
std::vector<EdgeInfo> ReadEdgeCatalog(const std::filesystem::path& dir);
std::vector<EdgeQuality> ReadEdgeQuality(const std::filesystem::path& dir);
RouteMatchResult ReadRouteRows(const std::filesystem::path& dir,
                               const RouteSummary& summary);
std::map<OsmId, OsmWay> ReadOsmWays(const std::filesystem::path& dir);

void WriteRouteRowsCsv(std::ostream& out, const RouteMatchResult& result);
RouteMatchResult ReadRouteRowsCsv(std::istream& in);

}  // namespace lrsconflate

#endif  // LRSCONFLATE_RESULTS_IO_H_
