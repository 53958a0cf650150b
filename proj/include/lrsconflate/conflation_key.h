#ifndef LRSCONFLATE_CONFLATION_KEY_H_
#define LRSCONFLATE_CONFLATION_KEY_H_

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lrsconflate/pipeline.h"

namespace lrsconflate {

struct ConflationKeyRow {
  std::string route_name;
  std::string edge_rte_key;
  OsmId osm_id = 0;
  double m_min = 0.0;
  double m_max = 0.0;
  double mean_snap_dist_m = 0.0;
  std::size_t point_count = 0;
};

inline constexpr double kDefaultFoldbackSpanMiles = 0.05;

// Removes fold-backs: within a run of consecutive matched rows on one way,
// rows whose way offset retreats behind the furthest position reached so far
// (relative to the run's overall direction), provided the retreating stretch
// spans less than `span_threshold_mi` of measure. Rows must be ordered by
// normalized measure. Removed rows are appended to `removed` when given.
std::vector<RouteRow> CleanFoldbacks(std::span<const RouteRow> rows,
                                     double span_threshold_mi =
                                         kDefaultFoldbackSpanMiles,
                                     std::vector<RouteRow>* removed = nullptr);

// One key row per (edge_rte_key, osm_id) over matched rows, extents mapped
// back to the original milepost space. Sorted by edge, m_min, osm_id.
std::vector<ConflationKeyRow> SummarizeKey(std::string_view route_name,
                                           std::span<const RouteRow> rows,
                                           Orientation orientation);

struct FoldbackAudit {
  std::string route_name;
  RouteRow row;
};

// Cleans and summarizes every route; rows sorted by route then as above.
std::vector<ConflationKeyRow> BuildConflationKey(
    std::span<const RouteMatchResult> results, double span_threshold_mi,
    std::vector<FoldbackAudit>* audit = nullptr);

// Header plus one line per row; floats with 6 decimals.
void WriteConflationKeyCsv(std::ostream& out,
                           std::span<const ConflationKeyRow> rows);
std::vector<ConflationKeyRow> ReadConflationKeyCsv(std::istream& in);

}  // namespace lrsconflate

#endif  // LRSCONFLATE_CONFLATION_KEY_H_
