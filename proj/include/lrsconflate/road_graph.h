#ifndef LRSCONFLATE_ROAD_GRAPH_H_
#define LRSCONFLATE_ROAD_GRAPH_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lrsconflate/geo.h"

namespace lrsconflate {

using OsmId = std::int64_t;
using NodeId = std::uint32_t;
using ArcId = std::uint32_t;

struct OsmWay {
  OsmId osm_id = 0;
  std::string highway;
  bool oneway = false;
  std::vector<GeoPoint> geometry;
  std::map<std::string, std::string> tags;
};

// Drivable classes kept when loading ways.
std::set<std::string> DefaultHighwayAllowlist();

// Reads an OSM-style GeoJSON FeatureCollection. Ways whose highway class is
// not in `allowlist` are dropped (an empty allowlist keeps everything).
std::vector<OsmWay> LoadOsmWays(const std::filesystem::path& path,
                                const std::set<std::string>& allowlist);
std::vector<OsmWay> ParseOsmGeoJson(std::string_view text,
                                    const std::set<std::string>& allowlist);

// A way split at junction vertices. Slices are undirected; each one yields
// one arc (oneway) or two.
struct WaySlice {
  OsmId osm_id = 0;
  std::vector<GeoPoint> points;
  std::vector<double> cumulative_m;  // cumulative_m[i]: distance to points[i]
  double way_offset_m = 0.0;         // where the slice starts along its way

  double length_m() const { return cumulative_m.back(); }
};

struct Arc {
  NodeId from = 0;
  NodeId to = 0;
  OsmId osm_id = 0;
  std::uint32_t slice = 0;
  bool reversed = false;  // traverses its slice from last point to first
  double length_m = 0.0;
};

// A location on an arc, `offset_m` meters from the arc's start.
struct ArcPosition {
  ArcId arc = 0;
  double offset_m = 0.0;
};

struct SnapCandidate {
  ArcId arc_id = 0;
  OsmId osm_id = 0;
  GeoPoint snapped;
  double offset_m = 0.0;
  double snap_dist_m = 0.0;
};

class SegmentIndex;

// Routable directed graph over OSM ways. Immutable after construction; every
// query is const and safe to call concurrently.
class RoadGraph {
 public:
  RoadGraph(RoadGraph&&) noexcept;
  RoadGraph& operator=(RoadGraph&&) noexcept;
  ~RoadGraph();

  // Junctions are created where ways share an identical vertex. Throws
  // ConflationError(kEmptyNetwork) when no usable way remains.
  static RoadGraph Build(std::vector<OsmWay> ways);

  std::size_t node_count() const { return node_count_; }
  std::span<const Arc> arcs() const { return arcs_; }
  std::span<const WaySlice> slices() const { return slices_; }
  const Arc& arc(ArcId id) const { return arcs_[id]; }

  // Arcs whose minimal distance to p is within `radius_m`, projected and
  // ordered by snap distance (ties: osm_id, then arc id).
  std::vector<SnapCandidate> QueryCandidates(const GeoPoint& p,
                                             double radius_m,
                                             std::size_t max_candidates) const;

  // Shortest directed network distance between two arc positions, or nullopt
  // when it exceeds `cutoff_m`. Travel may turn around anywhere on a two-way
  // slice; oneway slices are only traversed in their direction.
  std::optional<double> RouteDistance(const ArcPosition& from,
                                      const ArcPosition& to,
                                      double cutoff_m) const;

  // One bounded search from `from` answering every target.
  std::vector<std::optional<double>> RouteDistances(
      const ArcPosition& from, std::span<const ArcPosition> targets,
      double cutoff_m) const;

  GeoPoint PointAt(const ArcPosition& pos) const;
  // Distance from the start of the arc's way (in way digitization order).
  double WayOffset(const ArcPosition& pos) const;
  // Arc geometry in travel order.
  std::vector<GeoPoint> ArcGeometry(ArcId id) const;

  const OsmWay* FindWay(OsmId osm_id) const;
  const std::vector<OsmWay>& ways() const { return ways_; }

 private:
  RoadGraph();

  std::vector<OsmWay> ways_;  // sorted by osm_id
  std::vector<WaySlice> slices_;
  std::vector<std::vector<ArcId>> slice_arcs_;
  std::vector<Arc> arcs_;
  std::vector<std::uint32_t> out_begin_;  // CSR offsets, node_count_ + 1
  std::vector<ArcId> out_arcs_;
  std::size_t node_count_ = 0;
  std::unique_ptr<SegmentIndex> index_;
};

inline RoadGraph BuildGraph(std::vector<OsmWay> ways) {
  return RoadGraph::Build(std::move(ways));
}

}  // namespace lrsconflate

#endif  // LRSCONFLATE_ROAD_GRAPH_H_
