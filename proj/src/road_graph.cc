#include "lrsconflate/road_graph.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <utility>

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>
#include <boost/iterator/function_output_iterator.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "lrsconflate/errors.h"
#include "text_util.h"

namespace lrsconflate {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

using IndexPoint = bg::model::point<double, 2, bg::cs::cartesian>;
using IndexBox = bg::model::box<IndexPoint>;
using IndexValue = std::pair<IndexBox, std::uint32_t>;

// Bulk-loaded R-tree over individual slice segments, in lon/lat degrees.
class SegmentIndex {
 public:
  struct Segment {
    std::uint32_t slice;
    std::uint32_t index;  // segment [points[index], points[index + 1]]
  };

  explicit SegmentIndex(const std::vector<WaySlice>& slices) {
    std::vector<IndexValue> values;
    for (std::uint32_t s = 0; s < slices.size(); ++s) {
      const auto& pts = slices[s].points;
      for (std::uint32_t i = 0; i + 1 < pts.size(); ++i) {
        const IndexBox box(
            IndexPoint(std::min(pts[i].lon, pts[i + 1].lon),
                       std::min(pts[i].lat, pts[i + 1].lat)),
            IndexPoint(std::max(pts[i].lon, pts[i + 1].lon),
                       std::max(pts[i].lat, pts[i + 1].lat)));
        values.emplace_back(box, static_cast<std::uint32_t>(segments_.size()));
        segments_.push_back({s, i});
      }
    }
    // The range constructor uses the packing (bulk-load) algorithm.
    tree_ = Tree(values.begin(), values.end());
  }

  template <typename Fn>
  void Visit(const IndexBox& query, Fn&& fn) const {
    tree_.query(bgi::intersects(query),
                boost::make_function_output_iterator([&](const IndexValue& v) {
                  fn(segments_[v.second]);
                }));
  }

 private:
  using Tree = bgi::rtree<IndexValue, bgi::rstar<16>>;
  Tree tree_;
  std::vector<Segment> segments_;
};

namespace {

using nlohmann::json;

struct CoordKey {
  std::uint64_t lon;
  std::uint64_t lat;
  bool operator==(const CoordKey&) const = default;
};

CoordKey KeyOf(const GeoPoint& p) {
  // Adding 0.0 folds -0.0 into +0.0 so equal coordinates hash equally.
  return {std::bit_cast<std::uint64_t>(p.lon + 0.0),
          std::bit_cast<std::uint64_t>(p.lat + 0.0)};
}

struct CoordKeyHash {
  std::size_t operator()(const CoordKey& k) const {
    return std::hash<std::uint64_t>{}(k.lon * 0x9E3779B97F4A7C15ULL ^ k.lat);
  }
};

bool ParseOneway(const json& props, bool& reverse) {
  reverse = false;
  auto it = props.find("oneway");
  if (it == props.end() || it->is_null()) return false;
  if (it->is_boolean()) return it->get<bool>();
  if (!it->is_string()) return false;
  const std::string v = it->get<std::string>();
  if (v == "-1") {
    reverse = true;
    return true;
  }
  return v == "yes" || v == "true" || v == "1";
}

}  // namespace

std::set<std::string> DefaultHighwayAllowlist() {
  return {"motorway",       "motorway_link", "trunk",        "trunk_link",
          "primary",        "primary_link",  "secondary",    "secondary_link",
          "tertiary",       "tertiary_link", "unclassified", "residential",
          "living_street",  "service"};
}

std::vector<OsmWay> ParseOsmGeoJson(std::string_view text,
                                    const std::set<std::string>& allowlist) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConflationError(
        ErrorCode::kMalformedInput,
        "invalid JSON at " + DescribeOffset(text, e.byte) + ": " + ParseErrorDetail(e.what()));
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array()) {
    throw ConflationError(ErrorCode::kMalformedInput,
                          "expected a GeoJSON FeatureCollection");
  }
  std::vector<OsmWay> ways;
  std::size_t index = 0;
  for (const json& f : doc["features"]) {
    const std::string where = "OSM feature #" + std::to_string(index++);
    const json props = f.contains("properties") && f["properties"].is_object()
                           ? f["properties"]
                           : json::object();
    OsmWay way;
    if (!props.contains("osm_id")) {
      throw ConflationError(ErrorCode::kMissingField,
                            where + " lacks required property 'osm_id'");
    }
    if (!props["osm_id"].is_number_integer()) {
      throw ConflationError(ErrorCode::kMalformedInput,
                            where + ": osm_id must be an integer");
    }
    way.osm_id = props["osm_id"].get<OsmId>();
    if (!props.contains("highway") || !props["highway"].is_string()) {
      throw ConflationError(ErrorCode::kMissingField,
                            where + " lacks required property 'highway'");
    }
    way.highway = props["highway"].get<std::string>();
    if (!allowlist.empty() && !allowlist.count(way.highway)) continue;
    bool reverse = false;
    way.oneway = ParseOneway(props, reverse);
    if (props.contains("tags") && props["tags"].is_object()) {
      for (const auto& [k, v] : props["tags"].items()) {
        way.tags[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
    }
    const json* geom = f.contains("geometry") ? &f["geometry"] : nullptr;
    if (geom == nullptr || !geom->is_object() ||
        geom->value("type", "") != "LineString" ||
        !geom->contains("coordinates") || !(*geom)["coordinates"].is_array()) {
      throw ConflationError(ErrorCode::kMalformedInput,
                            where + ": geometry must be a LineString");
    }
    for (const json& c : (*geom)["coordinates"]) {
      if (!c.is_array() || c.size() < 2 || !c[0].is_number() ||
          !c[1].is_number()) {
        throw ConflationError(ErrorCode::kMalformedInput,
                              where + ": coordinates must be [lon, lat]");
      }
      way.geometry.push_back({c[0].get<double>(), c[1].get<double>()});
    }
    if (reverse) std::reverse(way.geometry.begin(), way.geometry.end());
    ways.push_back(std::move(way));
  }
  return ways;
}

std::vector<OsmWay> LoadOsmWays(const std::filesystem::path& path,
                                const std::set<std::string>& allowlist) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConflationError(ErrorCode::kIoError,
                          "cannot open OSM input '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return ParseOsmGeoJson(buf.str(), allowlist);
  } catch (const ConflationError& e) {
    throw ConflationError(e.code(), path.string() + ": " + e.what());
  }
}

RoadGraph::RoadGraph() = default;
RoadGraph::RoadGraph(RoadGraph&&) noexcept = default;
RoadGraph& RoadGraph::operator=(RoadGraph&&) noexcept = default;
RoadGraph::~RoadGraph() = default;

RoadGraph RoadGraph::Build(std::vector<OsmWay> ways) {
  // Last write wins for duplicate ids.
  std::map<OsmId, OsmWay> by_id;
  for (auto& way : ways) {
    std::vector<GeoPoint> cleaned;
    bool valid = true;
    for (const auto& p : way.geometry) {
      if (!IsValid(p)) valid = false;
      if (cleaned.empty() || !(cleaned.back() == p)) cleaned.push_back(p);
    }
    if (!valid || cleaned.size() < 2) {
      spdlog::warn("dropping way {}: needs 2 distinct valid vertices",
                   way.osm_id);
      continue;
    }
    way.geometry = std::move(cleaned);
    auto [it, inserted] = by_id.try_emplace(way.osm_id);
    if (!inserted) {
      spdlog::warn("duplicate osm_id {}: keeping the last definition",
                   way.osm_id);
    }
    it->second = std::move(way);
  }
  if (by_id.empty()) {
    throw ConflationError(ErrorCode::kEmptyNetwork,
                          "road network has no usable ways");
  }

  RoadGraph g;
  g.ways_.reserve(by_id.size());
  for (auto& [id, way] : by_id) g.ways_.push_back(std::move(way));

  std::unordered_map<CoordKey, std::uint32_t, CoordKeyHash> occurrences;
  for (const auto& way : g.ways_) {
    for (const auto& p : way.geometry) ++occurrences[KeyOf(p)];
  }

  std::unordered_map<CoordKey, NodeId, CoordKeyHash> node_ids;
  auto node_of = [&](const GeoPoint& p) {
    auto [it, inserted] =
        node_ids.try_emplace(KeyOf(p), static_cast<NodeId>(node_ids.size()));
    return it->second;
  };

  for (const auto& way : g.ways_) {
    const auto& pts = way.geometry;
    std::size_t start = 0;
    double way_offset = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const bool is_node =
          i + 1 == pts.size() || occurrences[KeyOf(pts[i])] >= 2;
      if (!is_node) continue;
      WaySlice slice;
      slice.osm_id = way.osm_id;
      slice.way_offset_m = way_offset;
      slice.points.assign(pts.begin() + start, pts.begin() + i + 1);
      slice.cumulative_m.resize(slice.points.size(), 0.0);
      for (std::size_t k = 1; k < slice.points.size(); ++k) {
        slice.cumulative_m[k] =
            slice.cumulative_m[k - 1] +
            HaversineMeters(slice.points[k - 1], slice.points[k]);
      }
      way_offset += slice.length_m();

      const auto slice_id = static_cast<std::uint32_t>(g.slices_.size());
      const NodeId a = node_of(slice.points.front());
      const NodeId b = node_of(slice.points.back());
      std::vector<ArcId> arcs_of_slice;
      arcs_of_slice.push_back(static_cast<ArcId>(g.arcs_.size()));
      g.arcs_.push_back({a, b, way.osm_id, slice_id, false, slice.length_m()});
      if (!way.oneway) {
        arcs_of_slice.push_back(static_cast<ArcId>(g.arcs_.size()));
        g.arcs_.push_back({b, a, way.osm_id, slice_id, true, slice.length_m()});
      }
      g.slice_arcs_.push_back(std::move(arcs_of_slice));
      g.slices_.push_back(std::move(slice));
      start = i;
    }
  }

  g.node_count_ = node_ids.size();
  g.out_begin_.assign(g.node_count_ + 1, 0);
  for (const auto& arc : g.arcs_) ++g.out_begin_[arc.from + 1];
  for (std::size_t n = 0; n < g.node_count_; ++n) {
    g.out_begin_[n + 1] += g.out_begin_[n];
  }
  g.out_arcs_.resize(g.arcs_.size());
  std::vector<std::uint32_t> fill(g.out_begin_.begin(), g.out_begin_.end() - 1);
  for (ArcId id = 0; id < g.arcs_.size(); ++id) {
    g.out_arcs_[fill[g.arcs_[id].from]++] = id;
  }

  g.index_ = std::make_unique<SegmentIndex>(g.slices_);
  return g;
}

std::vector<SnapCandidate> RoadGraph::QueryCandidates(
    const GeoPoint& p, double radius_m, std::size_t max_candidates) const {
  std::vector<SnapCandidate> out;
  if (!(radius_m > 0.0) || max_candidates == 0) return out;

  constexpr double kMetersPerDegree =
      kEarthRadiusMeters * std::numbers::pi / 180.0;
  const double pad = 1.01;
  const double dlat = radius_m / kMetersPerDegree * pad;
  const double coslat =
      std::max(std::cos(p.lat * std::numbers::pi / 180.0), 1e-6);
  const double dlon = dlat / coslat;
  const IndexBox query(IndexPoint(p.lon - dlon, p.lat - dlat),
                       IndexPoint(p.lon + dlon, p.lat + dlat));

  struct Best {
    std::uint32_t segment = 0;
    SegmentProjection proj;
  };
  std::unordered_map<std::uint32_t, Best> best_by_slice;
  index_->Visit(query, [&](const SegmentIndex::Segment& seg) {
    const WaySlice& slice = slices_[seg.slice];
    const SegmentProjection proj = ProjectOntoSegment(
        p, slice.points[seg.index], slice.points[seg.index + 1]);
    if (proj.distance_m > radius_m) return;
    auto [it, inserted] = best_by_slice.try_emplace(seg.slice);
    if (inserted || proj.distance_m < it->second.proj.distance_m ||
        (proj.distance_m == it->second.proj.distance_m &&
         seg.index < it->second.segment)) {
      it->second = {seg.index, proj};
    }
  });

  for (const auto& [slice_id, best] : best_by_slice) {
    const WaySlice& slice = slices_[slice_id];
    const double seg_len = slice.cumulative_m[best.segment + 1] -
                           slice.cumulative_m[best.segment];
    const double along = std::clamp(
        slice.cumulative_m[best.segment] + best.proj.fraction * seg_len, 0.0,
        slice.length_m());
    for (ArcId arc_id : slice_arcs_[slice_id]) {
      const Arc& arc = arcs_[arc_id];
      SnapCandidate c;
      c.arc_id = arc_id;
      c.osm_id = arc.osm_id;
      c.snapped = best.proj.point;
      c.offset_m = arc.reversed ? arc.length_m - along : along;
      c.snap_dist_m = best.proj.distance_m;
      out.push_back(c);
    }
  }
  // Distances are compared at nanometre resolution so mirror-image fixtures
  // tie exactly and fall through to the id ordering.
  auto key = [](const SnapCandidate& c) {
    return std::make_tuple(std::llround(c.snap_dist_m * 1e9), c.osm_id,
                           c.arc_id);
  };
  std::sort(out.begin(), out.end(),
            [&](const SnapCandidate& a, const SnapCandidate& b) {
              return key(a) < key(b);
            });
  if (out.size() > max_candidates) out.resize(max_candidates);
  return out;
}

std::optional<double> RoadGraph::RouteDistance(const ArcPosition& from,
                                               const ArcPosition& to,
                                               double cutoff_m) const {
  return RouteDistances(from, std::span(&to, 1), cutoff_m).front();
}

std::vector<std::optional<double>> RoadGraph::RouteDistances(
    const ArcPosition& from, std::span<const ArcPosition> targets,
    double cutoff_m) const {
  // Two-way slices allow turning around anywhere along them, so positions on
  // either of their arcs are reachable from both end nodes. Noisy points that
  // step a few meters backwards along a road stay connected this way.
  auto two_way = [&](const Arc& arc) { return slice_arcs_[arc.slice].size() == 2; };
  auto along = [&](const ArcPosition& p) {
    const Arc& arc = arcs_[p.arc];
    return arc.reversed ? arc.length_m - p.offset_m : p.offset_m;
  };

  const Arc& start_arc = arcs_[from.arc];
  std::vector<std::optional<double>> result(targets.size());
  std::unordered_map<NodeId, std::vector<std::pair<std::size_t, double>>> pending;
  std::size_t open = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const ArcPosition& t = targets[i];
    const Arc& arc = arcs_[t.arc];
    if (t.arc == from.arc && t.offset_m >= from.offset_m) {
      const double d = t.offset_m - from.offset_m;
      if (d <= cutoff_m) result[i] = d;
      continue;
    }
    if (arc.slice == start_arc.slice && two_way(arc)) {
      const double d = std::abs(along(t) - along(from));
      if (d <= cutoff_m) result[i] = d;
      continue;
    }
    pending[arc.from].emplace_back(i, t.offset_m);
    if (two_way(arc)) pending[arc.to].emplace_back(i, arc.length_m - t.offset_m);
    ++open;
  }
  if (open == 0) return result;

  using Entry = std::pair<double, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  std::unordered_map<NodeId, double> dist;
  auto relax = [&](NodeId node, double d) {
    if (d > cutoff_m) return;
    auto [it, inserted] = dist.try_emplace(node, d);
    if (inserted || d < it->second) {
      it->second = d;
      queue.emplace(d, node);
    }
  };
  relax(start_arc.to, std::max(0.0, start_arc.length_m - from.offset_m));
  if (two_way(start_arc)) relax(start_arc.from, from.offset_m);

  while (!queue.empty()) {
    const auto [d, node] = queue.top();
    queue.pop();
    if (d > dist[node]) continue;
    if (auto it = pending.find(node); it != pending.end()) {
      for (const auto& [i, extra] : it->second) {
        const double total = d + extra;
        if (total <= cutoff_m && (!result[i] || total < *result[i])) result[i] = total;
      }
      pending.erase(it);
    }
    // Every remaining entry would cost at least d, so stop once no target
    // can still improve.
    bool settled = true;
    for (const auto& [n, entries] : pending) {
      for (const auto& [i, extra] : entries) {
        if (!result[i] || *result[i] > d) settled = false;
      }
      if (!settled) break;
    }
    if (settled) break;
    for (std::uint32_t k = out_begin_[node]; k < out_begin_[node + 1]; ++k) {
      const Arc& arc = arcs_[out_arcs_[k]];
      relax(arc.to, d + arc.length_m);
    }
  }
  return result;
}

GeoPoint RoadGraph::PointAt(const ArcPosition& pos) const {
  const Arc& arc = arcs_[pos.arc];
  const WaySlice& slice = slices_[arc.slice];
  const double along = std::clamp(
      arc.reversed ? arc.length_m - pos.offset_m : pos.offset_m, 0.0,
      slice.length_m());
  const auto& cum = slice.cumulative_m;
  auto it = std::upper_bound(cum.begin(), cum.end(), along);
  if (it == cum.end()) return slice.points.back();
  const std::size_t hi = static_cast<std::size_t>(it - cum.begin());
  const std::size_t lo = hi - 1;
  const double span = cum[hi] - cum[lo];
  const double t = span > 0.0 ? (along - cum[lo]) / span : 0.0;
  const GeoPoint& a = slice.points[lo];
  const GeoPoint& b = slice.points[hi];
  return {a.lon + t * (b.lon - a.lon), a.lat + t * (b.lat - a.lat)};
}

double RoadGraph::WayOffset(const ArcPosition& pos) const {
  const Arc& arc = arcs_[pos.arc];
  const WaySlice& slice = slices_[arc.slice];
  const double along = arc.reversed ? arc.length_m - pos.offset_m : pos.offset_m;
  return slice.way_offset_m + along;
}

std::vector<GeoPoint> RoadGraph::ArcGeometry(ArcId id) const {
  const Arc& arc = arcs_[id];
  std::vector<GeoPoint> pts = slices_[arc.slice].points;
  if (arc.reversed) std::reverse(pts.begin(), pts.end());
  return pts;
}

const OsmWay* RoadGraph::FindWay(OsmId osm_id) const {
  auto it = std::lower_bound(
      ways_.begin(), ways_.end(), osm_id,
      [](const OsmWay& w, OsmId id) { return w.osm_id < id; });
  return it != ways_.end() && it->osm_id == osm_id ? &*it : nullptr;
}

}  // namespace lrsconflate
