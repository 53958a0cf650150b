#include "lrsconflate/road_graph.h"

#include <algorithm>
#include <limits>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "lrsconflate/errors.h"
#include "lrsconflate/geo.h"
#include "synthetic.h"

namespace lrsconflate {
namespace {

const GeoPoint kOrigin{-77.5, 37.5};

OsmWay Way(OsmId id, std::vector<GeoPoint> pts, bool oneway = false) {
  OsmWay w;
  w.osm_id = id;
  w.highway = "residential";
  w.oneway = oneway;
  w.geometry = std::move(pts);
  return w;
}

GeoPoint At(double east, double north) {
  return OffsetMeters(kOrigin, east, north);
}

TEST(RoadGraph, CrossroadsHasFourSlicesEightArcs) {
  const GeoPoint center = At(0, 0);
  std::vector<OsmWay> ways = {
      Way(1, {At(-100, 0), center, At(100, 0)}),
      Way(2, {At(0, -100), center, At(0, 100)}),
  };
  const RoadGraph g = RoadGraph::Build(ways);
  EXPECT_EQ(g.slices().size(), 4u);
  EXPECT_EQ(g.arcs().size(), 8u);
  EXPECT_EQ(g.node_count(), 5u);
}

TEST(RoadGraph, OnewayHasOneArc) {
  const RoadGraph g = RoadGraph::Build({Way(7, {At(0, 0), At(50, 0)}, true)});
  ASSERT_EQ(g.arcs().size(), 1u);
  EXPECT_FALSE(g.arc(0).reversed);
  EXPECT_NEAR(g.arc(0).length_m, 50.0, 0.01);
}

TEST(RoadGraph, ParallelWaysWithoutSharedVertexStayDisconnected) {
  const RoadGraph g = RoadGraph::Build(
      {Way(1, {At(0, 0), At(100, 0)}), Way(2, {At(0, 0.5), At(100, 0.5)})});
  EXPECT_EQ(g.node_count(), 4u);
  const auto d = g.RouteDistance({0, 10.0}, {2, 10.0}, 10000.0);
  EXPECT_FALSE(d.has_value());
}

TEST(RoadGraph, DuplicateIdLastDefinitionWins) {
  const RoadGraph g = RoadGraph::Build(
      {Way(5, {At(0, 0), At(10, 0)}), Way(5, {At(0, 0), At(0, 30)})});
  ASSERT_EQ(g.ways().size(), 1u);
  EXPECT_NEAR(PolylineLengthMeters(g.FindWay(5)->geometry), 30.0, 1e-6);
}

TEST(RoadGraph, DegenerateWaysDropped) {
  const RoadGraph g = RoadGraph::Build(
      {Way(1, {At(0, 0), At(0, 0)}), Way(2, {At(0, 0), At(20, 0)})});
  EXPECT_EQ(g.ways().size(), 1u);
  EXPECT_EQ(g.FindWay(1), nullptr);
  try {
    RoadGraph::Build({Way(1, {At(0, 0)})});
    FAIL();
  } catch (const ConflationError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyNetwork);
  }
}

TEST(RoadGraph, ParseOsmGeoJsonFiltersAndReadsOneway) {
  const std::string text = R"({"type":"FeatureCollection","features":[
    {"type":"Feature","properties":{"osm_id":1,"highway":"primary","oneway":"yes"},
     "geometry":{"type":"LineString","coordinates":[[-77.5,37.5],[-77.49,37.5]]}},
    {"type":"Feature","properties":{"osm_id":2,"highway":"footway"},
     "geometry":{"type":"LineString","coordinates":[[-77.5,37.5],[-77.49,37.5]]}},
    {"type":"Feature","properties":{"osm_id":3,"highway":"service","oneway":"-1","tags":{"name":"Back Alley","lanes":1}},
     "geometry":{"type":"LineString","coordinates":[[-77.5,37.5],[-77.49,37.5]]}}]})";
  const auto ways = ParseOsmGeoJson(text, DefaultHighwayAllowlist());
  ASSERT_EQ(ways.size(), 2u);
  EXPECT_TRUE(ways[0].oneway);
  EXPECT_TRUE(ways[1].oneway);
  EXPECT_DOUBLE_EQ(ways[1].geometry.front().lon, -77.49);
  EXPECT_EQ(ways[1].tags.at("name"), "Back Alley");
  EXPECT_EQ(ways[1].tags.at("lanes"), "1");
  EXPECT_EQ(ParseOsmGeoJson(text, {}).size(), 3u);
}

TEST(RoadGraph, ParseOsmGeoJsonErrors) {
  auto code = [](const std::string& text) {
    try {
      ParseOsmGeoJson(text, {});
    } catch (const ConflationError& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  EXPECT_EQ(code("{"), ErrorCode::kMalformedInput);
  EXPECT_EQ(code(R"({"type":"FeatureCollection","features":[{"properties":{"highway":"primary"},
      "geometry":{"type":"LineString","coordinates":[[0,0],[1,1]]}}]})"),
            ErrorCode::kMissingField);
}

TEST(QueryCandidates, EquidistantTieOrderedByOsmId) {
  // Two north-south ways at exactly mirrored longitudes.
  const double d = 1.0 / 2048;
  const GeoPoint p{-77.5, 37.5};
  const RoadGraph g = RoadGraph::Build({
      Way(9, {{p.lon + d, 37.49}, {p.lon + d, 37.51}}, true),
      Way(4, {{p.lon - d, 37.49}, {p.lon - d, 37.51}}, true),
  });
  const auto c = g.QueryCandidates(p, 100.0, 10);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].snap_dist_m, c[1].snap_dist_m);
  EXPECT_EQ(c[0].osm_id, 4);
  EXPECT_EQ(c[1].osm_id, 9);
}

TEST(QueryCandidates, RespectsRadiusAndLimit) {
  const RoadGraph g = RoadGraph::Build({
      Way(1, {At(0, 10), At(100, 10)}),
      Way(2, {At(0, 30), At(100, 30)}),
      Way(3, {At(0, 60), At(100, 60)}),
  });
  const GeoPoint p = At(50, 0);
  const auto all = g.QueryCandidates(p, 50.0, 100);
  ASSERT_EQ(all.size(), 4u);  // two arcs per way, two ways in range
  EXPECT_NEAR(all[0].snap_dist_m, 10.0, 0.01);
  EXPECT_EQ(all[0].osm_id, 1);
  EXPECT_EQ(g.QueryCandidates(p, 50.0, 1).size(), 1u);
  EXPECT_TRUE(g.QueryCandidates(p, 5.0, 10).empty());
}

TEST(QueryCandidates, OffsetsAreAlongTheArc) {
  const RoadGraph g = RoadGraph::Build({Way(1, {At(0, 0), At(100, 0)})});
  for (const auto& c : g.QueryCandidates(At(30, 4), 20.0, 10)) {
    const Arc& arc = g.arc(c.arc_id);
    EXPECT_NEAR(c.offset_m, arc.reversed ? 70.0 : 30.0, 0.05);
    EXPECT_NEAR(g.WayOffset({c.arc_id, c.offset_m}), 30.0, 0.05);
    EXPECT_NEAR(HaversineMeters(g.PointAt({c.arc_id, c.offset_m}), c.snapped),
                0.0, 1e-6);
  }
}

// Brute force over every way segment: nearest distance per way within the
// radius must equal the best candidate per osm_id.
TEST(QueryCandidates, MatchesBruteForce) {
  const auto net = synth::BuildGridNetwork(3, {.nx = 6, .ny = 6});
  const RoadGraph g = RoadGraph::Build(net.ways);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-100.0, 2100.0);
  for (int trial = 0; trial < 500; ++trial) {
    const GeoPoint p = OffsetMeters({-77.5, 37.5}, u(rng), u(rng));
    const double radius = 60.0;
    std::map<OsmId, double> expected;
    for (const auto& w : net.ways) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 1; i < w.geometry.size(); ++i) {
        best = std::min(best, ProjectOntoSegment(p, w.geometry[i - 1],
                                                 w.geometry[i])
                                  .distance_m);
      }
      if (best <= radius) expected[w.osm_id] = best;
    }
    std::map<OsmId, double> got;
    double last = 0.0;
    for (const auto& c : g.QueryCandidates(p, radius, 1000)) {
      EXPECT_GE(c.snap_dist_m, last);
      last = c.snap_dist_m;
      auto [it, inserted] = got.emplace(c.osm_id, c.snap_dist_m);
      if (!inserted) it->second = std::min(it->second, c.snap_dist_m);
    }
    ASSERT_EQ(got.size(), expected.size()) << "trial " << trial;
    for (const auto& [id, d] : expected) {
      EXPECT_NEAR(got[id], d, 1e-9) << "way " << id;
    }
  }
}

// Oracle: shortest paths over a vertex-level graph built straight from the
// ways, where every vertex is a node.
class VertexGraph {
 public:
  explicit VertexGraph(const std::vector<OsmWay>& ways) {
    for (const auto& w : ways) {
      for (std::size_t i = 1; i < w.geometry.size(); ++i) {
        const int a = Id(w.geometry[i - 1]);
        const int b = Id(w.geometry[i]);
        const double d = HaversineMeters(w.geometry[i - 1], w.geometry[i]);
        edges_.push_back({a, b, d});
        if (!w.oneway) edges_.push_back({b, a, d});
      }
    }
  }

  double Distance(const GeoPoint& from, const GeoPoint& to) {
    const int s = Id(from), t = Id(to);
    std::vector<double> dist(ids_.size(),
                             std::numeric_limits<double>::infinity());
    dist[s] = 0;
    // Bellman-Ford: slow but obviously correct.
    for (std::size_t round = 0; round < ids_.size(); ++round) {
      bool changed = false;
      for (const auto& e : edges_) {
        if (dist[e.a] + e.d < dist[e.b]) {
          dist[e.b] = dist[e.a] + e.d;
          changed = true;
        }
      }
      if (!changed) break;
    }
    return dist[t];
  }

  // A point `s` meters along the segment u -> v. Oneway segments are given in
  // their legal direction; two-way ones can be left towards either end.
  struct Position {
    GeoPoint u, v;
    double s = 0.0;
    double length = 0.0;
    bool oneway = false;
  };

  double Distance(const Position& p, const Position& q) {
    double best = std::numeric_limits<double>::infinity();
    const bool same_segment =
        (p.u == q.u && p.v == q.v) || (!p.oneway && p.u == q.v && p.v == q.u);
    if (same_segment) {
      const double qs = p.u == q.u ? q.s : q.length - q.s;
      if (!p.oneway) best = std::abs(qs - p.s);
      else if (qs >= p.s) best = qs - p.s;
    }
    std::vector<std::pair<GeoPoint, double>> exits = {{p.v, p.length - p.s}};
    if (!p.oneway) exits.emplace_back(p.u, p.s);
    std::vector<std::pair<GeoPoint, double>> entries = {{q.u, q.s}};
    if (!q.oneway) entries.emplace_back(q.v, q.length - q.s);
    for (const auto& [x, dx] : exits) {
      for (const auto& [y, dy] : entries) {
        best = std::min(best, dx + Distance(x, y) + dy);
      }
    }
    return best;
  }

 private:
  struct Edge {
    int a, b;
    double d;
  };
  int Id(const GeoPoint& p) {
    auto [it, inserted] =
        ids_.emplace(std::make_pair(p.lon, p.lat), static_cast<int>(ids_.size()));
    return it->second;
  }
  std::map<std::pair<double, double>, int> ids_;
  std::vector<Edge> edges_;
};

TEST(RouteDistance, MatchesVertexGraphOracle) {
  synth::GridOptions opt;
  opt.nx = 4;
  opt.ny = 4;
  opt.oneway_fraction = 0.3;
  const auto net = synth::BuildGridNetwork(17, opt);
  const RoadGraph g = RoadGraph::Build(net.ways);
  VertexGraph oracle(net.ways);
  std::mt19937_64 rng(9);
  const auto arcs = g.arcs();
  int reachable = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const ArcId a = rng() % arcs.size();
    const ArcId b = rng() % arcs.size();
    const double oa = std::uniform_real_distribution<double>(0, arcs[a].length_m)(rng);
    const double ob = std::uniform_real_distribution<double>(0, arcs[b].length_m)(rng);
    const auto geom_a = g.ArcGeometry(a);
    const auto geom_b = g.ArcGeometry(b);
    EXPECT_NEAR(PolylineLengthMeters(geom_a), arcs[a].length_m, 1e-6);

    auto position = [&](ArcId arc, double offset) {
      const auto geom = g.ArcGeometry(arc);
      double start = 0.0;
      std::size_t i = 0;
      for (; i + 2 < geom.size(); ++i) {
        const double len = HaversineMeters(geom[i], geom[i + 1]);
        if (start + len >= offset) break;
        start += len;
      }
      VertexGraph::Position pos;
      pos.u = geom[i];
      pos.v = geom[i + 1];
      pos.length = HaversineMeters(pos.u, pos.v);
      pos.s = offset - start;
      pos.oneway = g.FindWay(arcs[arc].osm_id)->oneway;
      return pos;
    };
    const double expected = oracle.Distance(position(a, oa), position(b, ob));
    const double cutoff = 1500.0;
    const auto got = g.RouteDistance({a, oa}, {b, ob}, cutoff);
    if (expected <= cutoff - 1e-6) {
      ASSERT_TRUE(got.has_value()) << "trial " << trial;
      EXPECT_NEAR(*got, expected, 1e-6);
      ++reachable;
    } else if (expected > cutoff + 1e-6) {
      EXPECT_FALSE(got.has_value());
    }
  }
  EXPECT_GT(reachable, 30);
}

TEST(RouteDistance, OnewayIsDirected) {
  const RoadGraph g = RoadGraph::Build({Way(1, {At(0, 0), At(100, 0)}, true)});
  EXPECT_NEAR(*g.RouteDistance({0, 10}, {0, 60}, 1000), 50.0, 1e-9);
  EXPECT_FALSE(g.RouteDistance({0, 60}, {0, 10}, 1000).has_value());
  EXPECT_FALSE(g.RouteDistance({0, 10}, {0, 60}, 40).has_value());
}

TEST(RouteDistance, TwoWayRoadsAllowTurningAround) {
  const RoadGraph g = RoadGraph::Build({Way(1, {At(0, 0), At(100, 0)})});
  ASSERT_EQ(g.arcs().size(), 2u);
  EXPECT_NEAR(*g.RouteDistance({0, 60}, {0, 10}, 1000), 50.0, 1e-9);
  // Arc 1 runs the other way; offset 30 on it is 70 m along arc 0.
  EXPECT_NEAR(*g.RouteDistance({0, 60}, {1, 30}, 1000), 10.0, 1e-9);
  EXPECT_FALSE(g.RouteDistance({0, 60}, {0, 10}, 40).has_value());
}

TEST(RouteDistances, AgreesWithSingleQueries) {
  const auto net = synth::BuildGridNetwork(23, {.nx = 5, .ny = 5});
  const RoadGraph g = RoadGraph::Build(net.ways);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const ArcPosition from{ArcId(rng() % g.arcs().size()), 5.0};
    std::vector<ArcPosition> targets;
    for (int k = 0; k < 8; ++k) {
      targets.push_back({ArcId(rng() % g.arcs().size()), 3.0});
    }
    const auto many = g.RouteDistances(from, targets, 900.0);
    for (std::size_t k = 0; k < targets.size(); ++k) {
      EXPECT_EQ(many[k], g.RouteDistance(from, targets[k], 900.0));
    }
  }
}

TEST(WayOffset, FollowsDigitizationAcrossSlices) {
  // Way 1 is split at the junction with way 2.
  const RoadGraph g = RoadGraph::Build({
      Way(1, {At(0, 0), At(100, 0), At(200, 0)}),
      Way(2, {At(100, -50), At(100, 0)}),
  });
  for (ArcId id = 0; id < g.arcs().size(); ++id) {
    const Arc& arc = g.arc(id);
    if (arc.osm_id != 1) continue;
    const double start = g.WayOffset({id, 0.0});
    const double end = g.WayOffset({id, arc.length_m});
    EXPECT_NEAR(std::abs(end - start), 100.0, 0.01);
    EXPECT_EQ(end < start, arc.reversed);
  }
}

}  // namespace
}  // namespace lrsconflate
