#ifndef LRSCONFLATE_TESTS_SUPPORT_SYNTHETIC_H_
#define LRSCONFLATE_TESTS_SUPPORT_SYNTHETIC_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "lrsconflate/lrs.h"
#include "lrsconflate/pipeline.h"
#include "lrsconflate/road_graph.h"

namespace synth {

using lrsconflate::GeoPoint;
using lrsconflate::OsmId;

// One block of the grid, or one curved diagonal, between two nodes.
struct Segment {
  int a = 0;
  int b = 0;
  OsmId osm_id = 0;
  bool oneway = false;  // travel only from a to b
  std::vector<GeoPoint> points;  // a .. b inclusive
};

struct Network {
  std::vector<GeoPoint> nodes;
  std::vector<Segment> segments;
  std::vector<lrsconflate::OsmWay> ways;
  // node -> (segment, traversed a->b)
  std::vector<std::vector<std::pair<int, bool>>> adjacency;
};

struct GridOptions {
  int nx = 12;
  int ny = 12;
  double block_m = 400.0;
  double wiggle_fraction = 0.3;   // blocks drawn as a shallow arc
  int curved_diagonals = 8;
  double oneway_fraction = 0.1;
  GeoPoint origin{-77.5, 37.5};
};

Network BuildGridNetwork(std::uint64_t seed, const GridOptions& options = {});

// A route vertex with the ways it truly lies on.
struct TruePoint {
  GeoPoint point;
  std::set<OsmId> ways;
};

struct WalkOptions {
  int min_segments = 6;
  int max_segments = 14;
  bool allow_oneway = true;
  bool allow_revisits = false;
  double vertex_spacing_m = 20.0;
};

// Random walk without U-turns, resampled at roughly vertex_spacing_m.
std::vector<TruePoint> RandomWalk(const Network& net, std::mt19937_64& rng,
                                  const WalkOptions& options);

// Walks until the path has at least `points` vertices, then truncates.
std::vector<TruePoint> LongWalk(const Network& net, std::mt19937_64& rng,
                                std::size_t points, double spacing_m);

struct SyntheticRoute {
  lrsconflate::Route route;
  // Original vertices with their measure, in increasing-m order.
  std::vector<std::pair<double, std::set<OsmId>>> truth;
};

struct RouteOptions {
  double noise_sigma_m = 5.0;  // per axis
  double min_edge_m = 100.0;
  double max_edge_m = 400.0;
  bool decreasing_m = false;   // measures run against the direction of travel
  std::string category = "SR";
};

SyntheticRoute MakeRoute(const std::vector<TruePoint>& path,
                         const std::string& name, std::mt19937_64& rng,
                         const RouteOptions& options = {});

// Same geometry, measures and edge keys under another name.
lrsconflate::Route Twin(const lrsconflate::Route& route,
                        const std::string& name);

struct Suite {
  Network network;
  std::vector<SyntheticRoute> routes;
};

// `count` routes on one network; every other route runs SB with decreasing
// measures so both orientations are exercised.
Suite BuildSuite(std::uint64_t seed, std::size_t count,
                 const GridOptions& grid = {}, const WalkOptions& walk = {});

// Fraction of rows whose osm_id is one of the generating ways of the
// surrounding original vertices. Unmatched rows count as misses.
struct Agreement {
  std::size_t rows = 0;
  std::size_t hits = 0;
  double rate() const { return rows ? double(hits) / double(rows) : 1.0; }
};
Agreement ScoreAgainstTruth(const SyntheticRoute& route,
                            const lrsconflate::RouteMatchResult& result);

std::string OsmGeoJson(const std::vector<lrsconflate::OsmWay>& ways);
std::string LrsGeoJson(const std::vector<lrsconflate::Route>& routes);

void WriteFile(const std::filesystem::path& path, const std::string& text);
std::string ReadFile(const std::filesystem::path& path);

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "lrsconflate");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace synth

#endif  // LRSCONFLATE_TESTS_SUPPORT_SYNTHETIC_H_
