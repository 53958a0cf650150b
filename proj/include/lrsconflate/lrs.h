#ifndef LRSCONFLATE_LRS_H_
#define LRSCONFLATE_LRS_H_

#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "lrsconflate/geo.h"

namespace lrsconflate {

enum class Orientation { kForward, kReversed };

std::string_view OrientationName(Orientation o);

struct LrsEdge {
  std::string edge_rte_key;
  std::string route_name;
  std::string master_route_name;
  std::string route_category;
  std::int64_t edge_sequence = 0;
  MeasuredPolyline geometry;
};

// Edges sharing a route name, sorted strictly ascending by edge_sequence.
struct Route {
  std::string route_name;
  std::vector<LrsEdge> edges;
  Orientation orientation = Orientation::kForward;
};

// How a route name is turned into a travel orientation. Patterns are
// ECMAScript regular expressions searched anywhere in the name.
//
// A name is classifiable when it yields a direction token (the first capture
// group of `direction_pattern`), matches `nonprime_pattern`, or matches
// `undirected_pattern`. The route is reversed when it is non-prime or its
// direction token is listed in `reversed_directions`.
struct OrientationRules {
  std::string direction_pattern = R"((NB|SB|EB|WB)\s*$)";
  std::string nonprime_pattern = R"(NP\s*$)";
  std::string undirected_pattern;  // empty: undirected names are rejected
  std::vector<std::string> reversed_directions = {"SB", "WB"};
};

class OrientationClassifier {
 public:
  explicit OrientationClassifier(const OrientationRules& rules);
  ~OrientationClassifier();
  OrientationClassifier(OrientationClassifier&&) noexcept;
  OrientationClassifier& operator=(OrientationClassifier&&) noexcept;

  // Throws ConflationError(kUnclassifiableName).
  Orientation Classify(std::string_view route_name) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Orientation ClassifyOrientation(std::string_view route_name,
                                const OrientationRules& rules);

// Parses an LRS FeatureCollection (LineString coordinates [lon, lat, m]) or,
// for a .csv path, the CSV-with-WKT layout
//   edge_rte_key,route_name,master_route_name,route_category,edge_sequence,wkt
// where wkt is a quoted `LINESTRING M (x y m, ...)` literal.
//
// Routes come back sorted by name with Forward orientation; call
// ClassifyRoutes to apply naming rules.
std::vector<Route> LoadRoutes(const std::filesystem::path& path);
std::vector<Route> ParseLrsGeoJson(std::string_view text);
std::vector<Route> ParseLrsCsv(std::istream& in);

// Sets each route's orientation. Unclassifiable routes are logged, removed
// from `routes` and their names returned.
std::vector<std::string> ClassifyRoutes(std::vector<Route>& routes,
                                        const OrientationRules& rules);

struct RoutePoint {
  MeasuredPoint point;
  std::uint32_t edge_index = 0;  // index into Route::edges
  bool interpolated = false;
};

// A route flattened into one point stream in travel order.
struct RoutePointSequence {
  std::string route_name;
  Orientation orientation = Orientation::kForward;
  std::vector<std::string> edge_keys;  // parallel to Route::edges
  std::vector<RoutePoint> points;
  bool normalized = false;

  const std::string& EdgeKeyOf(const RoutePoint& p) const {
    return edge_keys[p.edge_index];
  }
};

struct NormalizeOptions {
  double gap_threshold_m = 12.0;
  double interval_m = 10.0;
};

// Concatenates edge geometries, densifies gaps wider than the threshold,
// negates measures of reversed routes and stable-sorts by measure.
// Throws ConflationError(kDegenerateRoute) when fewer than two points remain.
RoutePointSequence NormalizeRoute(const Route& route,
                                  const NormalizeOptions& options = {});

}  // namespace lrsconflate

#endif  // LRSCONFLATE_LRS_H_
