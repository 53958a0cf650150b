#include "lrsconflate/lrs.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "lrsconflate/errors.h"
#include "text_util.h"

namespace lrsconflate {
namespace {

using nlohmann::json;

[[noreturn]] void Fail(ErrorCode code, const std::string& message) {
  throw ConflationError(code, message);
}

std::string DescribeFeature(std::size_t index, const json& props) {
  std::string out = "feature #" + std::to_string(index);
  if (props.is_object()) {
    auto it = props.find("edge_rte_key");
    if (it != props.end() && it->is_string()) {
      out += " (edge_rte_key '" + it->get<std::string>() + "')";
    }
  }
  return out;
}

std::string RequireString(const json& props, const char* field,
                          const std::string& where) {
  auto it = props.find(field);
  if (it == props.end() || it->is_null()) {
    Fail(ErrorCode::kMissingField,
         where + " lacks required property '" + field + "'");
  }
  if (!it->is_string()) {
    Fail(ErrorCode::kMalformedInput,
         where + ": property '" + field + "' must be a string");
  }
  return it->get<std::string>();
}

std::int64_t RequireInteger(const json& props, const char* field,
                            const std::string& where) {
  auto it = props.find(field);
  if (it == props.end() || it->is_null()) {
    Fail(ErrorCode::kMissingField,
         where + " lacks required property '" + field + "'");
  }
  if (it->is_number_integer()) return it->get<std::int64_t>();
  if (it->is_number_float()) {
    const double v = it->get<double>();
    if (std::isfinite(v) && v == std::floor(v)) {
      return static_cast<std::int64_t>(v);
    }
  }
  Fail(ErrorCode::kMalformedInput,
       where + ": property '" + field + "' must be an integer");
}

void ValidateGeometry(const MeasuredPolyline& geometry,
                      const std::string& where) {
  if (geometry.size() < 2) {
    Fail(ErrorCode::kMalformedInput,
         where + ": geometry needs at least 2 vertices");
  }
  for (const auto& p : geometry) {
    if (!IsValid(p.point) || !std::isfinite(p.m)) {
      Fail(ErrorCode::kMalformedInput,
           where + ": vertex outside WGS84 range or non-finite measure");
    }
  }
}

// Groups edges by route name, sorts them and rejects duplicates.
std::vector<Route> AssembleRoutes(std::vector<LrsEdge> edges) {
  std::map<std::string, Route> by_name;
  for (auto& edge : edges) {
    Route& route = by_name[edge.route_name];
    route.route_name = edge.route_name;
    route.edges.push_back(std::move(edge));
  }
  std::vector<Route> routes;
  routes.reserve(by_name.size());
  for (auto& [name, route] : by_name) {
    std::stable_sort(route.edges.begin(), route.edges.end(),
                     [](const LrsEdge& a, const LrsEdge& b) {
                       return a.edge_sequence < b.edge_sequence;
                     });
    std::set<std::string> keys;
    for (std::size_t i = 0; i < route.edges.size(); ++i) {
      const LrsEdge& e = route.edges[i];
      if (i > 0 && route.edges[i - 1].edge_sequence == e.edge_sequence) {
        Fail(ErrorCode::kDuplicateSequence,
             "route '" + name + "': edges '" +
                 route.edges[i - 1].edge_rte_key + "' and '" +
                 e.edge_rte_key + "' share edge_sequence " +
                 std::to_string(e.edge_sequence));
      }
      if (!keys.insert(e.edge_rte_key).second) {
        Fail(ErrorCode::kMalformedInput,
             "route '" + name + "': duplicate edge_rte_key '" +
                 e.edge_rte_key + "'");
      }
    }
    routes.push_back(std::move(route));
  }
  return routes;
}

// Parses the body of `LINESTRING M (x y m, x y m, ...)`.
MeasuredPolyline ParseLineStringM(std::string_view wkt,
                                  const std::string& where) {
  auto upper = std::string(wkt);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  const auto open = upper.find('(');
  const auto close = upper.rfind(')');
  if (upper.find("LINESTRING") == std::string::npos ||
      open == std::string::npos || close == std::string::npos ||
      close < open) {
    Fail(ErrorCode::kMalformedInput,
         where + ": expected a LINESTRING M literal");
  }
  MeasuredPolyline out;
  std::string body(wkt.substr(open + 1, close - open - 1));
  std::stringstream vertices(body);
  std::string vertex;
  while (std::getline(vertices, vertex, ',')) {
    std::istringstream coords(vertex);
    MeasuredPoint p;
    if (!(coords >> p.point.lon >> p.point.lat >> p.m)) {
      Fail(ErrorCode::kMalformedInput,
           where + ": LINESTRING M vertices need x y m values");
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace

std::string_view OrientationName(Orientation o) {
  return o == Orientation::kForward ? "Forward" : "Reversed";
}

struct OrientationClassifier::Impl {
  std::regex direction;
  std::optional<std::regex> nonprime;
  std::optional<std::regex> undirected;
  std::vector<std::string> reversed;
};

OrientationClassifier::OrientationClassifier(const OrientationRules& rules)
    : impl_(std::make_unique<Impl>()) {
  try {
    impl_->direction = std::regex(rules.direction_pattern);
    if (!rules.nonprime_pattern.empty()) {
      impl_->nonprime = std::regex(rules.nonprime_pattern);
    }
    if (!rules.undirected_pattern.empty()) {
      impl_->undirected = std::regex(rules.undirected_pattern);
    }
  } catch (const std::regex_error& e) {
    Fail(ErrorCode::kInvalidArgument,
         std::string("invalid orientation pattern: ") + e.what());
  }
  impl_->reversed = rules.reversed_directions;
}

OrientationClassifier::~OrientationClassifier() = default;
OrientationClassifier::OrientationClassifier(OrientationClassifier&&) noexcept =
    default;
OrientationClassifier& OrientationClassifier::operator=(
    OrientationClassifier&&) noexcept = default;

Orientation OrientationClassifier::Classify(std::string_view route_name) const {
  const std::string name(route_name);
  std::smatch match;
  const bool nonprime =
      impl_->nonprime && std::regex_search(name, *impl_->nonprime);
  std::string direction;
  if (std::regex_search(name, match, impl_->direction)) {
    direction = match.size() > 1 ? match[1].str() : match[0].str();
  }
  if (direction.empty() && !nonprime &&
      !(impl_->undirected && std::regex_search(name, *impl_->undirected))) {
    Fail(ErrorCode::kUnclassifiableName,
         "route name '" + name + "' matches no orientation rule");
  }
  const bool reversed_dir =
      !direction.empty() &&
      std::find(impl_->reversed.begin(), impl_->reversed.end(), direction) !=
          impl_->reversed.end();
  return nonprime || reversed_dir ? Orientation::kReversed
                                  : Orientation::kForward;
}

Orientation ClassifyOrientation(std::string_view route_name,
                                const OrientationRules& rules) {
  return OrientationClassifier(rules).Classify(route_name);
}

std::vector<Route> ParseLrsGeoJson(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    Fail(ErrorCode::kMalformedInput,
         "invalid JSON at " + DescribeOffset(text, e.byte) + ": " + ParseErrorDetail(e.what()));
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array()) {
    Fail(ErrorCode::kMalformedInput, "expected a GeoJSON FeatureCollection");
  }
  std::vector<LrsEdge> edges;
  const json& features = doc["features"];
  edges.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const json& f = features[i];
    const json props =
        f.contains("properties") ? f["properties"] : json::object();
    const std::string where = DescribeFeature(i, props);
    if (!props.is_object()) {
      Fail(ErrorCode::kMalformedInput, where + ": properties must be an object");
    }
    LrsEdge edge;
    edge.edge_rte_key = RequireString(props, "edge_rte_key", where);
    if (edge.edge_rte_key.empty()) {
      Fail(ErrorCode::kMalformedInput, where + ": empty edge_rte_key");
    }
    edge.route_name = RequireString(props, "route_name", where);
    edge.master_route_name = RequireString(props, "master_route_name", where);
    edge.route_category = RequireString(props, "route_category", where);
    edge.edge_sequence = RequireInteger(props, "edge_sequence", where);

    const json* geom = f.contains("geometry") ? &f["geometry"] : nullptr;
    if (geom == nullptr || !geom->is_object() ||
        geom->value("type", "") != "LineString" ||
        !geom->contains("coordinates") || !(*geom)["coordinates"].is_array()) {
      Fail(ErrorCode::kMalformedInput, where + ": geometry must be a LineString");
    }
    for (const json& c : (*geom)["coordinates"]) {
      if (!c.is_array() || c.size() < 3 || !c[0].is_number() ||
          !c[1].is_number() || !c[2].is_number()) {
        Fail(ErrorCode::kMalformedInput,
             where + ": coordinates must be [lon, lat, m] triples");
      }
      edge.geometry.push_back(
          {{c[0].get<double>(), c[1].get<double>()}, c[2].get<double>()});
    }
    ValidateGeometry(edge.geometry, where);
    edges.push_back(std::move(edge));
  }
  return AssembleRoutes(std::move(edges));
}

std::vector<Route> ParseLrsCsv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.Next(header)) {
    Fail(ErrorCode::kMalformedInput, "empty CSV input");
  }
  const std::vector<std::string> expected = {
      "edge_rte_key",  "route_name", "master_route_name", "route_category",
      "edge_sequence", "wkt"};
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column[Trim(header[i])] = i;
  for (const auto& name : expected) {
    if (!column.count(name)) {
      Fail(ErrorCode::kMissingField, "CSV header lacks column '" + name + "'");
    }
  }
  std::vector<LrsEdge> edges;
  std::vector<std::string> fields;
  while (reader.Next(fields)) {
    if (fields.size() == 1 && Trim(fields[0]).empty()) continue;
    const std::string where = "CSV line " + std::to_string(reader.line());
    auto get = [&](const std::string& name) -> std::string {
      const std::size_t idx = column[name];
      if (idx >= fields.size() || fields[idx].empty()) {
        Fail(ErrorCode::kMissingField,
             where + " lacks required field '" + name + "'");
      }
      return fields[idx];
    };
    LrsEdge edge;
    edge.edge_rte_key = get("edge_rte_key");
    edge.route_name = get("route_name");
    edge.master_route_name = get("master_route_name");
    edge.route_category = get("route_category");
    const std::string seq = Trim(get("edge_sequence"));
    auto [ptr, ec] =
        std::from_chars(seq.data(), seq.data() + seq.size(), edge.edge_sequence);
    if (ec != std::errc() || ptr != seq.data() + seq.size()) {
      Fail(ErrorCode::kMalformedInput,
           where + ": edge_sequence must be an integer");
    }
    edge.geometry = ParseLineStringM(get("wkt"), where);
    ValidateGeometry(edge.geometry, where);
    edges.push_back(std::move(edge));
  }
  return AssembleRoutes(std::move(edges));
}

std::vector<Route> LoadRoutes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    Fail(ErrorCode::kIoError, "cannot open LRS input '" + path.string() + "'");
  }
  try {
    if (path.extension() == ".csv") return ParseLrsCsv(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return ParseLrsGeoJson(buf.str());
  } catch (const ConflationError& e) {
    throw ConflationError(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<std::string> ClassifyRoutes(std::vector<Route>& routes,
                                        const OrientationRules& rules) {
  const OrientationClassifier classifier(rules);
  std::vector<std::string> skipped;
  std::vector<Route> kept;
  kept.reserve(routes.size());
  for (auto& route : routes) {
    try {
      route.orientation = classifier.Classify(route.route_name);
      kept.push_back(std::move(route));
    } catch (const ConflationError& e) {
      spdlog::warn("skipping route: {}", e.what());
      skipped.push_back(route.route_name);
    }
  }
  routes = std::move(kept);
  return skipped;
}

RoutePointSequence NormalizeRoute(const Route& route,
                                  const NormalizeOptions& options) {
  RoutePointSequence seq;
  seq.route_name = route.route_name;
  seq.orientation = route.orientation;
  seq.edge_keys.reserve(route.edges.size());

  std::vector<RoutePoint> raw;
  for (std::uint32_t e = 0; e < route.edges.size(); ++e) {
    seq.edge_keys.push_back(route.edges[e].edge_rte_key);
    for (const auto& p : route.edges[e].geometry) raw.push_back({p, e, false});
  }
  if (raw.size() < 2) {
    Fail(ErrorCode::kDegenerateRoute,
         "route '" + route.route_name + "' has fewer than 2 points");
  }

  // Measure range per edge; interpolated points are clamped into the range of
  // the edge they are attributed to.
  std::vector<std::pair<double, double>> edge_range;
  edge_range.reserve(route.edges.size());
  for (const auto& edge : route.edges) {
    auto [lo, hi] = std::minmax_element(
        edge.geometry.begin(), edge.geometry.end(),
        [](const MeasuredPoint& a, const MeasuredPoint& b) { return a.m < b.m; });
    edge_range.emplace_back(lo->m, hi->m);
  }

  seq.points.reserve(raw.size());
  seq.points.push_back(raw.front());
  for (std::size_t i = 1; i < raw.size(); ++i) {
    const RoutePoint& prev = raw[i - 1];
    const RoutePoint& cur = raw[i];
    if (HaversineMeters(prev.point.point, cur.point.point) >
        options.gap_threshold_m) {
      const auto [lo, hi] = edge_range[prev.edge_index];
      for (auto p :
           InterpolateGap(prev.point, cur.point, options.interval_m)) {
        p.m = std::clamp(p.m, lo, hi);
        seq.points.push_back({p, prev.edge_index, true});
      }
    }
    seq.points.push_back(cur);
  }

  if (route.orientation == Orientation::kReversed) {
    for (auto& p : seq.points) p.point.m = -p.point.m;
  }
  std::stable_sort(seq.points.begin(), seq.points.end(),
                   [](const RoutePoint& a, const RoutePoint& b) {
                     return a.point.m < b.point.m;
                   });
  seq.normalized = true;
  return seq;
}

}  // namespace lrsconflate
