#include "lrsconflate/results_io.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "format_util.h"
#include "lrsconflate/errors.h"
#include "text_util.h"

namespace lrsconflate {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

constexpr const char* kRowsHeader =
    "seq,edge_rte_key,m,lon,lat,matched_lon,matched_lat,osm_id,arc_id,"
    "offset_m,way_offset_m,snap_dist_m,leg,status,interpolated,seam,batch";

std::ofstream OpenOut(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ConflationError(ErrorCode::kIoError,
                          "cannot write '" + path.string() + "'");
  }
  return out;
}

std::ifstream OpenIn(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConflationError(ErrorCode::kIoError,
                          "cannot read '" + path.string() + "'");
  }
  return in;
}

std::string Slurp(const fs::path& path) {
  std::ifstream in = OpenIn(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ojson LineString(const std::vector<GeoPoint>& pts) {
  ojson coords = ojson::array();
  for (const auto& p : pts) coords.push_back({p.lon, p.lat});
  return {{"type", "LineString"}, {"coordinates", coords}};
}

ojson WayFeature(const OsmWay& way) {
  ojson props;
  props["osm_id"] = way.osm_id;
  props["highway"] = way.highway;
  props["oneway"] = way.oneway ? "yes" : "no";
  if (!way.tags.empty()) {
    ojson tags = ojson::object();
    for (const auto& [k, v] : way.tags) tags[k] = v;
    props["tags"] = tags;
  }
  return {{"type", "Feature"},
          {"properties", props},
          {"geometry", LineString(way.geometry)}};
}

ojson LrsEdgeFeature(const LrsEdge& edge) {
  ojson coords = ojson::array();
  for (const auto& p : edge.geometry) {
    coords.push_back({p.point.lon, p.point.lat, p.m});
  }
  return {{"type", "Feature"},
          {"properties",
           {{"edge_rte_key", edge.edge_rte_key},
            {"route_name", edge.route_name},
            {"master_route_name", edge.master_route_name},
            {"route_category", edge.route_category},
            {"edge_sequence", edge.edge_sequence}}},
          {"geometry", {{"type", "LineString"}, {"coordinates", coords}}}};
}

RouteOutcome ParseOutcome(const std::string& s) {
  if (s == "Success") return RouteOutcome::kSuccess;
  if (s == "PartialFailure") return RouteOutcome::kPartialFailure;
  return RouteOutcome::kFailure;
}

void WriteEdgeQualityCsv(std::ostream& out,
                         std::span<const EdgeQuality> qualities) {
  out << "route_name,edge_rte_key,master_route_name,route_category,x_bar_m,"
         "point_count,miles\n";
  for (const auto& q : qualities) {
    out << CsvEscape(q.route_name) << ',' << CsvEscape(q.edge_rte_key) << ','
        << CsvEscape(q.master_route_name) << ','
        << CsvEscape(q.route_category) << ',' << FormatFixed(q.x_bar) << ','
        << q.point_count << ',' << FormatFixed(q.miles) << '\n';
  }
}

std::string BandSamplesGeoJson(const fs::path& dir,
                               std::span<const BandSample> samples) {
  std::map<std::pair<std::string, std::string>, LrsEdge> edges;
  for (auto& route : ParseLrsGeoJson(Slurp(dir / results_files::kLrsEdges))) {
    for (auto& edge : route.edges) {
      edges[{edge.route_name, edge.edge_rte_key}] = std::move(edge);
    }
  }
  std::map<std::pair<std::string, std::string>, std::vector<OsmId>> osm_of;
  {
    std::ifstream in = OpenIn(dir / results_files::kKey);
    for (const auto& row : ReadConflationKeyCsv(in)) {
      osm_of[{row.route_name, row.edge_rte_key}].push_back(row.osm_id);
    }
  }
  const auto ways = ReadOsmWays(dir);

  ojson features = ojson::array();
  for (const auto& sample : samples) {
    for (const auto& q : sample.edges) {
      const auto key = std::make_pair(q.route_name, q.edge_rte_key);
      if (auto it = edges.find(key); it != edges.end()) {
        std::vector<GeoPoint> pts;
        for (const auto& p : it->second.geometry) pts.push_back(p.point);
        features.push_back(
            {{"type", "Feature"},
             {"properties",
              {{"layer", "lrs"},
               {"band", sample.band.label},
               {"route_name", q.route_name},
               {"edge_rte_key", q.edge_rte_key},
               {"x_bar_m", q.x_bar},
               {"stroke", "#1f4fd1"},
               {"stroke-width", 3}}},
             {"geometry", LineString(pts)}});
      }
      std::set<OsmId> seen;
      for (OsmId id : osm_of[key]) {
        if (!seen.insert(id).second) continue;
        auto way = ways.find(id);
        if (way == ways.end()) continue;
        features.push_back(
            {{"type", "Feature"},
             {"properties",
              {{"layer", "osm"},
               {"band", sample.band.label},
               {"route_name", q.route_name},
               {"edge_rte_key", q.edge_rte_key},
               {"osm_id", id},
               {"stroke", "#d11f1f"},
               {"stroke-width", 2},
               {"stroke-dasharray", "6 4"}}},
             {"geometry", LineString(way->second.geometry)}});
      }
    }
  }
  ojson doc = {{"type", "FeatureCollection"}, {"features", features}};
  return doc.dump() + "\n";
}

}  // namespace

void WriteRouteRowsCsv(std::ostream& out, const RouteMatchResult& result) {
  out << kRowsHeader << '\n';
  std::size_t seq = 0;
  for (const auto& row : result.rows) {
    const MatchRow& m = row.match;
    out << seq++ << ',' << CsvEscape(row.edge_rte_key) << ','
        << FormatFixed(m.input.m, 9) << ',' << FormatFixed(m.input.point.lon, 9)
        << ',' << FormatFixed(m.input.point.lat, 9) << ','
        << FormatFixed(m.matched.lon, 9) << ',' << FormatFixed(m.matched.lat, 9)
        << ',' << m.osm_id << ',' << m.arc_id << ',' << FormatFixed(m.offset_m)
        << ',' << FormatFixed(m.way_offset_m) << ','
        << FormatFixed(m.snap_dist_m) << ',' << m.leg << ','
        << (m.status == MatchStatus::kMatched ? "Matched" : "Unmatched") << ','
        << (row.interpolated ? 1 : 0) << ',' << (row.seam ? 1 : 0) << ','
        << row.batch << '\n';
  }
}

RouteMatchResult ReadRouteRowsCsv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> f;
  if (!reader.Next(f) || f.size() != 17 || f[0] != "seq") {
    throw ConflationError(ErrorCode::kMalformedInput,
                          "route rows file lacks the expected header");
  }
  RouteMatchResult result;
  while (reader.Next(f)) {
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != 17) {
      throw ConflationError(ErrorCode::kMalformedInput,
                            "route rows line " + std::to_string(reader.line()) +
                                " does not have 17 fields");
    }
    try {
      RouteRow row;
      row.edge_rte_key = f[1];
      MatchRow& m = row.match;
      m.input.m = std::stod(f[2]);
      m.input.point = {std::stod(f[3]), std::stod(f[4])};
      m.matched = {std::stod(f[5]), std::stod(f[6])};
      m.osm_id = std::stoll(f[7]);
      m.arc_id = static_cast<ArcId>(std::stoul(f[8]));
      m.offset_m = std::stod(f[9]);
      m.way_offset_m = std::stod(f[10]);
      m.snap_dist_m = std::stod(f[11]);
      m.leg = std::stoi(f[12]);
      m.status =
          f[13] == "Matched" ? MatchStatus::kMatched : MatchStatus::kUnmatched;
      row.interpolated = f[14] == "1";
      row.seam = f[15] == "1";
      row.batch = std::stoi(f[16]);
      result.rows.push_back(std::move(row));
    } catch (const std::logic_error&) {
      throw ConflationError(ErrorCode::kMalformedInput,
                            "route rows line " + std::to_string(reader.line()) +
                                " has a non-numeric field");
    }
  }
  return result;
}

void WriteResults(const fs::path& dir, std::span<const Route> routes,
                  std::span<const std::string> skipped_routes,
                  const RoadGraph& graph, const ConflationRun& run,
                  const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(dir / results_files::kRouteRowsDir, ec);
  if (ec) {
    throw ConflationError(ErrorCode::kIoError,
                          "cannot create '" + dir.string() + "': " + ec.message());
  }

  const std::vector<EdgeInfo> catalog = CatalogEdges(routes);
  {
    std::ofstream out = OpenOut(dir / results_files::kEdges);
    out << "route_name,edge_rte_key,master_route_name,route_category,"
           "edge_sequence,miles\n";
    for (const auto& e : catalog) {
      out << CsvEscape(e.route_name) << ',' << CsvEscape(e.edge_rte_key) << ','
          << CsvEscape(e.master_route_name) << ','
          << CsvEscape(e.route_category) << ',' << e.edge_sequence << ','
          << FormatFixed(e.miles, 9) << '\n';
    }
  }
  {
    ojson features = ojson::array();
    for (const auto& route : routes) {
      for (const auto& edge : route.edges) features.push_back(LrsEdgeFeature(edge));
    }
    std::ofstream out = OpenOut(dir / results_files::kLrsEdges);
    out << ojson{{"type", "FeatureCollection"}, {"features", features}}.dump()
        << '\n';
  }
  {
    std::set<OsmId> used;
    for (const auto& r : run.results) {
      for (const auto& row : r.rows) {
        if (row.matched()) used.insert(row.match.osm_id);
      }
    }
    ojson features = ojson::array();
    for (OsmId id : used) {
      if (const OsmWay* way = graph.FindWay(id)) features.push_back(WayFeature(*way));
    }
    std::ofstream out = OpenOut(dir / results_files::kOsmWays);
    out << ojson{{"type", "FeatureCollection"}, {"features", features}}.dump()
        << '\n';
  }

  std::map<std::string_view, std::string_view> category_of;
  for (const auto& route : routes) {
    if (!route.edges.empty()) {
      category_of[route.route_name] = route.edges.front().route_category;
    }
  }
  ojson summaries = ojson::array();
  for (std::size_t i = 0; i < run.results.size(); ++i) {
    const RouteMatchResult& r = run.results[i];
    const std::string file =
        std::string(results_files::kRouteRowsDir) + "/" + fmt::format("{:06d}.csv", i);
    {
      std::ofstream out = OpenOut(dir / file);
      WriteRouteRowsCsv(out, r);
    }
    std::size_t matched = 0;
    double snap_sum = 0.0;
    for (const auto& row : r.rows) {
      if (!row.matched()) continue;
      ++matched;
      snap_sum += row.match.snap_dist_m;
    }
    ojson s;
    s["route_name"] = r.route_name;
    s["orientation"] = OrientationName(r.orientation);
    s["outcome"] = RouteOutcomeName(r.outcome);
    s["failure_reason"] = r.failure_reason;
    s["route_category"] = std::string(category_of[r.route_name]);
    s["point_count"] = r.rows.size();
    s["matched_count"] = matched;
    s["batch_count"] = r.batch_count;
    s["x_bar_m"] = matched ? snap_sum / static_cast<double>(matched) : 0.0;
    s["rows_file"] = file;
    summaries.push_back(s);
  }
  {
    std::ofstream out = OpenOut(dir / results_files::kRoutes);
    out << summaries.dump(1) << '\n';
  }

  std::vector<FoldbackAudit> audit;
  const auto key =
      BuildConflationKey(run.results, config.foldback_span_mi, &audit);
  {
    std::ofstream out = OpenOut(dir / results_files::kKey);
    WriteConflationKeyCsv(out, key);
  }
  {
    std::ofstream out = OpenOut(dir / results_files::kFoldbackAudit);
    out << "route_name,edge_rte_key,osm_id,m,way_offset_m,snap_dist_m\n";
    for (const auto& a : audit) {
      out << CsvEscape(a.route_name) << ',' << CsvEscape(a.row.edge_rte_key)
          << ',' << a.row.match.osm_id << ',' << FormatFixed(a.row.m(), 9)
          << ',' << FormatFixed(a.row.match.way_offset_m) << ','
          << FormatFixed(a.row.match.snap_dist_m) << '\n';
    }
  }
  {
    const RunReport& rep = run.report;
    ojson j;
    j["format_version"] = kResultsFormatVersion;
    j["total_routes"] = rep.total_routes;
    j["success"] = rep.success;
    j["partial_failure"] = rep.partial_failure;
    j["failure"] = rep.failure;
    j["skipped_routes"] = skipped_routes;
    j["edges_touched"] = rep.edges_touched;
    j["total_points"] = rep.total_points;
    j["matched_points"] = rep.matched_points;
    j["foldback_rows_removed"] = audit.size();
    j["parallelism"] = config.parallelism;
    j["wall_seconds"] = rep.wall_seconds;
    std::ofstream out = OpenOut(dir / results_files::kRunReport);
    out << j.dump(2) << '\n';
  }
  {
    ojson m;
    m["format_version"] = kResultsFormatVersion;
    m["files"] = {results_files::kKey,         results_files::kEdges,
                  results_files::kLrsEdges,    results_files::kOsmWays,
                  results_files::kRoutes,      results_files::kFoldbackAudit,
                  results_files::kEdgeQuality, results_files::kQualityText,
                  results_files::kQualityJson, results_files::kHistograms,
                  results_files::kBandSamples, results_files::kRunReport};
    std::ofstream out = OpenOut(dir / results_files::kManifest);
    out << m.dump(2) << '\n';
  }

  RegenerateQuality(dir, config.band_sample_size, config.sample_seed);
}

std::vector<RouteSummary> ReadRouteSummaries(const fs::path& dir) {
  ojson doc;
  try {
    doc = ojson::parse(Slurp(dir / results_files::kRoutes));
  } catch (const nlohmann::json::exception& e) {
    throw ConflationError(ErrorCode::kMalformedInput,
                          std::string("routes.json: ") + e.what());
  }
  std::vector<RouteSummary> out;
  for (const auto& s : doc) {
    RouteSummary r;
    r.route_name = s.at("route_name").get<std::string>();
    r.orientation = s.at("orientation").get<std::string>() == "Reversed"
                        ? Orientation::kReversed
                        : Orientation::kForward;
    r.outcome = ParseOutcome(s.at("outcome").get<std::string>());
    r.failure_reason = s.value("failure_reason", "");
    r.route_category = s.value("route_category", "");
    r.point_count = s.value("point_count", std::size_t{0});
    r.matched_count = s.value("matched_count", std::size_t{0});
    r.batch_count = s.value("batch_count", std::size_t{0});
    r.x_bar = s.value("x_bar_m", 0.0);
    r.rows_file = s.at("rows_file").get<std::string>();
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<EdgeInfo> ReadEdgeCatalog(const fs::path& dir) {
  std::ifstream in = OpenIn(dir / results_files::kEdges);
  CsvReader reader(in);
  std::vector<std::string> f;
  reader.Next(f);
  std::vector<EdgeInfo> out;
  while (reader.Next(f)) {
    if (f.size() != 6) continue;
    EdgeInfo e;
    e.route_name = f[0];
    e.edge_rte_key = f[1];
    e.master_route_name = f[2];
    e.route_category = f[3];
    e.edge_sequence = std::stoll(f[4]);
    e.miles = std::stod(f[5]);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<EdgeQuality> ReadEdgeQuality(const fs::path& dir) {
  std::ifstream in = OpenIn(dir / results_files::kEdgeQuality);
  CsvReader reader(in);
  std::vector<std::string> f;
  reader.Next(f);
  std::vector<EdgeQuality> out;
  while (reader.Next(f)) {
    if (f.size() != 7) continue;
    EdgeQuality q;
    q.route_name = f[0];
    q.edge_rte_key = f[1];
    q.master_route_name = f[2];
    q.route_category = f[3];
    q.x_bar = std::stod(f[4]);
    q.point_count = std::stoull(f[5]);
    q.miles = std::stod(f[6]);
    out.push_back(std::move(q));
  }
  return out;
}

RouteMatchResult ReadRouteRows(const fs::path& dir,
                               const RouteSummary& summary) {
  std::ifstream in = OpenIn(dir / summary.rows_file);
  RouteMatchResult r = ReadRouteRowsCsv(in);
  r.route_name = summary.route_name;
  r.orientation = summary.orientation;
  r.outcome = summary.outcome;
  r.failure_reason = summary.failure_reason;
  r.batch_count = summary.batch_count;
  return r;
}

std::map<OsmId, OsmWay> ReadOsmWays(const fs::path& dir) {
  std::map<OsmId, OsmWay> out;
  for (auto& way : ParseOsmGeoJson(Slurp(dir / results_files::kOsmWays), {})) {
    const OsmId id = way.osm_id;
    out[id] = std::move(way);
  }
  return out;
}

QualityReport RegenerateQuality(const fs::path& dir, std::size_t per_band,
                                std::uint64_t seed) {
  if (!fs::is_directory(dir)) {
    throw ConflationError(ErrorCode::kIoError,
                          "results directory '" + dir.string() + "' not found");
  }
  std::vector<RouteMatchResult> results;
  for (const auto& summary : ReadRouteSummaries(dir)) {
    results.push_back(ReadRouteRows(dir, summary));
  }
  const std::vector<EdgeInfo> catalog = ReadEdgeCatalog(dir);
  const std::vector<EdgeQuality> qualities =
      ComputeEdgeQuality(results, catalog);
  const QualityReport report =
      BuildQualityReport(qualities, TotalsFromCatalog(catalog));
  {
    std::ofstream out = OpenOut(dir / results_files::kEdgeQuality);
    WriteEdgeQualityCsv(out, qualities);
  }
  {
    std::ofstream out = OpenOut(dir / results_files::kQualityText);
    WriteQualityReportText(out, report);
  }
  {
    std::ofstream out = OpenOut(dir / results_files::kQualityJson);
    out << QualityReportJson(report);
  }
  {
    std::ofstream out = OpenOut(dir / results_files::kHistograms);
    WriteCategoryHistogramCsv(out, CategoryDistributions(qualities));
  }
  {
    const auto bands = DefaultBands();
    const auto samples = SampleBands(qualities, bands, per_band, seed);
    const std::string doc = BandSamplesGeoJson(dir, samples);
    std::ofstream out = OpenOut(dir / results_files::kBandSamples);
    out << doc;
  }
  return report;
}

}  // namespace lrsconflate
