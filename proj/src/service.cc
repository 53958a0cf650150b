#include "lrsconflate/service.h"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "lrsconflate/errors.h"
#include "lrsconflate/results_io.h"
#include "text_util.h"

namespace lrsconflate {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

ResultsService::Response Json(int status, const ojson& body) {
  return {status, body.dump()};
}

ResultsService::Response Error(int status, const std::string& message) {
  return Json(status, {{"error", message}});
}

std::string_view StatusName(VerdictStatus s) {
  return s == VerdictStatus::kAccepted ? "Accepted" : "Flagged";
}

ojson VerdictJson(const Verdict& v) {
  ojson j;
  j["route_name"] = v.route_name;
  j["reviewer"] = v.reviewer;
  j["status"] = StatusName(v.status);
  j["note"] = v.note ? ojson(*v.note) : ojson(nullptr);
  j["timestamp"] = v.timestamp;
  return j;
}

std::optional<XBarBand> ParseBand(std::string value) {
  value = Trim(value);
  if (!value.empty() && value.back() == '+') value.pop_back();
  for (const auto& band : DefaultBands()) {
    std::string label = band.label;
    if (!label.empty() && label.back() == '+') label.pop_back();
    if (label == value) return band;
  }
  return std::nullopt;
}

}  // namespace

struct ResultsService::Impl {
  fs::path dir;
  std::vector<RouteSummary> routes;
  std::map<std::string, std::size_t> route_index;
  std::map<std::string, std::vector<EdgeQuality>> edges_of;
  std::map<std::string, std::vector<ConflationKeyRow>> key_of;
  std::map<std::string, std::vector<LrsEdge>> lrs_of;
  std::map<OsmId, OsmWay> ways;
  std::string summary_json;

  mutable std::mutex verdict_mu;
  std::vector<Verdict> verdicts;

  httplib::Server server;
};

ResultsService::ResultsService(const fs::path& results_dir)
    : impl_(std::make_unique<Impl>()) {
  Impl& s = *impl_;
  s.dir = results_dir;
  if (!fs::is_directory(results_dir)) {
    throw ConflationError(ErrorCode::kIoError, "results directory '" +
                                                   results_dir.string() +
                                                   "' not found");
  }
  s.routes = ReadRouteSummaries(results_dir);
  for (std::size_t i = 0; i < s.routes.size(); ++i) {
    s.route_index[s.routes[i].route_name] = i;
  }
  for (auto& q : ReadEdgeQuality(results_dir)) {
    s.edges_of[q.route_name].push_back(std::move(q));
  }
  {
    std::ifstream in(results_dir / results_files::kKey);
    for (auto& row : ReadConflationKeyCsv(in)) {
      s.key_of[row.route_name].push_back(std::move(row));
    }
  }
  {
    std::ifstream in(results_dir / results_files::kLrsEdges);
    std::ostringstream buf;
    buf << in.rdbuf();
    for (auto& route : ParseLrsGeoJson(buf.str())) {
      s.lrs_of[route.route_name] = std::move(route.edges);
    }
  }
  s.ways = ReadOsmWays(results_dir);
  {
    std::ifstream in(results_dir / results_files::kQualityJson);
    std::ostringstream buf;
    buf << in.rdbuf();
    s.summary_json = buf.str();
  }
  std::ifstream in(results_dir / results_files::kVerdicts);
  std::string line;
  while (std::getline(in, line)) {
    try {
      const auto j = ojson::parse(line);
      Verdict v;
      v.route_name = j.at("route_name").get<std::string>();
      v.reviewer = j.at("reviewer").get<std::string>();
      v.status = j.at("status").get<std::string>() == "Flagged"
                     ? VerdictStatus::kFlagged
                     : VerdictStatus::kAccepted;
      if (j.contains("note") && j["note"].is_string()) {
        v.note = j["note"].get<std::string>();
      }
      v.timestamp = j.value("timestamp", std::int64_t{0});
      s.verdicts.push_back(std::move(v));
    } catch (const nlohmann::json::exception&) {
      spdlog::warn("ignoring unreadable verdict line");
    }
  }
}

ResultsService::~ResultsService() { Stop(); }

ResultsService::Response ResultsService::ListRoutes(
    const std::multimap<std::string, std::string>& query) const {
  const Impl& s = *impl_;
  auto param = [&](const char* name) -> std::optional<std::string> {
    auto it = query.find(name);
    if (it == query.end()) return std::nullopt;
    return it->second;
  };
  std::size_t offset = 0;
  std::size_t limit = 50;
  try {
    if (auto v = param("offset")) offset = std::stoul(*v);
    if (auto v = param("limit")) limit = std::min<std::size_t>(std::stoul(*v), 1000);
  } catch (const std::logic_error&) {
    return Error(400, "offset and limit must be non-negative integers");
  }
  std::optional<XBarBand> band;
  if (auto v = param("band")) {
    band = ParseBand(*v);
    if (!band) return Error(400, "band must be one of 0-6, 6-12, 12+");
  }
  const auto outcome = param("outcome");
  const auto category = param("category");

  std::set<std::string> reviewed;
  {
    std::lock_guard lock(s.verdict_mu);
    for (const auto& v : s.verdicts) reviewed.insert(v.route_name);
  }

  ojson items = ojson::array();
  std::size_t total = 0;
  for (const auto& r : s.routes) {
    if (outcome && RouteOutcomeName(r.outcome) != *outcome) continue;
    if (category && r.route_category != *category) continue;
    ojson edges = ojson::array();
    if (auto it = s.edges_of.find(r.route_name); it != s.edges_of.end()) {
      for (const auto& q : it->second) {
        if (band && !band->Contains(q.x_bar)) continue;
        edges.push_back({{"edge_rte_key", q.edge_rte_key},
                         {"x_bar_m", q.x_bar},
                         {"point_count", q.point_count}});
      }
    }
    if (band && edges.empty()) continue;
    if (total++ < offset || items.size() >= limit) continue;
    items.push_back({{"route_name", r.route_name},
                     {"route_category", r.route_category},
                     {"orientation", OrientationName(r.orientation)},
                     {"outcome", RouteOutcomeName(r.outcome)},
                     {"x_bar_m", r.x_bar},
                     {"point_count", r.point_count},
                     {"matched_count", r.matched_count},
                     {"reviewed", reviewed.count(r.route_name) > 0},
                     {"edges", edges}});
  }
  return Json(200, {{"total", total},
                    {"offset", offset},
                    {"limit", limit},
                    {"routes", items}});
}

ResultsService::Response ResultsService::GetRoute(
    std::string_view route_name) const {
  const Impl& s = *impl_;
  auto it = s.route_index.find(std::string(route_name));
  if (it == s.route_index.end()) {
    return Error(404, "unknown route '" + std::string(route_name) + "'");
  }
  const RouteSummary& summary = s.routes[it->second];
  RouteMatchResult rows;
  try {
    rows = ReadRouteRows(s.dir, summary);
  } catch (const ConflationError& e) {
    return Error(500, e.what());
  }

  ojson lrs = ojson::array();
  if (auto e = s.lrs_of.find(summary.route_name); e != s.lrs_of.end()) {
    for (const auto& edge : e->second) {
      ojson coords = ojson::array();
      ojson measures = ojson::array();
      for (const auto& p : edge.geometry) {
        coords.push_back({p.point.lon, p.point.lat});
        measures.push_back(p.m);
      }
      lrs.push_back({{"type", "Feature"},
                     {"properties",
                      {{"edge_rte_key", edge.edge_rte_key},
                       {"edge_sequence", edge.edge_sequence},
                       {"route_category", edge.route_category},
                       {"master_route_name", edge.master_route_name},
                       {"measures", measures}}},
                     {"geometry",
                      {{"type", "LineString"}, {"coordinates", coords}}}});
    }
  }

  ojson points = ojson::array();
  std::set<OsmId> used;
  for (std::size_t i = 0; i < rows.rows.size(); ++i) {
    const RouteRow& row = rows.rows[i];
    const MatchRow& m = row.match;
    if (row.matched()) used.insert(m.osm_id);
    points.push_back(
        {{"type", "Feature"},
         {"properties",
          {{"seq", i},
           {"edge_rte_key", row.edge_rte_key},
           {"m", m.input.m},
           {"status", row.matched() ? "Matched" : "Unmatched"},
           {"osm_id", row.matched() ? ojson(m.osm_id) : ojson(nullptr)},
           {"snap_dist_m", m.snap_dist_m},
           {"interpolated", row.interpolated},
           {"seam", row.seam},
           {"original", {m.input.point.lon, m.input.point.lat}}}},
         {"geometry",
          {{"type", "Point"},
           {"coordinates", {m.matched.lon, m.matched.lat}}}}});
  }

  ojson ways = ojson::array();
  for (OsmId id : used) {
    auto w = s.ways.find(id);
    if (w == s.ways.end()) continue;
    ojson coords = ojson::array();
    for (const auto& p : w->second.geometry) coords.push_back({p.lon, p.lat});
    ways.push_back({{"type", "Feature"},
                    {"properties",
                     {{"osm_id", id},
                      {"highway", w->second.highway},
                      {"oneway", w->second.oneway}}},
                    {"geometry",
                     {{"type", "LineString"}, {"coordinates", coords}}}});
  }

  ojson key = ojson::array();
  if (auto k = s.key_of.find(summary.route_name); k != s.key_of.end()) {
    for (const auto& r : k->second) {
      key.push_back({{"edge_rte_key", r.edge_rte_key},
                     {"osm_id", r.osm_id},
                     {"m_min", r.m_min},
                     {"m_max", r.m_max},
                     {"mean_snap_dist_m", r.mean_snap_dist_m},
                     {"point_count", r.point_count}});
    }
  }
  ojson edges = ojson::array();
  if (auto e = s.edges_of.find(summary.route_name); e != s.edges_of.end()) {
    for (const auto& q : e->second) {
      edges.push_back({{"edge_rte_key", q.edge_rte_key},
                       {"x_bar_m", q.x_bar},
                       {"point_count", q.point_count},
                       {"miles", q.miles}});
    }
  }

  return Json(
      200,
      {{"route",
        {{"route_name", summary.route_name},
         {"route_category", summary.route_category},
         {"orientation", OrientationName(summary.orientation)},
         {"outcome", RouteOutcomeName(summary.outcome)},
         {"failure_reason", summary.failure_reason},
         {"x_bar_m", summary.x_bar},
         {"point_count", summary.point_count},
         {"matched_count", summary.matched_count}}},
       {"lrs", {{"type", "FeatureCollection"}, {"features", lrs}}},
       {"matched_points", {{"type", "FeatureCollection"}, {"features", points}}},
       {"osm_ways", {{"type", "FeatureCollection"}, {"features", ways}}},
       {"edges", edges},
       {"key_rows", key}});
}

ResultsService::Response ResultsService::GetSummary() const {
  return {200, impl_->summary_json};
}

ResultsService::Response ResultsService::ListVerdicts() const {
  ojson list = ojson::array();
  std::lock_guard lock(impl_->verdict_mu);
  for (const auto& v : impl_->verdicts) list.push_back(VerdictJson(v));
  return Json(200, {{"verdicts", list}});
}

ResultsService::Response ResultsService::PostVerdict(std::string_view body) {
  Impl& s = *impl_;
  ojson j;
  try {
    j = ojson::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    return Error(400, "verdict body is not valid JSON");
  }
  if (!j.is_object()) return Error(400, "verdict must be a JSON object");
  auto string_field = [&](const char* name) -> std::optional<std::string> {
    if (!j.contains(name) || !j[name].is_string()) return std::nullopt;
    return j[name].get<std::string>();
  };
  Verdict v;
  const auto route = string_field("route_name");
  const auto reviewer = string_field("reviewer");
  const auto status = string_field("status");
  if (!route || !reviewer || Trim(*reviewer).empty() || !status) {
    return Error(400, "verdict needs route_name, reviewer and status strings");
  }
  if (!s.route_index.count(*route)) {
    return Error(400, "unknown route '" + *route + "'");
  }
  if (*status == "Accepted") {
    v.status = VerdictStatus::kAccepted;
  } else if (*status == "Flagged") {
    v.status = VerdictStatus::kFlagged;
  } else {
    return Error(400, "status must be Accepted or Flagged");
  }
  if (j.contains("note") && !j["note"].is_null()) {
    if (!j["note"].is_string()) return Error(400, "note must be a string");
    v.note = j["note"].get<std::string>();
  }
  v.route_name = *route;
  v.reviewer = *reviewer;
  v.timestamp = std::chrono::duration_cast<std::chrono::seconds>(
                    std::chrono::system_clock::now().time_since_epoch())
                    .count();

  const std::string line = VerdictJson(v).dump() + "\n";
  std::lock_guard lock(s.verdict_mu);
  const std::string path = (s.dir / results_files::kVerdicts).string();
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) return Error(500, "cannot open verdict log");
  const ssize_t written = ::write(fd, line.data(), line.size());
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (written != static_cast<ssize_t>(line.size()) || !synced) {
    return Error(500, "cannot persist verdict");
  }
  s.verdicts.push_back(v);
  return Json(201, VerdictJson(v));
}

void ResultsService::MountStatic(const fs::path& dir) {
  impl_->server.set_mount_point("/", dir.string());
}

std::optional<int> ResultsService::Bind(const std::string& host, int port) {
  httplib::Server& server = impl_->server;
  // The library default also sets SO_REUSEPORT, which would let a second
  // instance share a port that is already in use.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  auto reply = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server.Get("/routes", [this, reply](const httplib::Request& req,
                                      httplib::Response& res) {
    std::multimap<std::string, std::string> query(req.params.begin(),
                                                  req.params.end());
    reply(res, ListRoutes(query));
  });
  server.Get(R"(/routes/(.+))", [this, reply](const httplib::Request& req,
                                              httplib::Response& res) {
    reply(res, GetRoute(req.matches[1].str()));
  });
  server.Get("/summary", [this, reply](const httplib::Request&,
                                       httplib::Response& res) {
    reply(res, GetSummary());
  });
  server.Get("/verdicts", [this, reply](const httplib::Request&,
                                        httplib::Response& res) {
    reply(res, ListVerdicts());
  });
  server.Post("/verdicts", [this, reply](const httplib::Request& req,
                                         httplib::Response& res) {
    reply(res, PostVerdict(req.body));
  });

  if (port == 0) {
    const int bound = server.bind_to_any_port(host);
    if (bound <= 0) return std::nullopt;
    return bound;
  }
  if (!server.bind_to_port(host, port)) return std::nullopt;
  return port;
}

bool ResultsService::Serve() { return impl_->server.listen_after_bind(); }

void ResultsService::Stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace lrsconflate
