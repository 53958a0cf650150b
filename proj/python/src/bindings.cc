#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <optional>

#include "lrsconflate/conflation_key.h"
#include "lrsconflate/errors.h"
#include "lrsconflate/geo.h"
#include "lrsconflate/lrs.h"
#include "lrsconflate/pipeline.h"
#include "lrsconflate/quality.h"
#include "lrsconflate/results_io.h"
#include "lrsconflate/road_graph.h"
#include "lrsconflate/run_config.h"

namespace py = pybind11;
using namespace lrsconflate;

namespace {

py::dict RowDict(const RouteRow& row) {
  py::dict d;
  d["edge_rte_key"] = row.edge_rte_key;
  d["m"] = row.m();
  d["lon"] = row.match.input.point.lon;
  d["lat"] = row.match.input.point.lat;
  d["matched"] = row.matched();
  d["osm_id"] = row.matched() ? py::object(py::int_(row.match.osm_id)) : py::none();
  d["matched_lon"] = row.match.matched.lon;
  d["matched_lat"] = row.match.matched.lat;
  d["way_offset_m"] = row.match.way_offset_m;
  d["snap_dist_m"] = row.match.snap_dist_m;
  d["leg"] = row.match.leg;
  d["interpolated"] = row.interpolated;
  d["seam"] = row.seam;
  d["batch"] = row.batch;
  return d;
}

py::dict KeyRowDict(const ConflationKeyRow& r) {
  py::dict d;
  d["route_name"] = r.route_name;
  d["edge_rte_key"] = r.edge_rte_key;
  d["osm_id"] = r.osm_id;
  d["m_min"] = r.m_min;
  d["m_max"] = r.m_max;
  d["mean_snap_dist_m"] = r.mean_snap_dist_m;
  d["point_count"] = r.point_count;
  return d;
}

py::dict ReportDict(const RunReport& r) {
  py::dict d;
  d["total_routes"] = r.total_routes;
  d["success"] = r.success;
  d["partial_failure"] = r.partial_failure;
  d["failure"] = r.failure;
  d["edges_touched"] = r.edges_touched;
  d["total_points"] = r.total_points;
  d["matched_points"] = r.matched_points;
  d["wall_seconds"] = r.wall_seconds;
  return d;
}

// The JSON writer already defines the report's shape; reuse it.
py::object ReportObject(const QualityReport& report) {
  return py::module_::import("json").attr("loads")(QualityReportJson(report));
}

}  // namespace

PYBIND11_MODULE(_lrsconflate, m) {
  // Released on purpose: the type lives as long as the interpreter.
  static py::handle error =
      py::exception<ConflationError>(m, "ConflationError").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConflationError& e) {
      py::object instance = error(e.what());
      instance.attr("code") = std::string(ErrorCodeName(e.code()));
      PyErr_SetObject(error.ptr(), instance.ptr());
    }
  });

  m.def(
      "haversine_m",
      [](double lon1, double lat1, double lon2, double lat2) {
        return HaversineMeters({lon1, lat1}, {lon2, lat2});
      },
      py::arg("lon1"), py::arg("lat1"), py::arg("lon2"), py::arg("lat2"));

  m.def(
      "nearest_rank_percentile",
      [](std::vector<double> values, double percentile) {
        std::sort(values.begin(), values.end());
        return NearestRankPercentile(values, percentile);
      },
      py::arg("values"), py::arg("percentile"));

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_property(
          "sigma_z", [](const RunConfig& c) { return c.pipeline.matcher.sigma_z; },
          [](RunConfig& c, double v) { c.pipeline.matcher.sigma_z = v; })
      .def_property(
          "beta", [](const RunConfig& c) { return c.pipeline.matcher.beta; },
          [](RunConfig& c, double v) { c.pipeline.matcher.beta = v; })
      .def_property(
          "search_radius",
          [](const RunConfig& c) { return c.pipeline.matcher.search_radius; },
          [](RunConfig& c, double v) { c.pipeline.matcher.search_radius = v; })
      .def_property(
          "trigger_points",
          [](const RunConfig& c) { return c.pipeline.batching.trigger_points; },
          [](RunConfig& c, std::size_t v) { c.pipeline.batching.trigger_points = v; })
      .def_property(
          "batch_size",
          [](const RunConfig& c) { return c.pipeline.batching.batch_size; },
          [](RunConfig& c, std::size_t v) { c.pipeline.batching.batch_size = v; })
      .def_readwrite("highway_allowlist", &RunConfig::highway_allowlist)
      .def_readwrite("foldback_span_mi", &RunConfig::foldback_span_mi)
      .def_readwrite("band_sample_size", &RunConfig::band_sample_size)
      .def_readwrite("sample_seed", &RunConfig::sample_seed)
      .def_readwrite("parallelism", &RunConfig::parallelism);

  m.def("parse_config", &ParseRunConfig, py::arg("text"));
  m.def("load_config", &LoadRunConfig, py::arg("path"));

  py::class_<Route>(m, "Route")
      .def_readonly("route_name", &Route::route_name)
      .def_property_readonly("orientation",
                             [](const Route& r) {
                               return std::string(OrientationName(r.orientation));
                             })
      .def_property_readonly("edge_count",
                             [](const Route& r) { return r.edges.size(); })
      .def("__repr__", [](const Route& r) {
        return "<Route " + r.route_name + " (" +
               std::string(OrientationName(r.orientation)) + ", " +
               std::to_string(r.edges.size()) + " edges)>";
      });

  m.def(
      "load_routes",
      [](const std::filesystem::path& path, const RunConfig& config) {
        std::vector<Route> routes = LoadRoutes(path);
        std::vector<std::string> skipped = ClassifyRoutes(routes, config.orientation);
        return py::make_tuple(std::move(routes), std::move(skipped));
      },
      py::arg("path"), py::arg("config") = RunConfig{},
      "Loads and classifies LRS routes. Returns (routes, skipped_names).");

  py::class_<RoadGraph>(m, "Network")
      .def_property_readonly("way_count",
                             [](const RoadGraph& g) { return g.ways().size(); })
      .def_property_readonly("node_count", &RoadGraph::node_count)
      .def_property_readonly("arc_count",
                             [](const RoadGraph& g) { return g.arcs().size(); })
      .def(
          "candidates",
          [](const RoadGraph& g, double lon, double lat, double radius_m,
             std::size_t max_candidates) {
            py::list out;
            for (const auto& c : g.QueryCandidates({lon, lat}, radius_m, max_candidates)) {
              py::dict d;
              d["osm_id"] = c.osm_id;
              d["lon"] = c.snapped.lon;
              d["lat"] = c.snapped.lat;
              d["snap_dist_m"] = c.snap_dist_m;
              out.append(d);
            }
            return out;
          },
          py::arg("lon"), py::arg("lat"), py::arg("radius_m") = 50.0,
          py::arg("max_candidates") = 10);

  m.def(
      "load_network",
      [](const std::filesystem::path& path, const RunConfig& config) {
        return RoadGraph::Build(LoadOsmWays(path, config.highway_allowlist));
      },
      py::arg("path"), py::arg("config") = RunConfig{});

  py::class_<ConflationRun>(m, "Run")
      .def_property_readonly("report",
                             [](const ConflationRun& r) { return ReportDict(r.report); })
      .def_property_readonly("routes",
                             [](const ConflationRun& run) {
                               py::list out;
                               for (const auto& r : run.results) {
                                 py::dict d;
                                 d["route_name"] = r.route_name;
                                 d["orientation"] = std::string(OrientationName(r.orientation));
                                 d["outcome"] = std::string(RouteOutcomeName(r.outcome));
                                 d["failure_reason"] = r.failure_reason;
                                 d["point_count"] = r.rows.size();
                                 d["batch_count"] = r.batch_count;
                                 out.append(d);
                               }
                               return out;
                             })
      .def(
          "rows",
          [](const ConflationRun& run, const std::string& route_name) {
            for (const auto& r : run.results) {
              if (r.route_name != route_name) continue;
              py::list out;
              for (const auto& row : r.rows) out.append(RowDict(row));
              return out;
            }
            throw py::key_error(route_name);
          },
          py::arg("route_name"), "Match rows of one route in travel order.");

  m.def(
      "conflate",
      [](const std::vector<Route>& routes, const RoadGraph& network,
         const RunConfig& config, std::optional<std::size_t> parallelism) {
        py::gil_scoped_release release;
        return RunConflation(routes, network, config.pipeline,
                             parallelism.value_or(config.parallelism));
      },
      py::arg("routes"), py::arg("network"), py::arg("config") = RunConfig{},
      py::arg("parallelism") = py::none());

  m.def(
      "conflation_key",
      [](const ConflationRun& run, double foldback_span_mi) {
        py::list out;
        for (const auto& r : BuildConflationKey(run.results, foldback_span_mi)) {
          out.append(KeyRowDict(r));
        }
        return out;
      },
      py::arg("run"), py::arg("foldback_span_mi") = kDefaultFoldbackSpanMiles);

  m.def(
      "quality_report",
      [](const std::vector<Route>& routes, const ConflationRun& run) {
        const auto catalog = CatalogEdges(routes);
        const auto qualities = ComputeEdgeQuality(run.results, catalog);
        return ReportObject(BuildQualityReport(qualities, TotalsFromCatalog(catalog)));
      },
      py::arg("routes"), py::arg("run"));

  m.def(
      "write_results",
      [](const std::filesystem::path& out_dir, const std::vector<Route>& routes,
         const std::vector<std::string>& skipped, const RoadGraph& network,
         const ConflationRun& run, const RunConfig& config) {
        py::gil_scoped_release release;
        WriteResults(out_dir, routes, skipped, network, run, config);
      },
      py::arg("out_dir"), py::arg("routes"), py::arg("skipped"),
      py::arg("network"), py::arg("run"), py::arg("config") = RunConfig{});

  m.def(
      "regenerate_quality",
      [](const std::filesystem::path& results_dir, std::size_t per_band,
         std::uint64_t seed) {
        return ReportObject(RegenerateQuality(results_dir, per_band, seed));
      },
      py::arg("results_dir"), py::arg("per_band") = RunConfig{}.band_sample_size,
      py::arg("seed") = RunConfig{}.sample_seed);
}
