// lrsconflate: conflate an LRS with an OSM extract, regenerate quality
// reports, or serve a results directory to the review UI.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "lrsconflate/errors.h"
#include "lrsconflate/lrs.h"
#include "lrsconflate/pipeline.h"
#include "lrsconflate/results_io.h"
#include "lrsconflate/road_graph.h"
#include "lrsconflate/run_config.h"
#include "lrsconflate/service.h"

namespace fs = std::filesystem;
using namespace lrsconflate;

namespace {

// sysexits(3)
constexpr int kExitUsage = 64;
constexpr int kExitNoInput = 66;
constexpr int kExitUnavailable = 69;
constexpr int kExitInputError = 2;

int ExitCodeFor(const ConflationError& e) {
  switch (e.code()) {
    case ErrorCode::kIoError:
    case ErrorCode::kMalformedInput:
      return kExitNoInput;
    default:
      return kExitInputError;
  }
}

struct ConflateArgs {
  std::string lrs;
  std::string osm;
  std::string out;
  std::string config;
  std::size_t parallelism = 0;
};

int RunConflate(const ConflateArgs& args) {
  RunConfig config;
  if (!args.config.empty()) config = LoadRunConfig(args.config);
  if (args.parallelism > 0) config.parallelism = args.parallelism;

  std::vector<Route> all_routes = LoadRoutes(args.lrs);
  std::vector<Route> routes = all_routes;
  const std::vector<std::string> skipped =
      ClassifyRoutes(routes, config.orientation);
  spdlog::info("{} routes loaded, {} skipped as unclassifiable",
               all_routes.size(), skipped.size());

  RoadGraph graph =
      RoadGraph::Build(LoadOsmWays(args.osm, config.highway_allowlist));
  spdlog::info("road graph: {} ways, {} nodes, {} arcs", graph.ways().size(),
               graph.node_count(), graph.arcs().size());

  const ConflationRun run =
      RunConflation(routes, graph, config.pipeline, config.parallelism);
  const RunReport& r = run.report;
  spdlog::info(
      "{} routes: {} success, {} partial, {} failed; {}/{} points matched "
      "in {:.1f}s",
      r.total_routes, r.success, r.partial_failure, r.failure,
      r.matched_points, r.total_points, r.wall_seconds);

  WriteResults(args.out, all_routes, skipped, graph, run, config);
  std::cout << fs::path(args.out) / results_files::kKey << "\n";
  return 0;
}

int RunQuality(const std::string& dir, std::size_t per_band,
               std::uint64_t seed) {
  if (!fs::is_directory(dir)) {
    throw ConflationError(ErrorCode::kIoError,
                          "results directory '" + dir + "' not found");
  }
  RegenerateQuality(dir, per_band, seed);
  std::cout << fs::path(dir) / results_files::kQualityText << "\n";
  return 0;
}

ResultsService* g_service = nullptr;

void HandleSignal(int) {
  if (g_service) g_service->Stop();
}

int RunServe(const std::string& dir, const std::string& host, int port,
             const std::string& ui_dir) {
  ResultsService service(dir);
  if (!ui_dir.empty()) service.MountStatic(ui_dir);
  const auto bound = service.Bind(host, port);
  if (!bound) {
    std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
    return kExitUnavailable;
  }
  g_service = &service;
  std::signal(SIGINT, HandleSignal);
  std::signal(SIGTERM, HandleSignal);
  std::cout << "serving " << dir << " on http://" << host << ":" << *bound
            << "/" << std::endl;
  service.Serve();
  g_service = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conflate a linear referencing system with OpenStreetMap"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress");

  ConflateArgs conflate;
  auto* conflate_cmd =
      app.add_subcommand("conflate", "Match every LRS route to the road network");
  conflate_cmd->add_option("--lrs", conflate.lrs, "LRS edges (.geojson or .csv)")
      ->required();
  conflate_cmd->add_option("--osm", conflate.osm, "OSM ways (.geojson)")
      ->required();
  conflate_cmd->add_option("--out", conflate.out, "Results directory")
      ->required();
  conflate_cmd->add_option("--config", conflate.config, "Run configuration");
  conflate_cmd->add_option("--parallelism", conflate.parallelism,
                           "Worker threads (overrides the configuration)")
      ->check(CLI::PositiveNumber);

  std::string quality_dir;
  std::size_t per_band = 3;
  std::uint64_t seed = 20240101;
  auto* quality_cmd = app.add_subcommand(
      "quality", "Regenerate quality reports from a results directory");
  quality_cmd->add_option("--results", quality_dir, "Results directory")
      ->required();
  quality_cmd->add_option("--per-band", per_band, "Edges sampled per band");
  quality_cmd->add_option("--seed", seed, "Sampling seed");

  std::string serve_dir;
  std::string host = "127.0.0.1";
  int port = 0;
  std::string ui_dir;
  auto* serve_cmd =
      app.add_subcommand("serve", "Serve a results directory over HTTP");
  serve_cmd->add_option("--results", serve_dir, "Results directory")
      ->required();
  serve_cmd->add_option("--port", port, "TCP port")->required()->check(
      CLI::Range(0, 65535));
  serve_cmd->add_option("--host", host, "Listen address");
  serve_cmd->add_option("--ui-dir", ui_dir, "Static files for the review UI")
      ->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  spdlog::set_default_logger(spdlog::stderr_color_mt("lrsconflate"));
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

  try {
    if (*conflate_cmd) return RunConflate(conflate);
    if (*quality_cmd) return RunQuality(quality_dir, per_band, seed);
    if (*serve_cmd) return RunServe(serve_dir, host, port, ui_dir);
  } catch (const ConflationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ExitCodeFor(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
