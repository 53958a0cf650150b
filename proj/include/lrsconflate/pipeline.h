#ifndef LRSCONFLATE_PIPELINE_H_
#define LRSCONFLATE_PIPELINE_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "lrsconflate/hmm_matcher.h"
#include "lrsconflate/lrs.h"
#include "lrsconflate/road_graph.h"

namespace lrsconflate {

// Long routes are matched in consecutive, non-overlapping batches.
struct BatchPolicy {
  std::size_t trigger_points = 70000;  // batch when point count >= this
  std::size_t batch_size = 50000;
  // Rows this close (in points) to a batch boundary are tagged as seam rows.
  std::size_t seam_window = 10;

  void Validate() const;

  static BatchPolicy Unlimited();
};

enum class RouteOutcome { kSuccess, kPartialFailure, kFailure };

std::string_view RouteOutcomeName(RouteOutcome outcome);

struct RouteRow {
  MatchRow match;
  std::string edge_rte_key;
  bool interpolated = false;
  bool seam = false;
  int batch = 0;

  double m() const { return match.input.m; }  // normalized measure
  bool matched() const { return match.status == MatchStatus::kMatched; }
};

struct RouteMatchResult {
  std::string route_name;
  Orientation orientation = Orientation::kForward;
  std::vector<RouteRow> rows;
  RouteOutcome outcome = RouteOutcome::kFailure;
  std::string failure_reason;
  std::size_t batch_count = 0;
};

struct PipelineOptions {
  MatcherConfig matcher;
  BatchPolicy batching;
  NormalizeOptions normalize;
};

// Normalizes, batches and matches one route. Errors never escape: they are
// recorded as a Failure outcome.
RouteMatchResult ProcessRoute(const Route& route, const RoadGraph& graph,
                              const PipelineOptions& options);

struct RunReport {
  std::size_t total_routes = 0;
  std::size_t success = 0;
  std::size_t partial_failure = 0;
  std::size_t failure = 0;
  std::size_t edges_touched = 0;  // (route, edge) pairs with a matched row
  std::size_t total_points = 0;
  std::size_t matched_points = 0;
  double wall_seconds = 0.0;
};

struct ConflationRun {
  std::vector<RouteMatchResult> results;  // sorted by route name
  RunReport report;
};

// Processes every route once across `parallelism` worker threads. Results
// do not depend on the worker count.
ConflationRun RunConflation(const std::vector<Route>& routes,
                            const RoadGraph& graph,
                            const PipelineOptions& options,
                            std::size_t parallelism);

}  // namespace lrsconflate

#endif  // LRSCONFLATE_PIPELINE_H_
