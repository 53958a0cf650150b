#include "lrsconflate/pipeline.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <limits>
#include <set>
#include <thread>
#include <utility>

#include <spdlog/spdlog.h>

#include "lrsconflate/errors.h"

namespace lrsconflate {

void BatchPolicy::Validate() const {
  if (trigger_points == 0 || batch_size == 0 || batch_size > trigger_points) {
    throw ConflationError(
        ErrorCode::kInvalidArgument,
        "batch policy needs 0 < batch_size <= trigger_points");
  }
}

BatchPolicy BatchPolicy::Unlimited() {
  BatchPolicy p;
  p.trigger_points = std::numeric_limits<std::size_t>::max();
  p.batch_size = std::numeric_limits<std::size_t>::max();
  return p;
}

std::string_view RouteOutcomeName(RouteOutcome outcome) {
  switch (outcome) {
    case RouteOutcome::kSuccess:
      return "Success";
    case RouteOutcome::kPartialFailure:
      return "PartialFailure";
    case RouteOutcome::kFailure:
      return "Failure";
  }
  return "Failure";
}

RouteMatchResult ProcessRoute(const Route& route, const RoadGraph& graph,
                              const PipelineOptions& options) {
  RouteMatchResult result;
  result.route_name = route.route_name;
  result.orientation = route.orientation;
  try {
    options.batching.Validate();
    options.matcher.Validate();
    const RoutePointSequence seq = NormalizeRoute(route, options.normalize);
    const std::size_t n = seq.points.size();
    const std::size_t batch_size = n >= options.batching.trigger_points
                                       ? options.batching.batch_size
                                       : n;

    std::vector<MeasuredPoint> batch_points;
    result.rows.reserve(n);
    int leg_base = 0;
    for (std::size_t begin = 0; begin < n; begin += batch_size) {
      const std::size_t end = std::min(n, begin + batch_size);
      batch_points.clear();
      for (std::size_t i = begin; i < end; ++i) {
        batch_points.push_back(seq.points[i].point);
      }
      SequenceMatch match =
          DecodeSequence(batch_points, graph, options.matcher);
      const int batch = static_cast<int>(result.batch_count++);
      for (std::size_t k = 0; k < match.rows.size(); ++k) {
        const RoutePoint& src = seq.points[begin + k];
        RouteRow row;
        row.match = match.rows[k];
        if (row.match.leg >= 0) row.match.leg += leg_base;
        row.edge_rte_key = seq.EdgeKeyOf(src);
        row.interpolated = src.interpolated;
        row.batch = batch;
        result.rows.push_back(std::move(row));
      }
      leg_base += static_cast<int>(match.legs.size());
    }

    if (result.batch_count > 1) {
      const std::size_t w = options.batching.seam_window;
      for (std::size_t b = batch_size; b < n; b += batch_size) {
        const std::size_t lo = b >= w ? b - w : 0;
        const std::size_t hi = std::min(n, b + w);
        for (std::size_t i = lo; i < hi; ++i) result.rows[i].seam = true;
      }
    }

    const auto matched = static_cast<std::size_t>(std::count_if(
        result.rows.begin(), result.rows.end(),
        [](const RouteRow& r) { return r.matched(); }));
    if (matched == 0) {
      result.outcome = RouteOutcome::kFailure;
      result.failure_reason =
          std::string(ErrorCodeName(ErrorCode::kNoMatchableInput)) +
          ": no point lies within " +
          std::to_string(options.matcher.search_radius) +
          " m of the road network";
    } else if (matched < result.rows.size()) {
      result.outcome = RouteOutcome::kPartialFailure;
    } else {
      result.outcome = RouteOutcome::kSuccess;
    }
  } catch (const ConflationError& e) {
    result.outcome = RouteOutcome::kFailure;
    result.failure_reason =
        std::string(ErrorCodeName(e.code())) + ": " + e.what();
  } catch (const std::exception& e) {
    result.outcome = RouteOutcome::kFailure;
    result.failure_reason = std::string("Internal: ") + e.what();
  }
  if (result.outcome == RouteOutcome::kFailure) {
    spdlog::warn("route '{}' failed: {}", route.route_name,
                 result.failure_reason);
  }
  return result;
}

ConflationRun RunConflation(const std::vector<Route>& routes,
                            const RoadGraph& graph,
                            const PipelineOptions& options,
                            std::size_t parallelism) {
  const auto started = std::chrono::steady_clock::now();
  if (parallelism == 0) {
    throw ConflationError(ErrorCode::kInvalidArgument,
                          "parallelism must be at least 1");
  }
  ConflationRun run;
  run.results.resize(routes.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < routes.size(); i = next++) {
      run.results[i] = ProcessRoute(routes[i], graph, options);
    }
  };
  const std::size_t threads = std::min(parallelism, routes.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::stable_sort(run.results.begin(), run.results.end(),
                   [](const RouteMatchResult& a, const RouteMatchResult& b) {
                     return a.route_name < b.route_name;
                   });

  RunReport& report = run.report;
  report.total_routes = run.results.size();
  for (const auto& r : run.results) {
    switch (r.outcome) {
      case RouteOutcome::kSuccess:
        ++report.success;
        break;
      case RouteOutcome::kPartialFailure:
        ++report.partial_failure;
        break;
      case RouteOutcome::kFailure:
        ++report.failure;
        break;
    }
    std::set<std::string_view> touched;
    for (const auto& row : r.rows) {
      ++report.total_points;
      if (row.matched()) {
        ++report.matched_points;
        touched.insert(row.edge_rte_key);
      }
    }
    report.edges_touched += touched.size();
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  return run;
}

}  // namespace lrsconflate
