#include "lrsconflate/pipeline.h"

#include <random>

#include <gtest/gtest.h>

#include "lrsconflate/errors.h"
#include "synthetic.h"

namespace lrsconflate {
namespace {

class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    suite_ = new synth::Suite(synth::BuildSuite(99, 24));
    graph_ = new RoadGraph(RoadGraph::Build(suite_->network.ways));
  }
  static void TearDownTestSuite() {
    delete graph_;
    delete suite_;
  }

  static std::vector<Route> Routes() {
    std::vector<Route> routes;
    for (const auto& r : suite_->routes) routes.push_back(r.route);
    ClassifyRoutes(routes, OrientationRules{});
    return routes;
  }

  static synth::Suite* suite_;
  static RoadGraph* graph_;
};

synth::Suite* PipelineTest::suite_ = nullptr;
RoadGraph* PipelineTest::graph_ = nullptr;

TEST_F(PipelineTest, OneRowPerNormalizedPoint) {
  for (const auto& route : Routes()) {
    const auto result = ProcessRoute(route, *graph_, PipelineOptions{});
    EXPECT_EQ(result.rows.size(), NormalizeRoute(route).points.size());
    EXPECT_EQ(result.outcome, RouteOutcome::kSuccess) << result.failure_reason;
    EXPECT_EQ(result.batch_count, 1u);
    for (std::size_t i = 1; i < result.rows.size(); ++i) {
      EXPECT_LE(result.rows[i - 1].m(), result.rows[i].m());
    }
  }
}

TEST_F(PipelineTest, SmallBatchesCoverEveryPoint) {
  std::mt19937_64 rng(4);
  const auto path = synth::LongWalk(suite_->network, rng, 1200, 9.0);
  auto sr = synth::MakeRoute(path, "LONG NB", rng);
  Route route = sr.route;
  PipelineOptions opt;
  opt.batching.trigger_points = 700;
  opt.batching.batch_size = 500;
  opt.batching.seam_window = 10;
  const auto result = ProcessRoute(route, *graph_, opt);
  ASSERT_EQ(result.rows.size(), NormalizeRoute(route).points.size());
  const std::size_t n = result.rows.size();
  EXPECT_EQ(result.batch_count, (n + 499) / 500);
  std::size_t seams = 0;
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_EQ(result.rows[i].batch, static_cast<int>(i / 500));
    seams += result.rows[i].seam;
  }
  EXPECT_EQ(seams, 20 * (result.batch_count - 1));
  EXPECT_TRUE(result.rows[495].seam);
  EXPECT_TRUE(result.rows[509].seam);
  EXPECT_FALSE(result.rows[510].seam);
  EXPECT_FALSE(result.rows[489].seam);
}

TEST_F(PipelineTest, TriggerIsInclusive) {
  std::mt19937_64 rng(8);
  const auto path = synth::LongWalk(suite_->network, rng, 300, 9.0);
  const Route route = synth::MakeRoute(path, "T NB", rng).route;
  const std::size_t n = NormalizeRoute(route).points.size();
  PipelineOptions opt;
  opt.batching.trigger_points = n;
  opt.batching.batch_size = n / 2;
  EXPECT_GT(ProcessRoute(route, *graph_, opt).batch_count, 1u);
  opt.batching.trigger_points = n + 1;
  EXPECT_EQ(ProcessRoute(route, *graph_, opt).batch_count, 1u);
}

TEST_F(PipelineTest, DeterministicAcrossWorkerCounts) {
  const auto routes = Routes();
  const auto a = RunConflation(routes, *graph_, PipelineOptions{}, 1);
  const auto b = RunConflation(routes, *graph_, PipelineOptions{}, 4);
  ASSERT_EQ(a.results.size(), b.results.size());
  for (std::size_t i = 0; i < a.results.size(); ++i) {
    const auto& x = a.results[i];
    const auto& y = b.results[i];
    EXPECT_EQ(x.route_name, y.route_name);
    ASSERT_EQ(x.rows.size(), y.rows.size());
    for (std::size_t k = 0; k < x.rows.size(); ++k) {
      EXPECT_EQ(x.rows[k].match.osm_id, y.rows[k].match.osm_id);
      EXPECT_EQ(x.rows[k].match.snap_dist_m, y.rows[k].match.snap_dist_m);
      EXPECT_EQ(x.rows[k].match.offset_m, y.rows[k].match.offset_m);
    }
  }
  EXPECT_EQ(a.report.matched_points, b.report.matched_points);
  EXPECT_TRUE(std::is_sorted(
      a.results.begin(), a.results.end(),
      [](const auto& l, const auto& r) { return l.route_name < r.route_name; }));
}

TEST_F(PipelineTest, FailuresAreContainedPerRoute) {
  auto routes = Routes();
  Route far = routes[0];
  far.route_name = "FAR NB";
  for (auto& e : far.edges) {
    for (auto& p : e.geometry) p.point.lat += 1.0;
  }
  Route tiny;
  tiny.route_name = "TINY NB";
  tiny.edges.push_back({"t1", "TINY NB", "TINY NB", "SR", 1,
                        {{{-77.5, 37.5}, 0.0}}});
  routes.push_back(far);
  routes.push_back(tiny);
  const auto run = RunConflation(routes, *graph_, PipelineOptions{}, 2);
  EXPECT_EQ(run.report.total_routes, routes.size());
  EXPECT_EQ(run.report.failure, 2u);
  for (const auto& r : run.results) {
    if (r.route_name == "FAR NB") {
      EXPECT_EQ(r.outcome, RouteOutcome::kFailure);
      EXPECT_NE(r.failure_reason.find("NoMatchableInput"), std::string::npos)
          << r.failure_reason;
      for (const auto& row : r.rows) EXPECT_FALSE(row.matched());
    } else if (r.route_name == "TINY NB") {
      EXPECT_EQ(r.outcome, RouteOutcome::kFailure);
      EXPECT_NE(r.failure_reason.find("DegenerateRoute"), std::string::npos)
          << r.failure_reason;
    } else {
      EXPECT_EQ(r.outcome, RouteOutcome::kSuccess);
    }
  }
}

TEST_F(PipelineTest, PartialFailureWhenSomePointsAreOffNetwork) {
  Route route = Routes()[0];
  // Append an edge far outside the network.
  LrsEdge far = route.edges.back();
  far.edge_rte_key = "far";
  far.edge_sequence += 1000;
  for (auto& p : far.geometry) {
    p.point.lon += 1.0;
    p.m += 100.0;
  }
  route.edges.push_back(far);
  const auto r = ProcessRoute(route, *graph_, PipelineOptions{});
  EXPECT_EQ(r.outcome, RouteOutcome::kPartialFailure);
}

TEST_F(PipelineTest, ReportCounts) {
  const auto routes = Routes();
  const auto run = RunConflation(routes, *graph_, PipelineOptions{}, 1);
  std::size_t total = 0;
  for (const auto& r : run.results) total += r.rows.size();
  EXPECT_EQ(run.report.total_points, total);
  EXPECT_EQ(run.report.success + run.report.partial_failure +
                run.report.failure,
            routes.size());
  EXPECT_GT(run.report.edges_touched, routes.size());
}

TEST(Pipeline, EmptyInput) {
  const RoadGraph g = RoadGraph::Build({OsmWay{
      1, "primary", false, {{-77.5, 37.5}, {-77.49, 37.5}}, {}}});
  const auto run = RunConflation({}, g, PipelineOptions{}, 3);
  EXPECT_TRUE(run.results.empty());
  EXPECT_EQ(run.report.total_routes, 0u);
  EXPECT_THROW(RunConflation({}, g, PipelineOptions{}, 0), ConflationError);
}

TEST(Pipeline, InvalidBatchPolicyFailsTheRoute) {
  const RoadGraph g = RoadGraph::Build({OsmWay{
      1, "primary", false, {{-77.5, 37.5}, {-77.49, 37.5}}, {}}});
  Route r;
  r.route_name = "X NB";
  r.edges.push_back({"e", "X NB", "X NB", "SR", 1,
                     {{{-77.5, 37.5}, 0.0}, {{-77.495, 37.5}, 0.2}}});
  PipelineOptions opt;
  opt.batching.batch_size = opt.batching.trigger_points + 1;
  const auto result = ProcessRoute(r, g, opt);
  EXPECT_EQ(result.outcome, RouteOutcome::kFailure);
  EXPECT_NE(result.failure_reason.find("InvalidArgument"), std::string::npos);
}

}  // namespace
}  // namespace lrsconflate
