#include "lrsconflate/service.h"

#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lrsconflate/errors.h"
#include "lrsconflate/results_io.h"
#include "synthetic.h"

namespace lrsconflate {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Conflates the tiny fixture (two classified routes over two ways) into a
// fresh results directory.
class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const fs::path data = LRSCONFLATE_TEST_DATA;
    std::vector<Route> routes = LoadRoutes(data / "tiny_lrs.geojson");
    const RunConfig config;
    const auto skipped = ClassifyRoutes(routes, config.orientation);
    const RoadGraph graph = RoadGraph::Build(
        LoadOsmWays(data / "tiny_osm.geojson", config.highway_allowlist));
    const ConflationRun run =
        RunConflation(routes, graph, config.pipeline, config.parallelism);
    WriteResults(dir_.path(), routes, skipped, graph, run, config);
  }

  static json Body(const ResultsService::Response& r) {
    return json::parse(r.body);
  }

  synth::TempDir dir_;
};

TEST_F(ServiceTest, ListsRoutesWithPaging) {
  ResultsService service(dir_.path());
  const auto all = Body(service.ListRoutes({}));
  EXPECT_EQ(all["total"], 2);
  ASSERT_EQ(all["routes"].size(), 2u);
  EXPECT_EQ(all["routes"][0]["route_name"], "SR 7 WB");
  EXPECT_EQ(all["routes"][0]["orientation"], "Reversed");
  EXPECT_EQ(all["routes"][1]["route_name"], "US 1 EB");
  EXPECT_EQ(all["routes"][1]["edges"].size(), 2u);
  EXPECT_EQ(all["routes"][1]["reviewed"], false);

  const auto page = Body(service.ListRoutes({{"offset", "1"}, {"limit", "1"}}));
  EXPECT_EQ(page["total"], 2);
  ASSERT_EQ(page["routes"].size(), 1u);
  EXPECT_EQ(page["routes"][0]["route_name"], "US 1 EB");

  EXPECT_EQ(service.ListRoutes({{"limit", "lots"}}).status, 400);
  EXPECT_EQ(service.ListRoutes({{"band", "3-9"}}).status, 400);
}

TEST_F(ServiceTest, FiltersByBandOutcomeAndCategory) {
  ResultsService service(dir_.path());
  // Every edge of the fixture snaps within a few millimetres.
  EXPECT_EQ(Body(service.ListRoutes({{"band", "0-6"}}))["total"], 2);
  EXPECT_EQ(Body(service.ListRoutes({{"band", "6-12"}}))["total"], 0);
  EXPECT_EQ(Body(service.ListRoutes({{"band", "12+"}}))["total"], 0);
  EXPECT_EQ(Body(service.ListRoutes({{"band", "12"}}))["total"], 0);
  EXPECT_EQ(Body(service.ListRoutes({{"category", "SR"}}))["total"], 1);
  EXPECT_EQ(Body(service.ListRoutes({{"outcome", "Success"}}))["total"], 2);
  EXPECT_EQ(Body(service.ListRoutes({{"outcome", "Failure"}}))["total"], 0);
}

TEST_F(ServiceTest, RouteDetail) {
  ResultsService service(dir_.path());
  EXPECT_EQ(service.GetRoute("NOPE").status, 404);
  const auto r = service.GetRoute("US 1 EB");
  ASSERT_EQ(r.status, 200);
  const auto j = json::parse(r.body);
  EXPECT_EQ(j["route"]["outcome"], "Success");
  EXPECT_EQ(j["lrs"]["features"].size(), 2u);
  const auto& points = j["matched_points"]["features"];
  EXPECT_EQ(points.size(), j["route"]["point_count"].get<std::size_t>());
  for (const auto& p : points) {
    EXPECT_EQ(p["geometry"]["type"], "Point");
    EXPECT_EQ(p["properties"]["status"], "Matched");
  }
  std::set<long long> ways;
  for (const auto& w : j["osm_ways"]["features"]) {
    ways.insert(w["properties"]["osm_id"].get<long long>());
  }
  EXPECT_EQ(ways, (std::set<long long>{100, 200}));
  EXPECT_EQ(j["key_rows"].size(), 3u);
  EXPECT_EQ(j["edges"].size(), 2u);
}

TEST_F(ServiceTest, SummaryIsTheQualityReport) {
  ResultsService service(dir_.path());
  const auto j = Body(service.GetSummary());
  EXPECT_EQ(j["all_edges"]["total_edges"], 3);
  EXPECT_EQ(j["all_edges"]["edges_matched"], 3);
}

TEST_F(ServiceTest, VerdictsAreValidatedAndPersisted) {
  {
    ResultsService service(dir_.path());
    EXPECT_EQ(service.PostVerdict("{").status, 400);
    EXPECT_EQ(service.PostVerdict("[]").status, 400);
    EXPECT_EQ(service.PostVerdict(R"({"route_name":"US 1 EB","status":"Accepted"})")
                  .status,
              400);
    EXPECT_EQ(service.PostVerdict(
                  R"({"route_name":"US 1 EB","reviewer":" ","status":"Accepted"})")
                  .status,
              400);
    EXPECT_EQ(service.PostVerdict(
                  R"({"route_name":"X","reviewer":"ana","status":"Accepted"})")
                  .status,
              400);
    EXPECT_EQ(service.PostVerdict(
                  R"({"route_name":"US 1 EB","reviewer":"ana","status":"Maybe"})")
                  .status,
              400);
    EXPECT_EQ(service.PostVerdict(
                  R"({"route_name":"US 1 EB","reviewer":"ana","status":"Flagged","note":3})")
                  .status,
              400);
    EXPECT_FALSE(fs::exists(dir_.path() / results_files::kVerdicts));

    const auto ok = service.PostVerdict(
        R"({"route_name":"US 1 EB","reviewer":"ana","status":"Flagged","note":"offset near x1"})");
    ASSERT_EQ(ok.status, 201) << ok.body;
    EXPECT_EQ(Body(ok)["note"], "offset near x1");
    EXPECT_GT(Body(ok)["timestamp"].get<long long>(), 1600000000);
    EXPECT_EQ(service.PostVerdict(
                     R"({"route_name":"SR 7 WB","reviewer":"bo","status":"Accepted"})")
                  .status,
              201);
    EXPECT_EQ(Body(service.ListVerdicts())["verdicts"].size(), 2u);
    EXPECT_EQ(Body(service.ListRoutes({}))["routes"][1]["reviewed"], true);
  }
  const std::string log = synth::ReadFile(dir_.path() / results_files::kVerdicts);
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 2);

  ResultsService reopened(dir_.path());
  const auto verdicts = Body(reopened.ListVerdicts())["verdicts"];
  ASSERT_EQ(verdicts.size(), 2u);
  EXPECT_EQ(verdicts[0]["route_name"], "US 1 EB");
  EXPECT_EQ(verdicts[0]["status"], "Flagged");
  EXPECT_EQ(verdicts[1]["note"], nullptr);
}

TEST_F(ServiceTest, MissingDirectoryIsAnIoError) {
  try {
    ResultsService service(dir_.path() / "nope");
    FAIL() << "expected an error";
  } catch (const ConflationError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoError);
  }
}

TEST_F(ServiceTest, ServesOverHttp) {
  ResultsService service(dir_.path());
  fs::create_directories(dir_.path() / "ui");
  synth::WriteFile(dir_.path() / "ui" / "index.html", "<html>review</html>");
  service.MountStatic(dir_.path() / "ui");
  const auto port = service.Bind("127.0.0.1", 0);
  ASSERT_TRUE(port.has_value());
  std::thread serving([&] { service.Serve(); });

  httplib::Client client("127.0.0.1", *port);
  client.set_connection_timeout(5);
  auto wait_ready = [&] {
    for (int i = 0; i < 200; ++i) {
      if (auto r = client.Get("/summary")) return r->status == 200;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    return false;
  };
  ASSERT_TRUE(wait_ready());

  auto list = client.Get("/routes?band=0-6&limit=1");
  ASSERT_TRUE(list);
  EXPECT_EQ(list->status, 200);
  EXPECT_EQ(json::parse(list->body)["routes"].size(), 1u);

  auto detail = client.Get("/routes/SR%207%20WB");
  ASSERT_TRUE(detail);
  EXPECT_EQ(detail->status, 200);
  EXPECT_EQ(json::parse(detail->body)["route"]["route_name"], "SR 7 WB");
  auto missing = client.Get("/routes/nothing");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  auto posted = client.Post(
      "/verdicts", R"({"route_name":"SR 7 WB","reviewer":"cy","status":"Accepted"})",
      "application/json");
  ASSERT_TRUE(posted);
  EXPECT_EQ(posted->status, 201);
  auto verdicts = client.Get("/verdicts");
  ASSERT_TRUE(verdicts);
  EXPECT_EQ(json::parse(verdicts->body)["verdicts"].size(), 1u);

  auto page = client.Get("/index.html");
  ASSERT_TRUE(page);
  EXPECT_EQ(page->body, "<html>review</html>");

  ResultsService second(dir_.path());
  EXPECT_FALSE(second.Bind("127.0.0.1", *port).has_value());

  service.Stop();
  serving.join();
}

}  // namespace
}  // namespace lrsconflate
