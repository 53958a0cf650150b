#ifndef LRSCONFLATE_SERVICE_H_
#define LRSCONFLATE_SERVICE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace lrsconflate {

enum class VerdictStatus { kAccepted, kFlagged };

struct Verdict {
  std::string route_name;
  std::string reviewer;
  VerdictStatus status = VerdictStatus::kAccepted;
  std::optional<std::string> note;
  std::int64_t timestamp = 0;  // UTC seconds
};

// Read-only JSON view over a results directory plus an append-only verdict
// log. Handlers are usable without a socket; Bind() and Serve() expose
// them as
//
//   GET  /routes           ?offset=&limit=&band=0-6|6-12|12+&outcome=&category=
//   GET  /routes/{name}    geometry, matched points, OSM ways, key rows
//   GET  /summary          quality report
//   GET  /verdicts
//   POST /verdicts         {"route_name", "reviewer", "status", "note"?}
class ResultsService {
 public:
  struct Response {
    int status = 200;
    std::string body;  // JSON
  };

  // Throws ConflationError(kIoError) when the directory is not a results
  // directory.
  explicit ResultsService(const std::filesystem::path& results_dir);
  ~ResultsService();
  ResultsService(const ResultsService&) = delete;
  ResultsService& operator=(const ResultsService&) = delete;

  Response ListRoutes(const std::multimap<std::string, std::string>& query) const;
  Response GetRoute(std::string_view route_name) const;
  Response GetSummary() const;
  Response ListVerdicts() const;
  Response PostVerdict(std::string_view body);

  // Static files (the review UI) are served from `dir` under "/".
  void MountStatic(const std::filesystem::path& dir);

  // Binds to host:port; port 0 picks a free port. Returns the bound port,
  // or nullopt when the address is unavailable.
  std::optional<int> Bind(const std::string& host, int port);
  // Serves until Stop(). Call after a successful Bind().
  bool Serve();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace lrsconflate

#endif  // LRSCONFLATE_SERVICE_H_
