#include "lrsconflate/run_config.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "lrsconflate/errors.h"
#include "text_util.h"

namespace lrsconflate {
namespace {

std::vector<std::string> SplitList(std::string_view value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const auto end = comma == std::string_view::npos ? value.size() : comma;
    std::string item = Trim(value.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double ParseDouble(const std::string& v) {
  std::size_t used = 0;
  const double d = std::stod(v, &used);
  if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
  return d;
}

std::uint64_t ParseUnsigned(const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw std::invalid_argument(v);
  }
  return out;
}

}  // namespace

RunConfig ParseRunConfig(std::string_view text) {
  RunConfig cfg;
  auto& m = cfg.pipeline.matcher;
  auto& b = cfg.pipeline.batching;
  auto& n = cfg.pipeline.normalize;
  auto& o = cfg.orientation;
  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"matcher.sigma_z", [&](auto& v) { m.sigma_z = ParseDouble(v); }},
      {"matcher.beta", [&](auto& v) { m.beta = ParseDouble(v); }},
      {"matcher.search_radius", [&](auto& v) { m.search_radius = ParseDouble(v); }},
      {"matcher.max_candidates", [&](auto& v) { m.max_candidates = ParseUnsigned(v); }},
      {"matcher.breakage_distance", [&](auto& v) { m.breakage_distance = ParseDouble(v); }},
      {"matcher.max_route_deviation", [&](auto& v) { m.max_route_deviation = ParseDouble(v); }},
      {"batch.trigger_points", [&](auto& v) { b.trigger_points = ParseUnsigned(v); }},
      {"batch.batch_size", [&](auto& v) { b.batch_size = ParseUnsigned(v); }},
      {"batch.seam_window", [&](auto& v) { b.seam_window = ParseUnsigned(v); }},
      {"normalize.gap_threshold_m", [&](auto& v) { n.gap_threshold_m = ParseDouble(v); }},
      {"normalize.interval_m", [&](auto& v) { n.interval_m = ParseDouble(v); }},
      {"orientation.direction_pattern", [&](auto& v) { o.direction_pattern = v; }},
      {"orientation.nonprime_pattern", [&](auto& v) { o.nonprime_pattern = v; }},
      {"orientation.undirected_pattern", [&](auto& v) { o.undirected_pattern = v; }},
      {"orientation.reversed_directions", [&](auto& v) { o.reversed_directions = SplitList(v); }},
      {"network.highway_allowlist",
       [&](auto& v) {
         cfg.highway_allowlist.clear();
         if (Trim(v) == "*") return;
         for (auto& item : SplitList(v)) cfg.highway_allowlist.insert(item);
       }},
      {"cleanup.foldback_span_mi", [&](auto& v) { cfg.foldback_span_mi = ParseDouble(v); }},
      {"quality.band_sample_size", [&](auto& v) { cfg.band_sample_size = ParseUnsigned(v); }},
      {"quality.sample_seed", [&](auto& v) { cfg.sample_seed = ParseUnsigned(v); }},
      {"run.parallelism", [&](auto& v) { cfg.parallelism = ParseUnsigned(v); }},
  };

  std::istringstream in{std::string(text)};
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    const std::string where = "config line " + std::to_string(line_no);
    // Patterns may legitimately contain '#', so comments must start the line.
    const std::string body = Trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConflationError(ErrorCode::kInvalidArgument,
                            where + ": expected 'key = value'");
    }
    const std::string key = Trim(body.substr(0, eq));
    const std::string value = Trim(body.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end()) {
      throw ConflationError(ErrorCode::kInvalidArgument,
                            where + ": unknown key '" + key + "'");
    }
    try {
      it->second(value);
    } catch (const std::logic_error&) {
      throw ConflationError(ErrorCode::kInvalidArgument,
                            where + ": bad value '" + value + "' for " + key);
    }
  }

  cfg.pipeline.matcher.Validate();
  cfg.pipeline.batching.Validate();
  if (!(n.gap_threshold_m > 0.0) || !(n.interval_m > 0.0)) {
    throw ConflationError(ErrorCode::kInvalidArgument,
                          "normalize distances must be positive");
  }
  if (cfg.parallelism == 0) {
    throw ConflationError(ErrorCode::kInvalidArgument,
                          "run.parallelism must be at least 1");
  }
  OrientationClassifier probe(cfg.orientation);  // validates the patterns
  return cfg;
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConflationError(ErrorCode::kIoError,
                          "cannot open config '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseRunConfig(buf.str());
}

}  // namespace lrsconflate
