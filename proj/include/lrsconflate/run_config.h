#ifndef LRSCONFLATE_RUN_CONFIG_H_
#define LRSCONFLATE_RUN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>

#include "lrsconflate/conflation_key.h"
#include "lrsconflate/lrs.h"
#include "lrsconflate/pipeline.h"

namespace lrsconflate {

// Everything a conflation run can be tuned with. Loaded from a line-based
// `key = value` file; `#` starts a comment, list values are comma-separated.
//
//   matcher.sigma_z, matcher.beta, matcher.search_radius,
//   matcher.max_candidates, matcher.breakage_distance,
//   matcher.max_route_deviation
//   batch.trigger_points, batch.batch_size, batch.seam_window
//   normalize.gap_threshold_m, normalize.interval_m
//   orientation.direction_pattern, orientation.nonprime_pattern,
//   orientation.undirected_pattern, orientation.reversed_directions
//   network.highway_allowlist   ("*" keeps every highway class)
//   cleanup.foldback_span_mi
//   quality.band_sample_size, quality.sample_seed
//   run.parallelism
struct RunConfig {
  PipelineOptions pipeline;
  OrientationRules orientation;
  std::set<std::string> highway_allowlist = DefaultHighwayAllowlist();
  double foldback_span_mi = kDefaultFoldbackSpanMiles;
  std::size_t band_sample_size = 3;
  std::uint64_t sample_seed = 20240101;
  std::size_t parallelism = 1;
};

// Throws ConflationError(kInvalidArgument) naming the offending line.
RunConfig ParseRunConfig(std::string_view text);
RunConfig LoadRunConfig(const std::filesystem::path& path);

}  // namespace lrsconflate

#endif  // LRSCONFLATE_RUN_CONFIG_H_
