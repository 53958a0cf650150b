#ifndef LRSCONFLATE_HMM_MATCHER_H_
#define LRSCONFLATE_HMM_MATCHER_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lrsconflate/geo.h"
#include "lrsconflate/road_graph.h"

namespace lrsconflate {

struct MatcherConfig {
  double sigma_z = 4.07;   // emission noise scale, meters
  double beta = 3.0;       // transition deviation scale, meters
  double search_radius = 50.0;
  std::size_t max_candidates = 10;
  double breakage_distance = 2000.0;
  // Network paths longer than the great-circle step plus this slack are
  // treated as unreachable. The bound is further capped by breakage_distance.
  double max_route_deviation = 200.0;

  // Throws ConflationError(kInvalidArgument) unless every field is positive.
  void Validate() const;
};

enum class MatchStatus { kMatched, kUnmatched };

struct MatchRow {
  MeasuredPoint input;
  GeoPoint matched;
  OsmId osm_id = 0;
  ArcId arc_id = 0;
  double offset_m = 0.0;      // along the matched arc
  double way_offset_m = 0.0;  // along the matched way, digitization order
  double snap_dist_m = 0.0;
  int leg = -1;  // -1 for unmatched rows
  MatchStatus status = MatchStatus::kUnmatched;
};

// Gaussian log-density of the snap distance.
double EmissionLogProb(double snap_dist_m, const MatcherConfig& cfg);

// Exponential log-density of |great-circle - network| distance; nullopt
// (forbidden) when the network distance is unreachable.
std::optional<double> TransitionLogProb(double gc_dist_m,
                                        std::optional<double> net_dist_m,
                                        const MatcherConfig& cfg);

// One observation in a Viterbi lattice. `transition` is row-major
// [previous state][state]; -infinity marks a forbidden move. It is ignored
// for the first step.
struct LatticeStep {
  std::vector<double> emission;
  std::vector<double> snap_dist;
  std::vector<OsmId> osm_id;
  std::vector<double> transition;

  std::size_t size() const { return emission.size(); }
};

struct ViterbiPath {
  std::vector<std::size_t> states;
  double log_prob = 0.0;
};

// Incremental max-product decoder. Equal scores are resolved by lower
// cumulative snap distance, then lower osm_id, then lower state index.
class ViterbiTrellis {
 public:
  // Returns false, leaving the trellis untouched, when no state of `step` is
  // reachable from the current frontier.
  bool Advance(const LatticeStep& step);

  std::size_t length() const { return back_.size(); }
  bool empty() const { return back_.empty(); }

  ViterbiPath Backtrace() const;
  void Reset();

 private:
  std::vector<double> score_;
  std::vector<double> cumulative_snap_;
  std::vector<OsmId> osm_id_;
  std::vector<std::vector<std::size_t>> back_;
};

// Decodes a whole lattice; nullopt when every path is forbidden.
std::optional<ViterbiPath> ViterbiDecode(std::span<const LatticeStep> steps);

struct LegSummary {
  std::size_t first = 0;  // row index range [first, last]
  std::size_t last = 0;
  double log_prob = 0.0;
};

struct SequenceMatch {
  std::vector<MatchRow> rows;  // one per input point, same order
  std::vector<LegSummary> legs;
};

// Map-matches an ordered point sequence. Points without candidates are
// unmatched and split legs; so do steps longer than breakage_distance and
// steps no candidate path can bridge. Never throws for unmatched input.
SequenceMatch DecodeSequence(std::span<const MeasuredPoint> points,
                             const RoadGraph& graph, const MatcherConfig& cfg);

// DecodeSequence, throwing ConflationError(kNoMatchableInput) when no point
// could be matched.
std::vector<MatchRow> MatchSequence(std::span<const MeasuredPoint> points,
                                    const RoadGraph& graph,
                                    const MatcherConfig& cfg);

}  // namespace lrsconflate

#endif  // LRSCONFLATE_HMM_MATCHER_H_
