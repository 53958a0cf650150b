#include "lrsconflate/hmm_matcher.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <tuple>

#include "lrsconflate/errors.h"

namespace lrsconflate {
namespace {

constexpr double kForbidden = -std::numeric_limits<double>::infinity();
constexpr std::size_t kNoState = std::numeric_limits<std::size_t>::max();

// True when state (score_a, ...) should be preferred over (score_b, ...).
bool Better(double score_a, double snap_a, OsmId osm_a, std::size_t idx_a,
            double score_b, double snap_b, OsmId osm_b, std::size_t idx_b) {
  if (score_a != score_b) return score_a > score_b;
  return std::tie(snap_a, osm_a, idx_a) < std::tie(snap_b, osm_b, idx_b);
}

}  // namespace

void MatcherConfig::Validate() const {
  if (!(sigma_z > 0.0) || !(beta > 0.0) || !(search_radius > 0.0) ||
      max_candidates == 0 || !(breakage_distance > 0.0) ||
      !(max_route_deviation > 0.0)) {
    throw ConflationError(ErrorCode::kInvalidArgument,
                          "matcher parameters must be strictly positive");
  }
}

double EmissionLogProb(double snap_dist_m, const MatcherConfig& cfg) {
  const double z = snap_dist_m / cfg.sigma_z;
  return -0.5 * z * z - std::log(cfg.sigma_z * std::sqrt(2.0 * std::numbers::pi));
}

std::optional<double> TransitionLogProb(double gc_dist_m,
                                        std::optional<double> net_dist_m,
                                        const MatcherConfig& cfg) {
  if (!net_dist_m) return std::nullopt;
  return -std::abs(gc_dist_m - *net_dist_m) / cfg.beta - std::log(cfg.beta);
}

bool ViterbiTrellis::Advance(const LatticeStep& step) {
  const std::size_t n = step.size();
  if (n == 0) return false;
  if (back_.empty()) {
    score_ = step.emission;
    cumulative_snap_ = step.snap_dist;
    osm_id_ = step.osm_id;
    back_.emplace_back(n, kNoState);
    return true;
  }
  const std::size_t m = score_.size();
  std::vector<double> score(n, kForbidden);
  std::vector<double> cumulative(n, 0.0);
  std::vector<std::size_t> back(n, kNoState);
  bool reachable = false;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      if (score_[i] == kForbidden) continue;
      const double t = step.transition[i * n + j];
      if (t == kForbidden) continue;
      const double s = score_[i] + t;
      const double snap = cumulative_snap_[i] + step.snap_dist[j];
      if (back[j] == kNoState ||
          Better(s, snap, osm_id_[i], i, score[j], cumulative[j],
                 osm_id_[back[j]], back[j])) {
        score[j] = s;
        cumulative[j] = snap;
        back[j] = i;
      }
    }
    if (back[j] != kNoState) {
      score[j] += step.emission[j];
      reachable = true;
    }
  }
  if (!reachable) return false;
  score_ = std::move(score);
  cumulative_snap_ = std::move(cumulative);
  osm_id_ = step.osm_id;
  back_.push_back(std::move(back));
  return true;
}

ViterbiPath ViterbiTrellis::Backtrace() const {
  ViterbiPath path;
  if (back_.empty()) return path;
  std::size_t best = kNoState;
  for (std::size_t j = 0; j < score_.size(); ++j) {
    if (score_[j] == kForbidden) continue;
    if (best == kNoState ||
        Better(score_[j], cumulative_snap_[j], osm_id_[j], j, score_[best],
               cumulative_snap_[best], osm_id_[best], best)) {
      best = j;
    }
  }
  path.log_prob = score_[best];
  path.states.resize(back_.size());
  std::size_t state = best;
  for (std::size_t t = back_.size(); t-- > 0;) {
    path.states[t] = state;
    state = back_[t][state];
  }
  return path;
}

void ViterbiTrellis::Reset() {
  score_.clear();
  cumulative_snap_.clear();
  osm_id_.clear();
  back_.clear();
}

std::optional<ViterbiPath> ViterbiDecode(std::span<const LatticeStep> steps) {
  ViterbiTrellis trellis;
  for (const auto& step : steps) {
    if (!trellis.Advance(step)) return std::nullopt;
  }
  if (trellis.empty()) return std::nullopt;
  return trellis.Backtrace();
}

SequenceMatch DecodeSequence(std::span<const MeasuredPoint> points,
                             const RoadGraph& graph, const MatcherConfig& cfg) {
  cfg.Validate();
  SequenceMatch out;
  out.rows.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    out.rows[i].input = points[i];
    out.rows[i].matched = points[i].point;
  }

  ViterbiTrellis trellis;
  std::vector<std::size_t> leg_rows;
  std::vector<std::vector<SnapCandidate>> leg_candidates;

  auto close_leg = [&] {
    if (trellis.empty()) return;
    const ViterbiPath path = trellis.Backtrace();
    const int leg = static_cast<int>(out.legs.size());
    for (std::size_t k = 0; k < leg_rows.size(); ++k) {
      const SnapCandidate& c = leg_candidates[k][path.states[k]];
      MatchRow& row = out.rows[leg_rows[k]];
      row.matched = c.snapped;
      row.osm_id = c.osm_id;
      row.arc_id = c.arc_id;
      row.offset_m = c.offset_m;
      row.way_offset_m = graph.WayOffset({c.arc_id, c.offset_m});
      row.snap_dist_m = c.snap_dist_m;
      row.leg = leg;
      row.status = MatchStatus::kMatched;
    }
    out.legs.push_back({leg_rows.front(), leg_rows.back(), path.log_prob});
    trellis.Reset();
    leg_rows.clear();
    leg_candidates.clear();
  };

  std::vector<ArcPosition> targets;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const GeoPoint& p = points[i].point;
    std::vector<SnapCandidate> cands =
        graph.QueryCandidates(p, cfg.search_radius, cfg.max_candidates);
    if (cands.empty()) {
      close_leg();
      continue;
    }
    LatticeStep step;
    step.emission.reserve(cands.size());
    for (const auto& c : cands) {
      step.emission.push_back(EmissionLogProb(c.snap_dist_m, cfg));
      step.snap_dist.push_back(c.snap_dist_m);
      step.osm_id.push_back(c.osm_id);
    }

    bool extended = false;
    if (!trellis.empty()) {
      const double gc =
          HaversineMeters(points[leg_rows.back()].point, p);
      if (gc <= cfg.breakage_distance) {
        const double cutoff =
            std::min(cfg.breakage_distance, gc + cfg.max_route_deviation);
        targets.clear();
        for (const auto& c : cands) targets.push_back({c.arc_id, c.offset_m});
        const auto& prev = leg_candidates.back();
        step.transition.assign(prev.size() * cands.size(), kForbidden);
        for (std::size_t a = 0; a < prev.size(); ++a) {
          const auto dists = graph.RouteDistances(
              {prev[a].arc_id, prev[a].offset_m}, targets, cutoff);
          for (std::size_t b = 0; b < cands.size(); ++b) {
            if (auto t = TransitionLogProb(gc, dists[b], cfg)) {
              step.transition[a * cands.size() + b] = *t;
            }
          }
        }
        extended = trellis.Advance(step);
      }
      if (!extended) close_leg();
    }
    if (!extended) trellis.Advance(step);
    leg_rows.push_back(i);
    leg_candidates.push_back(std::move(cands));
  }
  close_leg();
  return out;
}

std::vector<MatchRow> MatchSequence(std::span<const MeasuredPoint> points,
                                    const RoadGraph& graph,
                                    const MatcherConfig& cfg) {
  SequenceMatch match = DecodeSequence(points, graph, cfg);
  if (match.legs.empty()) {
    throw ConflationError(ErrorCode::kNoMatchableInput,
                          "no point lies within " +
                              std::to_string(cfg.search_radius) +
                              " m of the road network");
  }
  return std::move(match.rows);
}

}  // namespace lrsconflate
