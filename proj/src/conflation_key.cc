#include "lrsconflate/conflation_key.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>
#include <utility>

#include "format_util.h"
#include "lrsconflate/errors.h"
#include "text_util.h"

namespace lrsconflate {
namespace {

// A vertex shared by two arcs gets way offsets that differ by rounding
// depending on which arc it was snapped through.
constexpr double kOffsetTolerance_m = 1e-6;

constexpr const char* kKeyHeader =
    "route_name,edge_rte_key,osm_id,m_min,m_max,mean_snap_dist_m,point_count";

// Marks fold-back rows of rows[first, last] in `drop`.
void MarkFoldbacks(std::span<const RouteRow> rows, std::size_t first,
                   std::size_t last, double span_threshold_mi,
                   std::vector<bool>& drop) {
  if (last - first < 2) return;
  double direction = 0.0;
  const double net = rows[last].match.way_offset_m - rows[first].match.way_offset_m;
  if (net != 0.0) {
    direction = net > 0.0 ? 1.0 : -1.0;
  } else {
    for (std::size_t k = first + 1; k <= last && direction == 0.0; ++k) {
      const double step =
          rows[k].match.way_offset_m - rows[k - 1].match.way_offset_m;
      if (step != 0.0) direction = step > 0.0 ? 1.0 : -1.0;
    }
  }
  if (direction == 0.0) return;

  auto along = [&](std::size_t k) {
    return direction * rows[k].match.way_offset_m;
  };
  double frontier = along(first);
  std::size_t k = first + 1;
  while (k <= last) {
    if (along(k) >= frontier - kOffsetTolerance_m) {
      frontier = std::max(frontier, along(k));
      ++k;
      continue;
    }
    const std::size_t start = k;
    double m_lo = rows[k].m();
    double m_hi = rows[k].m();
    while (k <= last && along(k) < frontier - kOffsetTolerance_m) {
      m_lo = std::min(m_lo, rows[k].m());
      m_hi = std::max(m_hi, rows[k].m());
      ++k;
    }
    if (m_hi - m_lo < span_threshold_mi) {
      for (std::size_t r = start; r < k; ++r) drop[r] = true;
    } else {
      frontier = along(k - 1);
    }
  }
}

}  // namespace

std::vector<RouteRow> CleanFoldbacks(std::span<const RouteRow> rows,
                                     double span_threshold_mi,
                                     std::vector<RouteRow>* removed) {
  std::vector<bool> drop(rows.size(), false);
  std::size_t i = 0;
  while (i < rows.size()) {
    if (!rows[i].matched()) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < rows.size() && rows[j + 1].matched() &&
           rows[j + 1].match.osm_id == rows[i].match.osm_id) {
      ++j;
    }
    MarkFoldbacks(rows, i, j, span_threshold_mi, drop);
    i = j + 1;
  }
  std::vector<RouteRow> kept;
  kept.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (!drop[k]) {
      kept.push_back(rows[k]);
    } else if (removed != nullptr) {
      removed->push_back(rows[k]);
    }
  }
  return kept;
}

std::vector<ConflationKeyRow> SummarizeKey(std::string_view route_name,
                                           std::span<const RouteRow> rows,
                                           Orientation orientation) {
  struct Group {
    double m_min = 0.0;
    double m_max = 0.0;
    std::vector<double> snaps;
  };
  std::map<std::pair<std::string_view, OsmId>, Group> groups;
  for (const auto& row : rows) {
    if (!row.matched()) continue;
    auto [it, inserted] =
        groups.try_emplace({row.edge_rte_key, row.match.osm_id});
    Group& g = it->second;
    if (inserted) {
      g.m_min = g.m_max = row.m();
    } else {
      g.m_min = std::min(g.m_min, row.m());
      g.m_max = std::max(g.m_max, row.m());
    }
    g.snaps.push_back(row.match.snap_dist_m);
  }

  std::vector<ConflationKeyRow> out;
  out.reserve(groups.size());
  for (auto& [key, g] : groups) {
    ConflationKeyRow r;
    r.route_name = std::string(route_name);
    r.edge_rte_key = std::string(key.first);
    r.osm_id = key.second;
    if (orientation == Orientation::kReversed) {
      r.m_min = -g.m_max;
      r.m_max = -g.m_min;
    } else {
      r.m_min = g.m_min;
      r.m_max = g.m_max;
    }
    // Sorted summation keeps the mean independent of traversal order.
    std::sort(g.snaps.begin(), g.snaps.end());
    r.mean_snap_dist_m = std::accumulate(g.snaps.begin(), g.snaps.end(), 0.0) /
                         static_cast<double>(g.snaps.size());
    r.point_count = g.snaps.size();
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(),
            [](const ConflationKeyRow& a, const ConflationKeyRow& b) {
              return std::tie(a.edge_rte_key, a.m_min, a.m_max, a.osm_id) <
                     std::tie(b.edge_rte_key, b.m_min, b.m_max, b.osm_id);
            });
  return out;
}

std::vector<ConflationKeyRow> BuildConflationKey(
    std::span<const RouteMatchResult> results, double span_threshold_mi,
    std::vector<FoldbackAudit>* audit) {
  std::vector<ConflationKeyRow> key;
  std::vector<RouteRow> ordered;
  std::vector<RouteRow> removed;
  for (const auto& result : results) {
    // Fold-backs are scanned in original milepost order, so a route and its
    // reverse-named twin are cleaned identically.
    ordered.assign(result.rows.begin(), result.rows.end());
    if (result.orientation == Orientation::kReversed) {
      std::reverse(ordered.begin(), ordered.end());
    }
    removed.clear();
    const std::vector<RouteRow> cleaned =
        CleanFoldbacks(ordered, span_threshold_mi, &removed);
    if (audit != nullptr) {
      for (auto& row : removed) audit->push_back({result.route_name, row});
    }
    auto rows = SummarizeKey(result.route_name, cleaned, result.orientation);
    key.insert(key.end(), std::make_move_iterator(rows.begin()),
               std::make_move_iterator(rows.end()));
  }
  std::stable_sort(key.begin(), key.end(),
                   [](const ConflationKeyRow& a, const ConflationKeyRow& b) {
                     return a.route_name < b.route_name;
                   });
  return key;
}

void WriteConflationKeyCsv(std::ostream& out,
                           std::span<const ConflationKeyRow> rows) {
  out << kKeyHeader << '\n';
  for (const auto& r : rows) {
    out << CsvEscape(r.route_name) << ',' << CsvEscape(r.edge_rte_key) << ','
        << r.osm_id << ',' << FormatFixed(r.m_min) << ','
        << FormatFixed(r.m_max) << ',' << FormatFixed(r.mean_snap_dist_m)
        << ',' << r.point_count << '\n';
  }
}

std::vector<ConflationKeyRow> ReadConflationKeyCsv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.Next(fields) || fields.size() != 7 || fields[0] != "route_name") {
    throw ConflationError(ErrorCode::kMalformedInput,
                          "conflation key lacks the expected header");
  }
  std::vector<ConflationKeyRow> rows;
  while (reader.Next(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != 7) {
      throw ConflationError(ErrorCode::kMalformedInput,
                            "conflation key line " +
                                std::to_string(reader.line()) +
                                " does not have 7 fields");
    }
    try {
      ConflationKeyRow r;
      r.route_name = fields[0];
      r.edge_rte_key = fields[1];
      r.osm_id = std::stoll(fields[2]);
      r.m_min = std::stod(fields[3]);
      r.m_max = std::stod(fields[4]);
      r.mean_snap_dist_m = std::stod(fields[5]);
      r.point_count = std::stoull(fields[6]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ConflationError(ErrorCode::kMalformedInput,
                            "conflation key line " +
                                std::to_string(reader.line()) +
                                " has a non-numeric field");
    }
  }
  return rows;
}

}  // namespace lrsconflate
