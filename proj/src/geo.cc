#include "lrsconflate/geo.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace lrsconflate {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

using Vec3 = std::array<double, 3>;

Vec3 ToUnitVector(const GeoPoint& p) {
  const double lat = p.lat * kDegToRad;
  const double lon = p.lon * kDegToRad;
  return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon),
          std::sin(lat)};
}

GeoPoint FromUnitVector(const Vec3& v) {
  const double lat = std::atan2(v[2], std::hypot(v[0], v[1]));
  const double lon = std::atan2(v[1], v[0]);
  return {lon * kRadToDeg, lat * kRadToDeg};
}

}  // namespace

bool IsValid(const GeoPoint& p) {
  return std::isfinite(p.lon) && std::isfinite(p.lat) && p.lon >= -180.0 &&
         p.lon <= 180.0 && p.lat >= -90.0 && p.lat <= 90.0;
}

double HaversineMeters(const GeoPoint& a, const GeoPoint& b) {
  const double dlat = (b.lat - a.lat) * kDegToRad;
  const double dlon = (b.lon - a.lon) * kDegToRad;
  const double s_lat = std::sin(dlat / 2.0);
  const double s_lon = std::sin(dlon / 2.0);
  double h = s_lat * s_lat + std::cos(a.lat * kDegToRad) *
                                 std::cos(b.lat * kDegToRad) * s_lon * s_lon;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusMeters * std::asin(std::sqrt(h));
}

GeoPoint IntermediatePoint(const GeoPoint& a, const GeoPoint& b,
                           double fraction) {
  const double delta = HaversineMeters(a, b) / kEarthRadiusMeters;
  if (delta == 0.0) return a;
  const Vec3 va = ToUnitVector(a);
  const Vec3 vb = ToUnitVector(b);
  const double sin_delta = std::sin(delta);
  const double wa = std::sin((1.0 - fraction) * delta) / sin_delta;
  const double wb = std::sin(fraction * delta) / sin_delta;
  return FromUnitVector({wa * va[0] + wb * vb[0], wa * va[1] + wb * vb[1],
                         wa * va[2] + wb * vb[2]});
}

std::vector<MeasuredPoint> InterpolateGap(const MeasuredPoint& a,
                                          const MeasuredPoint& b,
                                          double interval_m) {
  std::vector<MeasuredPoint> out;
  if (!(interval_m > 0.0)) return out;
  const double gap = HaversineMeters(a.point, b.point);
  // Steps landing within a micrometre of b would duplicate it.
  constexpr double kEndpointSlack = 1e-6;
  for (int k = 1;; ++k) {
    const double along = k * interval_m;
    if (along >= gap - kEndpointSlack) break;
    const double f = along / gap;
    out.push_back({IntermediatePoint(a.point, b.point, f),
                   a.m + f * (b.m - a.m)});
  }
  return out;
}

double PolylineLengthMeters(std::span<const GeoPoint> points) {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    total += HaversineMeters(points[i - 1], points[i]);
  }
  return total;
}

SegmentProjection ProjectOntoSegment(const GeoPoint& p, const GeoPoint& a,
                                     const GeoPoint& b) {
  const double kx = std::cos(p.lat * kDegToRad);
  const double ax = (a.lon - p.lon) * kx;
  const double ay = a.lat - p.lat;
  const double dx = (b.lon - a.lon) * kx;
  const double dy = b.lat - a.lat;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(-(ax * dx + ay * dy) / len2, 0.0, 1.0);
  SegmentProjection proj;
  proj.fraction = t;
  if (t == 0.0) {
    proj.point = a;
  } else if (t == 1.0) {
    proj.point = b;
  } else {
    proj.point = {a.lon + t * (b.lon - a.lon), a.lat + t * (b.lat - a.lat)};
  }
  proj.distance_m = HaversineMeters(p, proj.point);
  return proj;
}

GeoPoint OffsetMeters(const GeoPoint& origin, double east_m, double north_m) {
  const double meters_per_deg = kEarthRadiusMeters * kDegToRad;
  return {origin.lon +
              east_m / (meters_per_deg * std::cos(origin.lat * kDegToRad)),
          origin.lat + north_m / meters_per_deg};
}

}  // namespace lrsconflate
