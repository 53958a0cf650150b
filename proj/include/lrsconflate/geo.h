#ifndef LRSCONFLATE_GEO_H_
#define LRSCONFLATE_GEO_H_

#include <span>
#include <vector>

namespace lrsconflate {

// Mean earth radius (IUGG) used for every distance in the library.
inline constexpr double kEarthRadiusMeters = 6371008.8;
inline constexpr double kMetersPerMile = 1609.344;

// WGS84 longitude/latitude in degrees.
struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

// A vertex of an LRS polyline: position plus milepost (miles). The milepost
// may be negated while a route is being processed against its travel order.
struct MeasuredPoint {
  GeoPoint point;
  double m = 0.0;
};

using MeasuredPolyline = std::vector<MeasuredPoint>;

bool IsValid(const GeoPoint& p);

// Great-circle distance in meters.
double HaversineMeters(const GeoPoint& a, const GeoPoint& b);

// Point at `fraction` of the way along the great-circle chord from a to b.
GeoPoint IntermediatePoint(const GeoPoint& a, const GeoPoint& b,
                           double fraction);

// Intermediate points every `interval_m` meters from a towards b, excluding
// both endpoints. The remainder (< interval_m) is left as the final step
// before b. Measures are interpolated linearly by distance fraction.
std::vector<MeasuredPoint> InterpolateGap(const MeasuredPoint& a,
                                          const MeasuredPoint& b,
                                          double interval_m);

double PolylineLengthMeters(std::span<const GeoPoint> points);

struct SegmentProjection {
  GeoPoint point;
  double fraction = 0.0;  // position of `point` along [a, b], in [0, 1]
  double distance_m = 0.0;
};

// Closest point of segment [a, b] to p. The projection is computed in a local
// equirectangular frame around p, which is exact enough at road-segment scale;
// the reported distance is the haversine distance to the projected point.
SegmentProjection ProjectOntoSegment(const GeoPoint& p, const GeoPoint& a,
                                     const GeoPoint& b);

// Offsets a point by east/north meters in a local tangent frame.
GeoPoint OffsetMeters(const GeoPoint& origin, double east_m, double north_m);

inline double MilesToMeters(double miles) { return miles * kMetersPerMile; }
inline double MetersToMiles(double meters) { return meters / kMetersPerMile; }

}  // namespace lrsconflate

#endif  // LRSCONFLATE_GEO_H_
