#include "lrsconflate/geo.h"

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

namespace lrsconflate {
namespace {

// Independent spherical law of cosines; accurate enough away from tiny
// distances.
double CosineLawMeters(const GeoPoint& a, const GeoPoint& b) {
  const double r = std::numbers::pi / 180;
  const double c = std::sin(a.lat * r) * std::sin(b.lat * r) +
                   std::cos(a.lat * r) * std::cos(b.lat * r) *
                       std::cos((b.lon - a.lon) * r);
  return kEarthRadiusMeters * std::acos(std::clamp(c, -1.0, 1.0));
}

TEST(Haversine, OneThousandthDegreeOfLatitude) {
  // An arc of 0.001 degree on the mean sphere.
  const double expected = kEarthRadiusMeters * 0.001 * std::numbers::pi / 180;
  EXPECT_NEAR(HaversineMeters({-77.0, 37.0}, {-77.0, 37.001}), expected, 1e-9);
  EXPECT_NEAR(expected, 111.195, 1e-3);
}

TEST(Haversine, AgreesWithCosineLaw) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lon(-180, 180), lat(-80, 80);
  for (int i = 0; i < 1000; ++i) {
    const GeoPoint a{lon(rng), lat(rng)}, b{lon(rng), lat(rng)};
    EXPECT_NEAR(HaversineMeters(a, b), CosineLawMeters(a, b), 1e-3);
  }
}

TEST(Haversine, SymmetricAndTriangle) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> d(-0.05, 0.05);
  const GeoPoint o{-77.5, 37.5};
  for (int i = 0; i < 1000; ++i) {
    const GeoPoint a{o.lon + d(rng), o.lat + d(rng)};
    const GeoPoint b{o.lon + d(rng), o.lat + d(rng)};
    const GeoPoint c{o.lon + d(rng), o.lat + d(rng)};
    EXPECT_DOUBLE_EQ(HaversineMeters(a, b), HaversineMeters(b, a));
    EXPECT_LE(HaversineMeters(a, c),
              HaversineMeters(a, b) + HaversineMeters(b, c) + 1e-9);
    EXPECT_EQ(HaversineMeters(a, a), 0.0);
  }
}

TEST(IntermediatePoint, SplitsDistanceProportionally) {
  const GeoPoint a{-77.5, 37.5}, b{-77.3, 37.7};
  const double total = HaversineMeters(a, b);
  for (double f : {0.0, 0.1, 0.25, 0.5, 0.9, 1.0}) {
    const GeoPoint p = IntermediatePoint(a, b, f);
    EXPECT_NEAR(HaversineMeters(a, p), f * total, 1e-6);
    EXPECT_NEAR(HaversineMeters(p, b), (1 - f) * total, 1e-6);
  }
}

TEST(InterpolateGap, TwentyFiveMetersGivesTwoPoints) {
  const MeasuredPoint a{{-77.5, 37.5}, 1.0};
  const MeasuredPoint b{OffsetMeters(a.point, 25.0, 0.0), 2.0};
  const double gap = HaversineMeters(a.point, b.point);
  ASSERT_NEAR(gap, 25.0, 1e-6);
  const auto pts = InterpolateGap(a, b, 10.0);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_NEAR(HaversineMeters(a.point, pts[0].point), 10.0, 1e-6);
  EXPECT_NEAR(HaversineMeters(a.point, pts[1].point), 20.0, 1e-6);
  EXPECT_NEAR(pts[0].m, 1.0 + 10.0 / gap, 1e-12);
  EXPECT_NEAR(pts[1].m, 1.0 + 20.0 / gap, 1e-12);
}

TEST(InterpolateGap, ExactMultipleDoesNotDuplicateEndpoint) {
  const MeasuredPoint a{{-77.5, 37.5}, 0.0};
  const MeasuredPoint b{a.point, 0.0};
  // 30 m apart: points at 10 and 20 only.
  const GeoPoint far = OffsetMeters(a.point, 30.0, 0.0);
  const auto pts = InterpolateGap(a, {far, 1.0}, 10.0);
  EXPECT_EQ(pts.size(), 2u);
  EXPECT_TRUE(InterpolateGap(a, b, 10.0).empty());
}

TEST(ProjectOntoSegment, PerpendicularFoot) {
  const GeoPoint a{-77.5, 37.5};
  const GeoPoint b = OffsetMeters(a, 100.0, 0.0);
  const GeoPoint p = OffsetMeters(a, 30.0, 8.0);
  const auto proj = ProjectOntoSegment(p, a, b);
  EXPECT_NEAR(proj.fraction, 0.3, 1e-3);
  EXPECT_NEAR(proj.distance_m, 8.0, 0.01);
  EXPECT_NEAR(HaversineMeters(proj.point, p), proj.distance_m, 1e-9);
}

TEST(ProjectOntoSegment, ClampsToEndpoints) {
  const GeoPoint a{-77.5, 37.5};
  const GeoPoint b = OffsetMeters(a, 100.0, 0.0);
  const auto before = ProjectOntoSegment(OffsetMeters(a, -20.0, 0.0), a, b);
  EXPECT_EQ(before.fraction, 0.0);
  EXPECT_EQ(before.point, a);
  const auto after = ProjectOntoSegment(OffsetMeters(a, 130.0, 5.0), a, b);
  EXPECT_EQ(after.fraction, 1.0);
  const auto degenerate = ProjectOntoSegment(b, a, a);
  EXPECT_EQ(degenerate.point, a);
  EXPECT_NEAR(degenerate.distance_m, 100.0, 1e-6);
}

TEST(OffsetMeters, RoundTrip) {
  const GeoPoint o{-77.5, 37.5};
  EXPECT_NEAR(HaversineMeters(o, OffsetMeters(o, 0.0, 250.0)), 250.0, 1e-6);
  EXPECT_NEAR(HaversineMeters(o, OffsetMeters(o, 300.0, 0.0)), 300.0, 0.01);
}

TEST(Units, Miles) {
  EXPECT_DOUBLE_EQ(MilesToMeters(1.0), 1609.344);
  EXPECT_DOUBLE_EQ(MetersToMiles(MilesToMeters(0.05)), 0.05);
}

TEST(IsValid, RejectsOutOfRange) {
  EXPECT_TRUE(IsValid({-77.5, 37.5}));
  EXPECT_FALSE(IsValid({181.0, 0.0}));
  EXPECT_FALSE(IsValid({0.0, -91.0}));
  EXPECT_FALSE(IsValid({std::nan(""), 0.0}));
}

}  // namespace
}  // namespace lrsconflate
