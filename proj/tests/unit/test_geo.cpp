#include <doctest.h>

#include <cmath>
#include <random>

#include "shade/errors.hpp"
#include "shade/geo.hpp"

using namespace shade;

TEST_SUITE("geo") {
  TEST_CASE("points outside WGS84 ranges are rejected") {
    CHECK_THROWS_AS(make_geo_point(181.0, 0.0), OutOfRange);
    CHECK_THROWS_AS(make_geo_point(0.0, -90.5), OutOfRange);
    CHECK_NOTHROW(make_geo_point(-180.0, 90.0));
  }

  TEST_CASE("equator origin falls in the south-east tile at zoom 1") {
    const TileBBox t = tile_for({0.0, 0.0}, 1);
    CHECK(t.x == 1);
    CHECK(t.y == 1);
  }

  TEST_CASE("Tempe tile at zoom 13 matches the slippy formula evaluated by hand") {
    // x = floor((lon + 180) / 360 * 2^13), y = floor((1 - asinh(tan(lat)) / pi) / 2 * 2^13)
    const double lon = -111.93, lat = 33.42;
    const double n = 8192.0;
    const auto x = static_cast<std::int64_t>(std::floor((lon + 180.0) / 360.0 * n));
    const double lr = lat * kPi / 180.0;
    const auto y = static_cast<std::int64_t>(std::floor((1.0 - std::asinh(std::tan(lr)) / kPi) / 2.0 * n));
    const TileBBox t = tile_for({lon, lat});
    CHECK(t.zoom == 13);
    CHECK(t.x == x);
    CHECK(t.y == y);
    CHECK(t.x == 1548);
    CHECK(t.y == 3288);
  }

  TEST_CASE("tile bounds always contain the point") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> lon(-180.0, 180.0), lat(-85.0, 85.0);
    std::uniform_int_distribution<int> zoom(0, 22);
    for (int i = 0; i < 1000; ++i) {
      const GeoPoint p{lon(rng), lat(rng)};
      const TileBBox t = tile_for(p, zoom(rng));
      CHECK(t.geo_bounds.contains(p));
      CHECK(t.geo_bounds == tile_bounds(t.zoom, t.x, t.y));
    }
  }

  TEST_CASE("tile edges are shared by neighbours") {
    const GeoBounds a = tile_bounds(13, 1548, 3288);
    const GeoBounds b = tile_bounds(13, 1549, 3288);
    const GeoBounds c = tile_bounds(13, 1548, 3289);
    CHECK(a.max_lon == b.min_lon);
    CHECK(a.min_lat == c.max_lat);
  }

  TEST_CASE("tile_for rejects latitudes beyond web-mercator and bad zooms") {
    CHECK_THROWS_AS(tile_for({0.0, 85.06}), OutOfRange);
    CHECK_THROWS_AS(tile_for({0.0, -89.0}), OutOfRange);
    CHECK_THROWS_AS(tile_for({0.0, 0.0}, 23), OutOfRange);
    CHECK_THROWS_AS(tile_for({0.0, 0.0}, -1), OutOfRange);
  }

  TEST_CASE("local frame uses 111320 m per degree scaled by cos(lat)") {
    const LocalFrame f = LocalFrame::at({-111.93, 33.42});
    CHECK(f.meters_per_deg_lat == 111320.0);
    CHECK(f.meters_per_deg_lon == doctest::Approx(111320.0 * std::cos(33.42 * kPi / 180.0)).epsilon(1e-12));
    const Vec2 o = to_local(f.origin, f);
    CHECK(o.x == 0.0);
    CHECK(o.y == 0.0);
    const Vec2 north = to_local({-111.93, 33.421}, f);
    CHECK(north.y == doctest::Approx(111.32).epsilon(1e-9));
    CHECK(std::abs(north.x) < 1e-9);
  }

  TEST_CASE("local frame round trip is exact to 1e-9 m") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> d(-0.1, 0.1);
    const GeoPoint origin{12.5, -41.3};
    const LocalFrame f = LocalFrame::at(origin);
    for (int i = 0; i < 500; ++i) {
      const GeoPoint p{origin.lon + d(rng), origin.lat + d(rng)};
      const Vec2 v = to_local(p, f);
      const Vec2 back = to_local(from_local(v, f), f);
      CHECK(std::hypot(back.x - v.x, back.y - v.y) < 1e-9);
    }
  }

  TEST_CASE("haversine of a small northward step is close to the local plane") {
    const GeoPoint a{-111.93, 33.42};
    const GeoPoint b = destination_point(a, 0.0, 100.0);
    CHECK(haversine_m(a, b) == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(b.lon == doctest::Approx(a.lon));
    const LocalFrame f = LocalFrame::at(a);
    CHECK(to_local(b, f).y == doctest::Approx(100.0).epsilon(2e-3));
  }

  TEST_CASE("bounds padding grows every side by the given meters") {
    GeoBounds b{-111.931, 33.419, -111.929, 33.421};
    const GeoBounds p = b.padded(50.0);
    const LocalFrame f = LocalFrame::at(b.center());
    CHECK((b.min_lat - p.min_lat) * f.meters_per_deg_lat == doctest::Approx(50.0).epsilon(1e-9));
    CHECK((p.max_lon - b.max_lon) * f.meters_per_deg_lon == doctest::Approx(50.0).epsilon(1e-9));
  }
}
