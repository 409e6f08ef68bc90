#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "shade/errors.hpp"
#include "shade/shadowcast.hpp"

using namespace shade;
using fixtures::rect_m;
using fixtures::sun_at;

namespace {

const GeoPoint kOrigin{-111.93, 33.42};

RenderTarget window(double half_m, std::size_t px) {
  return RenderTarget{fixtures::square_bounds(kOrigin, half_m), px, px, std::nullopt};
}

std::size_t count_value(const ShadeRaster& r, std::uint8_t v) {
  return static_cast<std::size_t>(std::count(r.pixels.begin(), r.pixels.end(), v));
}

}  // namespace

TEST_SUITE("shadowcast") {
  TEST_CASE("shadow offset points away from the sun with length h / tan(el)") {
    const Vec2 noon = shadow_offset(10.0, sun_at(45.0, 180.0));
    CHECK(noon.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(noon.y == doctest::Approx(10.0));
    const Vec2 evening = shadow_offset(10.0, sun_at(30.0, 270.0));
    CHECK(evening.x == doctest::Approx(10.0 / std::tan(30.0 * kDegToRad)));
    CHECK(std::abs(evening.y) < 1e-9);
    CHECK_THROWS_AS(shadow_offset(10.0, sun_at(0.0, 180.0)), NightTime);
    CHECK_THROWS_AS(shadow_offset(10.0, sun_at(-5.0, 180.0)), NightTime);
  }

  TEST_CASE("unit cube at 45 degrees from the south casts a one meter shadow north") {
    const LocalFrame f = LocalFrame::at(kOrigin);
    const auto b = fixtures::prism("cube", rect_m(0, 0, 1, 1), 1.0, f);
    const auto polys = shadow_polygon(b, sun_at(45.0, 180.0), f);
    REQUIRE(polys.size() == 5);
    // Union of footprint and quads is the 1 x 2 rectangle; check via sampling.
    int inside = 0;
    for (int i = 0; i < 100; ++i) {
      for (int j = 0; j < 300; ++j) {
        const Vec2 p{-0.5 + (i + 0.5) * 0.02, -0.5 + (j + 0.5) * 0.01};
        bool any = false;
        for (const auto& poly : polys) any = any || point_in_polygon(poly, p);
        const bool expected = p.x > 0 && p.x < 1 && p.y > 0 && p.y < 2;
        CHECK(any == expected);
        inside += any;
      }
    }
    CHECK(inside > 0);
  }

  TEST_CASE("polygon area and containment") {
    CHECK(polygon_area(rect_m(0, 0, 4, 3)) == doctest::Approx(12.0));
    CHECK(point_in_polygon(rect_m(0, 0, 4, 3), {1, 1}));
    CHECK_FALSE(point_in_polygon(rect_m(0, 0, 4, 3), {5, 1}));
  }

  TEST_CASE("skeleton paints roofs at building gray only") {
    const LocalFrame f = LocalFrame::at(window(32, 64).bounds.center());
    const std::vector<BuildingFootprint> scene{fixtures::prism("a", rect_m(-10, -10, 10, 10), 12.0, f)};
    const SimConfig cfg;
    const ShadeRaster sk = render(scene, std::nullopt, window(32, 64), cfg, RasterKind::skeleton);
    CHECK(sk.kind == RasterKind::skeleton);
    CHECK(count_value(sk, cfg.building_gray) == 400);
    CHECK(count_value(sk, 0) == 64 * 64 - 400);
  }

  TEST_CASE("shaded snapshot uses the configured gray levels") {
    const RenderTarget t = window(32, 64);
    const LocalFrame f = LocalFrame::at(t.bounds.center());
    const std::vector<BuildingFootprint> scene{fixtures::prism("a", rect_m(-10, -10, 10, 10), 10.0, f)};
    const SimConfig cfg;
    const ShadeRaster shaded = render(scene, sun_at(45.0, 180.0), t, cfg, RasterKind::shaded_snapshot);
    for (auto v : shaded.pixels) {
      CHECK((v == 0 || v == cfg.shade_gray || v == cfg.side_gray || v == cfg.building_gray));
    }
    CHECK(count_value(shaded, cfg.building_gray) == 400);
    // 20 x 10 m of cast shadow north of the roof, split between band and body.
    CHECK(count_value(shaded, cfg.shade_gray) + count_value(shaded, cfg.side_gray) == 200);
    CHECK(count_value(shaded, cfg.side_gray) > 0);
    CHECK(count_value(shaded, cfg.shade_gray) > 0);
  }

  TEST_CASE("render validates its inputs") {
    const RenderTarget t = window(32, 16);
    const SimConfig cfg;
    const std::vector<BuildingFootprint> none;
    CHECK_THROWS(render(none, std::nullopt, t, cfg, RasterKind::shaded_snapshot));
    CHECK_THROWS(render(none, sun_at(30, 100), t, cfg, RasterKind::skeleton));
    CHECK_THROWS(render(none, std::nullopt, t, cfg, RasterKind::ground_truth));
    SimConfig bad;
    bad.shade_gray = 5;
    CHECK_THROWS(render(none, std::nullopt, t, bad, RasterKind::skeleton));
    CHECK_THROWS_AS(render_snapshots(none, sun_at(-1, 100), t, cfg), NightTime);
  }

  TEST_CASE("ground truth follows the extraction rule on every pixel") {
    std::mt19937_64 rng(3);
    const SimConfig cfg;
    for (int trial = 0; trial < 20; ++trial) {
      const auto scene = fixtures::random_scene(rng, 96);
      const Snapshots s = render_snapshots(scene.buildings, scene.sun, scene.target, cfg);
      for (std::size_t i = 0; i < s.ground_truth.pixels.size(); ++i) {
        const bool expected = s.skeleton.pixels[i] == 0 && s.shaded.pixels[i] > cfg.alpha;
        CHECK(s.ground_truth.pixels[i] == (expected ? 255 : 0));
      }
    }
  }

  TEST_CASE("ground truth rejects mismatched grids and kinds") {
    const SimConfig cfg;
    const std::vector<BuildingFootprint> none;
    const ShadeRaster a = render(none, sun_at(40, 100), window(32, 16), cfg, RasterKind::shaded_snapshot);
    const ShadeRaster b = render(none, std::nullopt, window(32, 17), cfg, RasterKind::skeleton);
    const ShadeRaster c = render(none, std::nullopt, window(32, 16), cfg, RasterKind::skeleton);
    CHECK_THROWS_AS(extract_ground_truth(a, b, cfg), DimensionMismatch);
    CHECK_THROWS(extract_ground_truth(c, a, cfg));
    CHECK_NOTHROW(extract_ground_truth(a, c, cfg));
  }

  TEST_CASE("rasterized shade agrees with the ray-vs-prism reference") {
    std::mt19937_64 rng(99);
    const SimConfig cfg;
    std::size_t agree = 0, total = 0;
    for (int trial = 0; trial < 10; ++trial) {
      const auto scene = fixtures::random_scene(rng);
      const Snapshots s = render_snapshots(scene.buildings, scene.sun, scene.target, cfg);
      const auto ref =
          fixtures::brute_force_shade(scene.prisms, s.ground_truth, scene.sun.elevation_deg, scene.sun.azimuth_deg);
      for (std::size_t i = 0; i < ref.size(); ++i) {
        agree += (s.ground_truth.pixels[i] == 255) == (ref[i] == 1);
        ++total;
      }
    }
    CHECK(static_cast<double>(agree) / static_cast<double>(total) >= 0.99);
  }

  TEST_CASE("taller buildings and lower sun never shrink the shade") {
    const RenderTarget t = window(64, 128);
    const LocalFrame f = LocalFrame::at(t.bounds.center());
    const SimConfig cfg;
    std::size_t previous = 0;
    for (double h : {5.0, 10.0, 20.0, 30.0}) {
      const std::vector<BuildingFootprint> scene{fixtures::prism("a", rect_m(-8, -8, 8, 8), h, f)};
      const auto gt = render_snapshots(scene, sun_at(40.0, 200.0), t, cfg).ground_truth;
      const std::size_t n = count_value(gt, 255);
      CHECK(n >= previous);
      previous = n;
    }
    previous = 0;
    for (double el : {80.0, 60.0, 40.0, 25.0}) {
      const std::vector<BuildingFootprint> scene{fixtures::prism("a", rect_m(-8, -8, 8, 8), 10.0, f)};
      const std::size_t n = count_value(render_snapshots(scene, sun_at(el, 120.0), t, cfg).ground_truth, 255);
      CHECK(n >= previous);
      previous = n;
    }
  }

  TEST_CASE("tile targets cover the tile at the requested size") {
    const TileBBox tile = tile_for(kOrigin);
    const RenderTarget t = RenderTarget::for_tile(tile, 256);
    CHECK(t.width == 256);
    CHECK(t.height == 256);
    CHECK(t.tile == tile);
    CHECK(t.bounds == tile.geo_bounds);
  }

  TEST_CASE("bounds targets honour the resolution cap") {
    const GeoBounds b = fixtures::square_bounds(kOrigin, 100.0);
    const RenderTarget fine = RenderTarget::for_bounds(b, 1.0, 1024);
    CHECK(fine.width == 200);
    CHECK(fine.height == 200);
    const RenderTarget capped = RenderTarget::for_bounds(b, 1.0, 64);
    CHECK(capped.width == 64);
    CHECK(capped.height == 64);
    CHECK_THROWS(RenderTarget::for_bounds(GeoBounds{}, 1.0, 64));
  }

  TEST_CASE("config hash changes with any field") {
    SimConfig a, b;
    CHECK(a.hash() == b.hash());
    CHECK(a.hash().size() == 16);
    b.alpha = 11;
    CHECK(a.hash() != b.hash());
  }
}
