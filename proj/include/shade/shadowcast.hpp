#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shade/geo.hpp"
#include "shade/ingest.hpp"
#include "shade/raster.hpp"
#include "shade/solar.hpp"

namespace shade {

/// Rendering palette and resolution. Gray levels must satisfy
/// 0 < alpha < shade_gray < side_gray < building_gray <= 255.
struct SimConfig {
  std::size_t raster_px = 1024;
  std::uint8_t alpha = 10;
  std::uint8_t shade_gray = 90;
  std::uint8_t building_gray = 200;
  std::uint8_t side_gray = 140;

  void validate() const;
  /// Short stable hash of every field, stored in raster sidecars.
  std::string hash() const;
};

using Polygon = std::vector<Vec2>;

/// Horizontal displacement of a roof corner's shadow: points away from the sun,
/// with length height / tan(elevation). Throws NightTime when the sun is down.
Vec2 shadow_offset(double height_m, const SunPosition& sun);

/// Footprint (first) followed by one swept quad per ring edge, in local meters.
/// Their union is the building's ground shadow including the footprint itself.
std::vector<Polygon> shadow_polygon(const BuildingFootprint& b, const SunPosition& sun, const LocalFrame& frame);

double polygon_area(const Polygon& p);
/// Even-odd point in polygon with half-open edge ownership.
bool point_in_polygon(const Polygon& poly, Vec2 p);

struct RenderTarget {
  GeoBounds bounds;
  std::size_t width = 0;
  std::size_t height = 0;
  std::optional<TileBBox> tile;

  static RenderTarget for_tile(const TileBBox& tile, std::size_t px);
  /// Covers `bounds` with roughly square pixels of `meters_per_px`, capped at `max_px` per side.
  static RenderTarget for_bounds(const GeoBounds& bounds, double meters_per_px, std::size_t max_px);
};

/// Renders a skeleton (footprints only) or shaded snapshot (footprints, shadows
/// and the sun-facing side band). `sun` is required for shaded snapshots.
ShadeRaster render(std::span<const BuildingFootprint> scene, const std::optional<SunPosition>& sun,
                   const RenderTarget& target, const SimConfig& cfg, RasterKind kind);

/// Pixelwise: structure -> 0, shade <= alpha -> 0, otherwise 255.
ShadeRaster extract_ground_truth(const ShadeRaster& x_shade, const ShadeRaster& x_sk, const SimConfig& cfg);

struct Snapshots {
  ShadeRaster shaded;
  ShadeRaster skeleton;
  ShadeRaster ground_truth;
};

/// Shaded + skeleton + ground truth for one sun position. Throws NightTime at night.
Snapshots render_snapshots(std::span<const BuildingFootprint> scene, const SunPosition& sun,
                           const RenderTarget& target, const SimConfig& cfg);

}  // namespace shade
