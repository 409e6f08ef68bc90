#include "shade/shadowcast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "shade/errors.hpp"
#include "shade/hash.hpp"

namespace shade {

void SimConfig::validate() const {
  if (raster_px == 0) throw std::invalid_argument("raster_px must be positive");
  if (!(0 < alpha && alpha < shade_gray && shade_gray < side_gray && side_gray < building_gray)) {
    throw std::invalid_argument("gray levels must satisfy 0 < alpha < shade < side < building");
  }
}

std::string SimConfig::hash() const {
  const auto canonical = fmt::format("raster_px={};alpha={};shade_gray={};side_gray={};building_gray={}", raster_px,
                                     alpha, shade_gray, side_gray, building_gray);
  return sha256_hex(canonical).substr(0, 16);
}

Vec2 shadow_offset(double height_m, const SunPosition& sun) {
  if (!(sun.elevation_deg > 0.0)) throw NightTime(sun.elevation_deg);
  const double length = height_m / std::tan(sun.elevation_deg * kDegToRad);
  const double az = sun.azimuth_deg * kDegToRad;
  return {-std::sin(az) * length, -std::cos(az) * length};
}

std::vector<Polygon> shadow_polygon(const BuildingFootprint& b, const SunPosition& sun, const LocalFrame& frame) {
  const Vec2 d = shadow_offset(b.height_m, sun);
  Polygon footprint;
  footprint.reserve(b.ring.size());
  for (const auto& p : b.ring) footprint.push_back(to_local(p, frame));

  std::vector<Polygon> out;
  out.reserve(footprint.size() + 1);
  out.push_back(footprint);
  const std::size_t n = footprint.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = footprint[i];
    const Vec2 c = footprint[(i + 1) % n];
    out.push_back({a, c, c + d, a + d});
  }
  return out;
}

double polygon_area(const Polygon& p) {
  double twice = 0.0;
  for (std::size_t i = 0, n = p.size(); i < n; ++i) twice += cross(p[i], p[(i + 1) % n]);
  return std::abs(twice) / 2.0;
}

bool point_in_polygon(const Polygon& poly, Vec2 p) {
  bool inside = false;
  for (std::size_t i = 0, n = poly.size(), j = n - 1; i < n; j = i++) {
    const Vec2 a = poly[j];
    const Vec2 b = poly[i];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x >= x) inside = !inside;
    }
  }
  return inside;
}

RenderTarget RenderTarget::for_tile(const TileBBox& tile, std::size_t px) {
  return {tile.geo_bounds, px, px, tile};
}

RenderTarget RenderTarget::for_bounds(const GeoBounds& bounds, double meters_per_px, std::size_t max_px) {
  if (bounds.empty()) throw std::invalid_argument("render bounds are empty");
  if (!(meters_per_px > 0.0) || max_px == 0) throw std::invalid_argument("invalid render resolution");
  const LocalFrame f = LocalFrame::at(bounds.center());
  const double span_x = (bounds.max_lon - bounds.min_lon) * f.meters_per_deg_lon;
  const double span_y = (bounds.max_lat - bounds.min_lat) * f.meters_per_deg_lat;
  double mpp = meters_per_px;
  const double longest = std::max(span_x, span_y);
  if (longest / mpp > static_cast<double>(max_px)) mpp = longest / static_cast<double>(max_px);
  const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span_x / mpp - 1e-9)));
  const auto h = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span_y / mpp - 1e-9)));
  return {bounds, std::min(w, max_px), std::min(h, max_px), std::nullopt};
}

namespace {

double distance_to_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Vec2 q = a + ab * t - p;
  return std::hypot(q.x, q.y);
}

double distance_to_boundary(const Polygon& poly, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    best = std::min(best, distance_to_segment(p, poly[i], poly[(i + 1) % n]));
  }
  return best;
}

/// Pixel-center grid of a raster expressed in the local plane.
class PixelGrid {
public:
  PixelGrid(const ShadeRaster& r, const LocalFrame& frame) : width_(r.width), height_(r.height) {
    xs_.resize(r.width);
    ys_.resize(r.height);
    for (std::size_t c = 0; c < r.width; ++c) xs_[c] = to_local(r.pixel_center(c, 0), frame).x;
    for (std::size_t row = 0; row < r.height; ++row) ys_[row] = to_local(r.pixel_center(0, row), frame).y;
  }

  Vec2 center(std::size_t col, std::size_t row) const { return {xs_[col], ys_[row]}; }

  // Calls fn(col, row) for every pixel whose center lies inside the polygon,
  // using the same half-open crossing rule as point_in_polygon.
  template <typename Fn>
  void scan(const Polygon& poly, Fn&& fn) const {
    if (poly.size() < 3 || width_ == 0 || height_ == 0) return;
    double ymin = poly[0].y, ymax = poly[0].y, xmin = poly[0].x, xmax = poly[0].x;
    for (const auto& v : poly) {
      ymin = std::min(ymin, v.y);
      ymax = std::max(ymax, v.y);
      xmin = std::min(xmin, v.x);
      xmax = std::max(xmax, v.x);
    }
    if (xmax < xs_.front() || xmin > xs_.back() || ymax < ys_.back() || ymin > ys_.front()) return;

    // ys_ decreases with the row index.
    const auto row_begin = static_cast<std::size_t>(
        std::lower_bound(ys_.begin(), ys_.end(), ymax, std::greater<>()) - ys_.begin());
    std::vector<double> crossings;
    for (std::size_t row = row_begin; row < height_ && ys_[row] >= ymin; ++row) {
      const double y = ys_[row];
      crossings.clear();
      for (std::size_t i = 0, n = poly.size(), j = n - 1; i < n; j = i++) {
        const Vec2 a = poly[j];
        const Vec2 b = poly[i];
        if ((a.y > y) != (b.y > y)) crossings.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
      }
      std::sort(crossings.begin(), crossings.end());
      for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
        const double x0 = crossings[k];
        const double x1 = crossings[k + 1];
        // Center x inside [x0, x1) belongs to the span; xs_ increases with col.
        auto first = std::lower_bound(xs_.begin(), xs_.end(), x0);
        auto last = std::lower_bound(first, xs_.end(), x1);
        for (auto it = first; it != last; ++it) fn(static_cast<std::size_t>(it - xs_.begin()), row);
      }
    }
  }

private:
  std::size_t width_;
  std::size_t height_;
  std::vector<double> xs_;
  std::vector<double> ys_;
};

void paint_max(ShadeRaster& r, std::size_t col, std::size_t row, std::uint8_t value) {
  auto& px = r.at(col, row);
  px = std::max(px, value);
}

}  // namespace

ShadeRaster render(std::span<const BuildingFootprint> scene, const std::optional<SunPosition>& sun,
                   const RenderTarget& target, const SimConfig& cfg, RasterKind kind) {
  cfg.validate();
  if (kind != RasterKind::skeleton && kind != RasterKind::shaded_snapshot) {
    throw std::invalid_argument("render produces skeleton or shaded snapshots only");
  }
  if (kind == RasterKind::shaded_snapshot && !sun) throw std::invalid_argument("shaded snapshot needs a sun position");
  if (kind == RasterKind::skeleton && sun) throw std::invalid_argument("skeleton snapshot is rendered without the sun");
  if (target.width == 0 || target.height == 0) throw std::invalid_argument("render target has no pixels");

  ShadeRaster r = ShadeRaster::blank(target.width, target.height, target.bounds, kind);
  r.tile = target.tile;
  const LocalFrame frame = LocalFrame::at(target.bounds.center());
  const PixelGrid grid(r, frame);
  const double band_m = std::max(r.pixel_width_m(), r.pixel_height_m());

  for (const auto& building : scene) {
    if (kind == RasterKind::skeleton) {
      Polygon footprint;
      for (const auto& p : building.ring) footprint.push_back(to_local(p, frame));
      grid.scan(footprint, [&](std::size_t c, std::size_t row) { paint_max(r, c, row, cfg.building_gray); });
      continue;
    }

    const auto polys = shadow_polygon(building, *sun, frame);
    const Polygon& footprint = polys.front();
    for (std::size_t i = 1; i < polys.size(); ++i) {
      grid.scan(polys[i], [&](std::size_t c, std::size_t row) {
        const bool side = distance_to_boundary(footprint, grid.center(c, row)) <= band_m;
        paint_max(r, c, row, side ? cfg.side_gray : cfg.shade_gray);
      });
    }
    grid.scan(footprint, [&](std::size_t c, std::size_t row) { paint_max(r, c, row, cfg.building_gray); });
  }
  return r;
}

ShadeRaster extract_ground_truth(const ShadeRaster& x_shade, const ShadeRaster& x_sk, const SimConfig& cfg) {
  if (!x_shade.same_grid(x_sk)) throw DimensionMismatch("shaded and skeleton snapshots differ in size or bounds");
  if (x_shade.kind != RasterKind::shaded_snapshot || x_sk.kind != RasterKind::skeleton) {
    throw std::invalid_argument("expected a shaded snapshot and a skeleton snapshot");
  }
  ShadeRaster gt = ShadeRaster::blank(x_shade.width, x_shade.height, x_shade.bounds, RasterKind::ground_truth);
  gt.tile = x_shade.tile;
  for (std::size_t i = 0; i < gt.pixels.size(); ++i) {
    if (x_sk.pixels[i] > 0) continue;
    if (x_shade.pixels[i] <= cfg.alpha) continue;
    gt.pixels[i] = 255;
  }
  return gt;
}

Snapshots render_snapshots(std::span<const BuildingFootprint> scene, const SunPosition& sun,
                           const RenderTarget& target, const SimConfig& cfg) {
  if (!sun.above_horizon()) throw NightTime(sun.elevation_deg);
  Snapshots s;
  s.shaded = render(scene, sun, target, cfg, RasterKind::shaded_snapshot);
  s.skeleton = render(scene, std::nullopt, target, cfg, RasterKind::skeleton);
  s.ground_truth = extract_ground_truth(s.shaded, s.skeleton, cfg);
  return s;
}

}  // namespace shade
