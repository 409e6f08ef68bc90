#include "shade/geo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shade/errors.hpp"

namespace shade {

GeoPoint make_geo_point(double lon, double lat) {
  if (!(lon >= -180.0 && lon <= 180.0) || !(lat >= -90.0 && lat <= 90.0)) {
    throw OutOfRange("coordinate out of range: lon=" + std::to_string(lon) +
                     " lat=" + std::to_string(lat));
  }
  return {lon, lat};
}

void GeoBounds::extend(const GeoPoint& p) {
  min_lon = std::min(min_lon, p.lon);
  min_lat = std::min(min_lat, p.lat);
  max_lon = std::max(max_lon, p.lon);
  max_lat = std::max(max_lat, p.lat);
}

GeoBounds GeoBounds::padded(double meters) const {
  const LocalFrame frame = LocalFrame::at(center());
  const double dlon = meters / frame.meters_per_deg_lon;
  const double dlat = meters / frame.meters_per_deg_lat;
  return {min_lon - dlon, min_lat - dlat, max_lon + dlon, max_lat + dlat};
}

namespace {

void check_zoom(int zoom) {
  if (zoom < 0 || zoom > 22) throw OutOfRange("zoom must be in [0, 22]");
}

double tile_lon(int zoom, double x) { return x / std::ldexp(1.0, zoom) * 360.0 - 180.0; }

double tile_lat(int zoom, double y) {
  const double n = kPi * (1.0 - 2.0 * y / std::ldexp(1.0, zoom));
  return std::atan(std::sinh(n)) * kRadToDeg;
}

}  // namespace

TileBBox tile_for(const GeoPoint& p, int zoom) {
  check_zoom(zoom);
  if (std::abs(p.lat) > kMaxMercatorLat) {
    throw OutOfRange("latitude beyond the web-mercator limit: " + std::to_string(p.lat));
  }
  if (!(p.lon >= -180.0 && p.lon <= 180.0)) throw OutOfRange("longitude out of range");

  const double n = std::ldexp(1.0, zoom);
  const auto last = static_cast<std::int64_t>(n) - 1;
  const double lat_rad = p.lat * kDegToRad;
  auto x = static_cast<std::int64_t>(std::floor((p.lon + 180.0) / 360.0 * n));
  auto y = static_cast<std::int64_t>(
      std::floor((1.0 - std::asinh(std::tan(lat_rad)) / kPi) / 2.0 * n));
  x = std::clamp<std::int64_t>(x, 0, last);
  y = std::clamp<std::int64_t>(y, 0, last);

  // Guard against the floating point edge where the forward formula and the
  // inverse disagree by an ulp.
  TileBBox tile = make_tile(zoom, x, y);
  if (p.lat > tile.geo_bounds.max_lat && y > 0) tile = make_tile(zoom, x, y - 1);
  if (p.lat < tile.geo_bounds.min_lat && y < last) tile = make_tile(zoom, x, y + 1);
  if (p.lon < tile.geo_bounds.min_lon && x > 0) tile = make_tile(zoom, x - 1, tile.y);
  if (p.lon > tile.geo_bounds.max_lon && x < last) tile = make_tile(zoom, x + 1, tile.y);
  return tile;
}

GeoBounds tile_bounds(int zoom, std::int64_t x, std::int64_t y) {
  check_zoom(zoom);
  const auto n = static_cast<std::int64_t>(1) << zoom;
  if (x < 0 || x >= n || y < 0 || y >= n) throw OutOfRange("tile index outside the zoom level");
  const auto xd = static_cast<double>(x);
  const auto yd = static_cast<double>(y);
  return {tile_lon(zoom, xd), tile_lat(zoom, yd + 1.0), tile_lon(zoom, xd + 1.0), tile_lat(zoom, yd)};
}

TileBBox make_tile(int zoom, std::int64_t x, std::int64_t y) {
  return {zoom, x, y, tile_bounds(zoom, x, y)};
}

LocalFrame LocalFrame::at(const GeoPoint& origin) {
  return {origin, kMetersPerDegLat * std::cos(origin.lat * kDegToRad), kMetersPerDegLat};
}

Vec2 to_local(const GeoPoint& p, const LocalFrame& frame) {
  return {(p.lon - frame.origin.lon) * frame.meters_per_deg_lon,
          (p.lat - frame.origin.lat) * frame.meters_per_deg_lat};
}

GeoPoint from_local(Vec2 v, const LocalFrame& frame) {
  return {frame.origin.lon + v.x / frame.meters_per_deg_lon,
          frame.origin.lat + v.y / frame.meters_per_deg_lat};
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) {
  const double lat1 = a.lat * kDegToRad;
  const double lat2 = b.lat * kDegToRad;
  const double dlat = lat2 - lat1;
  const double dlon = (b.lon - a.lon) * kDegToRad;
  const double s = std::sin(dlat / 2.0);
  const double t = std::sin(dlon / 2.0);
  const double h = s * s + std::cos(lat1) * std::cos(lat2) * t * t;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

GeoPoint destination_point(const GeoPoint& start, double bearing_deg, double distance_m) {
  const double delta = distance_m / kEarthRadiusM;
  const double theta = bearing_deg * kDegToRad;
  const double lat1 = start.lat * kDegToRad;
  const double lon1 = start.lon * kDegToRad;
  const double lat2 =
      std::asin(std::sin(lat1) * std::cos(delta) + std::cos(lat1) * std::sin(delta) * std::cos(theta));
  const double lon2 = lon1 + std::atan2(std::sin(theta) * std::sin(delta) * std::cos(lat1),
                                        std::cos(delta) - std::sin(lat1) * std::sin(lat2));
  return {lon2 * kRadToDeg, lat2 * kRadToDeg};
}

}  // namespace shade
