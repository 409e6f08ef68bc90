#pragma once

#include <cstdint>
#include <optional>

namespace shade {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDegToRad = kPi / 180.0;
constexpr double kRadToDeg = 180.0 / kPi;

/// Meters per degree of latitude used by the local equirectangular plane.
constexpr double kMetersPerDegLat = 111320.0;
/// Mean earth radius for great-circle lengths.
constexpr double kEarthRadiusM = 6371008.8;
/// Latitude limit of the web-mercator tiling.
constexpr double kMaxMercatorLat = 85.05112878;

struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Checks lon in [-180, 180] and lat in [-90, 90]; throws OutOfRange otherwise.
GeoPoint make_geo_point(double lon, double lat);

struct GeoBounds {
  double min_lon = 0.0;
  double min_lat = 0.0;
  double max_lon = 0.0;
  double max_lat = 0.0;

  bool contains(const GeoPoint& p) const {
    return p.lon >= min_lon && p.lon <= max_lon && p.lat >= min_lat && p.lat <= max_lat;
  }
  GeoPoint center() const { return {(min_lon + max_lon) / 2.0, (min_lat + max_lat) / 2.0}; }
  bool empty() const { return !(max_lon > min_lon && max_lat > min_lat); }
  void extend(const GeoPoint& p);
  /// Grows every side by `meters`, converting with the local plane at the center.
  GeoBounds padded(double meters) const;

  friend bool operator==(const GeoBounds&, const GeoBounds&) = default;
};

/// A slippy-map tile (web mercator, y grows southwards).
struct TileBBox {
  int zoom = 13;
  std::int64_t x = 0;
  std::int64_t y = 0;
  GeoBounds geo_bounds;

  friend bool operator==(const TileBBox&, const TileBBox&) = default;
};

constexpr int kDefaultTileZoom = 13;

TileBBox tile_for(const GeoPoint& p, int zoom = kDefaultTileZoom);
/// Geographic bounds of tile (zoom, x, y).
GeoBounds tile_bounds(int zoom, std::int64_t x, std::int64_t y);
TileBBox make_tile(int zoom, std::int64_t x, std::int64_t y);

/// Equirectangular plane centred on `origin`, in meters east/north.
struct LocalFrame {
  GeoPoint origin;
  double meters_per_deg_lon = kMetersPerDegLat;
  double meters_per_deg_lat = kMetersPerDegLat;

  static LocalFrame at(const GeoPoint& origin);
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

Vec2 to_local(const GeoPoint& p, const LocalFrame& frame);
GeoPoint from_local(Vec2 v, const LocalFrame& frame);

/// Great-circle distance in meters.
double haversine_m(const GeoPoint& a, const GeoPoint& b);
/// Point reached after travelling `distance_m` along initial `bearing_deg` (0 = north).
GeoPoint destination_point(const GeoPoint& start, double bearing_deg, double distance_m);

}  // namespace shade
