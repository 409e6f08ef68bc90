#pragma once

// Scene builders and brute-force reference implementations shared by the unit
// tests and the acceptance runner. Nothing here calls into the rasterizer or
// the router, so the checks stay independent of the code under test.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "shade/dataset.hpp"
#include "shade/geo.hpp"
#include "shade/ingest.hpp"
#include "shade/metrics.hpp"
#include "shade/raster.hpp"
#include "shade/road_graph.hpp"
#include "shade/routing.hpp"
#include "shade/shadowcast.hpp"
#include "shade/solar.hpp"

#ifndef SHADE_SOURCE_DIR
#define SHADE_SOURCE_DIR "."
#endif

namespace fixtures {

using namespace shade;

inline std::filesystem::path source_dir() { return SHADE_SOURCE_DIR; }

inline std::filesystem::path campus_dir() { return source_dir() / "data" / "campus"; }

inline std::string read_campus_buildings() { return read_file_text(campus_dir() / "buildings.geojson"); }

inline std::string read_campus_roads() { return read_file_text(campus_dir() / "roads.geojson"); }

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("shade-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Sun position built directly from angles.
inline SunPosition sun_at(double elevation_deg, double azimuth_deg) {
  SunPosition s;
  s.elevation_deg = elevation_deg;
  s.azimuth_deg = azimuth_deg;
  return s;
}

/// Bounds of the square reaching `half_m` meters from `origin` in each direction.
inline GeoBounds square_bounds(const GeoPoint& origin, double half_m) {
  const LocalFrame f = LocalFrame::at(origin);
  const GeoPoint lo = from_local({-half_m, -half_m}, f);
  const GeoPoint hi = from_local({half_m, half_m}, f);
  return {lo.lon, lo.lat, hi.lon, hi.lat};
}

inline BuildingFootprint prism(const std::string& id, const std::vector<Vec2>& ring_m, double height_m,
                               const LocalFrame& frame) {
  BuildingFootprint b;
  b.id = id;
  b.height_m = height_m;
  for (const auto& v : ring_m) b.ring.push_back(from_local(v, frame));
  return b;
}

inline std::vector<Vec2> rect_m(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

/// Random convex polygon with its vertices on a circle.
inline std::vector<Vec2> random_convex(std::mt19937_64& rng, Vec2 center, double radius) {
  std::uniform_int_distribution<int> count(3, 7);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  const int n = count(rng);
  std::vector<double> angles(static_cast<std::size_t>(n));
  for (auto& a : angles) a = angle(rng);
  std::sort(angles.begin(), angles.end());
  std::vector<Vec2> pts;
  for (double a : angles) pts.push_back({center.x + radius * std::cos(a), center.y + radius * std::sin(a)});
  // Points on a circle in angular order are convex; drop near-duplicates.
  std::vector<Vec2> out;
  for (const auto& p : pts) {
    if (out.empty() || std::hypot(p.x - out.back().x, p.y - out.back().y) > 0.5) out.push_back(p);
  }
  if (out.size() >= 3 && std::hypot(out.front().x - out.back().x, out.front().y - out.back().y) <= 0.5) out.pop_back();
  if (out.size() < 3) return rect_m(center.x - radius / 2, center.y - radius / 2, center.x + radius / 2, center.y + radius / 2);
  return out;
}

// ---- brute-force shadow reference -------------------------------------------------

/// Winding-number containment, boundary counts as inside.
inline bool inside_or_on(const std::vector<Vec2>& poly, Vec2 p) {
  int wn = 0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % n];
    const double c = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
    const bool on_line = std::abs(c) < 1e-12 && std::min(a.x, b.x) - 1e-12 <= p.x && p.x <= std::max(a.x, b.x) + 1e-12 &&
                         std::min(a.y, b.y) - 1e-12 <= p.y && p.y <= std::max(a.y, b.y) + 1e-12;
    if (on_line) return true;
    if (a.y <= p.y) {
      if (b.y > p.y && c > 0) ++wn;
    } else if (b.y <= p.y && c < 0) {
      --wn;
    }
  }
  return wn != 0;
}

inline bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  auto orient = [](Vec2 a, Vec2 b, Vec2 c) {
    const double v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    return (v > 1e-12) - (v < -1e-12);
  };
  auto on_seg = [](Vec2 a, Vec2 b, Vec2 c) {
    return std::min(a.x, b.x) - 1e-12 <= c.x && c.x <= std::max(a.x, b.x) + 1e-12 && std::min(a.y, b.y) - 1e-12 <= c.y &&
           c.y <= std::max(a.y, b.y) + 1e-12;
  };
  const int o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2), o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_seg(p1, p2, q1)) return true;
  if (o2 == 0 && on_seg(p1, p2, q2)) return true;
  if (o3 == 0 && on_seg(q1, q2, p1)) return true;
  if (o4 == 0 && on_seg(q1, q2, p2)) return true;
  return false;
}

/// Does the ray from ground point p toward the sun pass through the prism
/// (footprint extruded to height h)? The ray rises tan(el) meters per meter of
/// horizontal travel, so it is inside the prism exactly where its horizontal
/// trace lies in the footprint within h / tan(el) of p.
inline bool ray_hits_prism(Vec2 p, const std::vector<Vec2>& footprint, double h, double elevation_deg,
                           double azimuth_deg) {
  const double reach = h / std::tan(elevation_deg * kDegToRad);
  const double az = azimuth_deg * kDegToRad;
  const Vec2 q{p.x + std::sin(az) * reach, p.y + std::cos(az) * reach};
  if (inside_or_on(footprint, p) || inside_or_on(footprint, q)) return true;
  for (std::size_t i = 0, n = footprint.size(); i < n; ++i) {
    if (segments_intersect(p, q, footprint[i], footprint[(i + 1) % n])) return true;
  }
  return false;
}

struct Prism {
  std::vector<Vec2> footprint;
  double height_m;
};

/// Reference shade mask: ground pixel (not under a roof) whose sun ray is blocked.
inline std::vector<std::uint8_t> brute_force_shade(const std::vector<Prism>& prisms, const ShadeRaster& grid,
                                                   double elevation_deg, double azimuth_deg) {
  const LocalFrame frame = LocalFrame::at(grid.bounds.center());
  std::vector<std::uint8_t> out(grid.width * grid.height, 0);
  for (std::size_t row = 0; row < grid.height; ++row) {
    for (std::size_t col = 0; col < grid.width; ++col) {
      const Vec2 p = to_local(grid.pixel_center(col, row), frame);
      bool roof = false, shaded = false;
      for (const auto& pr : prisms) {
        if (inside_or_on(pr.footprint, p)) roof = true;
      }
      if (roof) continue;
      for (const auto& pr : prisms) {
        if (ray_hits_prism(p, pr.footprint, pr.height_m, elevation_deg, azimuth_deg)) {
          shaded = true;
          break;
        }
      }
      out[row * grid.width + col] = shaded ? 1 : 0;
    }
  }
  return out;
}

struct RandomScene {
  std::vector<BuildingFootprint> buildings;
  std::vector<Prism> prisms;
  RenderTarget target;
  SunPosition sun;
};

/// Up to five random convex prisms in a 128 x 128 m window at 1 m/px.
inline RandomScene random_scene(std::mt19937_64& rng, std::size_t px = 128) {
  const GeoPoint origin{-111.93, 33.42};
  const LocalFrame frame = LocalFrame::at(origin);
  RandomScene s;
  const double half = static_cast<double>(px) / 2.0;
  s.target = RenderTarget{square_bounds(origin, half), px, px, std::nullopt};
  std::uniform_int_distribution<int> count(1, 5);
  std::uniform_real_distribution<double> pos(-half * 0.6, half * 0.6);
  std::uniform_real_distribution<double> radius(4.0, 18.0);
  std::uniform_real_distribution<double> height(3.0, 40.0);
  std::uniform_real_distribution<double> elevation(12.0, 85.0);
  std::uniform_real_distribution<double> azimuth(0.0, 360.0);
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    auto ring = random_convex(rng, {pos(rng), pos(rng)}, radius(rng));
    const double h = height(rng);
    BuildingFootprint b = prism("b" + std::to_string(i), ring, h, frame);
    // Compare against the ring exactly as the rasterizer will see it.
    const LocalFrame render_frame = LocalFrame::at(s.target.bounds.center());
    std::vector<Vec2> seen;
    for (const auto& g : b.ring) seen.push_back(to_local(g, render_frame));
    s.prisms.push_back({seen, h});
    s.buildings.push_back(std::move(b));
  }
  s.sun = sun_at(elevation(rng), azimuth(rng));
  return s;
}

// ---- brute-force routing reference ----------------------------------------------

struct PathCost {
  double cost = std::numeric_limits<double>::infinity();
  double exposure = 0.0;
  bool found = false;
};

/// Minimum edge_cost over every simple path, by exhaustive DFS.
inline PathCost brute_force_route(const RoadGraph& g, NodeId from, NodeId to, double w) {
  std::vector<std::vector<const RoadEdge*>> adj(g.nodes.size());
  for (const auto& e : g.edges) {
    adj[e.u].push_back(&e);
    adj[e.v].push_back(&e);
  }
  PathCost best;
  std::vector<bool> seen(g.nodes.size(), false);
  std::function<void(NodeId, double, double)> dfs = [&](NodeId u, double cost, double exposure) {
    if (u == to) {
      if (cost < best.cost) best = {cost, exposure, true};
      return;
    }
    seen[u] = true;
    for (const RoadEdge* e : adj[u]) {
      const NodeId v = e->u == u ? e->v : e->u;
      if (seen[v]) continue;
      const double len = e->length_m;
      const double r = *e->shade_ratio;
      dfs(v, cost + (1.0 - w) * len + w * len * (1.0 - r), exposure + len * (1.0 - r));
    }
    seen[u] = false;
  };
  if (from == to) return {0.0, 0.0, true};
  dfs(from, 0.0, 0.0);
  return best;
}

/// Random connected-or-not graph with up to 12 nodes and random shade ratios.
inline RoadGraph random_graph(std::mt19937_64& rng) {
  const GeoPoint origin{-111.93, 33.42};
  const LocalFrame frame = LocalFrame::at(origin);
  std::uniform_int_distribution<int> node_count(2, 12);
  std::uniform_real_distribution<double> coord(0.0, 400.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RoadGraph g;
  const int n = node_count(rng);
  for (int i = 0; i < n; ++i) g.nodes.push_back(from_local({coord(rng), coord(rng)}, frame));
  const double density = 0.2 + 0.5 * unit(rng);
  for (NodeId u = 0; u < g.nodes.size(); ++u) {
    for (NodeId v = u + 1; v < g.nodes.size(); ++v) {
      if (unit(rng) > density) continue;
      RoadEdge e;
      e.id = static_cast<EdgeId>(g.edges.size());
      e.u = u;
      e.v = v;
      e.polyline = {g.nodes[u], g.nodes[v]};
      // Detour factor so lengths are not purely Euclidean.
      e.length_m = haversine_m(g.nodes[u], g.nodes[v]) * (1.0 + unit(rng));
      const double r = unit(rng);
      e.shade_ratio = r < 0.2 ? 0.0 : (r > 0.9 ? 1.0 : r);
      g.edges.push_back(std::move(e));
    }
  }
  return g;
}

// ---- boundary reference ------------------------------------------------------------

/// Dilate minus erode with a 3 x 3 window, evaluated pixel by pixel.
inline BinaryMask brute_boundary(const BinaryMask& m) {
  BinaryMask out = BinaryMask::empty(m.width, m.height);
  for (long r = 0; r < long(m.height); ++r) {
    for (long c = 0; c < long(m.width); ++c) {
      bool any = false, all = true;
      for (long dr = -1; dr <= 1; ++dr) {
        for (long dc = -1; dc <= 1; ++dc) {
          const long rr = r + dr, cc = c + dc;
          const bool v = rr >= 0 && cc >= 0 && rr < long(m.height) && cc < long(m.width) &&
                         m.bits[std::size_t(rr) * m.width + std::size_t(cc)];
          any = any || v;
          all = all && v;
        }
      }
      out.bits[std::size_t(r) * m.width + std::size_t(c)] = any && !all;
    }
  }
  return out;
}

inline double brute_b_iou(const BinaryMask& a, const BinaryMask& b) {
  const BinaryMask ba = brute_boundary(a), bb = brute_boundary(b);
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < ba.bits.size(); ++i) {
    inter += ba.bits[i] && bb.bits[i];
    uni += ba.bits[i] || bb.bits[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// ---- dataset records ---------------------------------------------------------------

inline DatasetRecord record(const std::string& id, const std::string& location, int hour, int day = 20,
                            double utc_offset = -7.0) {
  DatasetRecord r;
  r.record_id = id;
  r.location_id = location;
  r.t_day = TimeStamp{2024, 3, day, static_cast<double>(hour), utc_offset};
  r.x_shade_path = location + "/" + id + "/x_shade.png";
  r.x_sk_path = location + "/x_sk.png";
  r.x_gt_path = location + "/" + id + "/x_gt.png";
  return r;
}

}  // namespace fixtures
