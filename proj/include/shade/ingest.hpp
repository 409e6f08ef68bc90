#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "shade/geo.hpp"
#include "shade/road_graph.hpp"

namespace shade {

/// A flat-roofed building: outer ring plus resolved height.
///
/// The ring is stored open: the closing vertex is implicit and never repeated.
/// It always has at least three distinct vertices and does not self-intersect.
struct BuildingFootprint {
  std::string id;
  std::vector<GeoPoint> ring;
  double height_m = 0.0;
  std::map<std::string, std::string> source_tags;
};

struct IngestConfig {
  double storey_height_m = 3.0;
  double default_height_m = 8.0;
  /// Road endpoints closer than this are merged into one node.
  double snap_tolerance_m = 0.5;
};

struct BuildingSet {
  std::vector<BuildingFootprint> buildings;
  /// Features dropped for having too few vertices or a self-intersecting ring.
  std::size_t skipped = 0;
};

struct RoadSet {
  RoadGraph graph;
  /// Zero-length segments and degenerate lines dropped during parsing.
  std::size_t skipped = 0;
};

/// Parses a GeoJSON FeatureCollection of Polygon / MultiPolygon buildings.
/// Throws ParseError on malformed JSON.
BuildingSet parse_buildings(std::string_view geojson, const IngestConfig& cfg = {});

/// Parses LineString / MultiLineString features into an undirected graph.
RoadSet parse_roads(std::string_view geojson, const IngestConfig& cfg = {});

/// Height rule: explicit `height` wins, then `building:levels` × storey height,
/// then the configured default.
double resolve_height(const std::map<std::string, std::string>& tags, const IngestConfig& cfg);

/// Parses "15", "15 m", "15.5m" into meters. Returns a negative value when not numeric.
double parse_length_tag(std::string_view value);

/// True when no two non-adjacent edges of the (implicitly closed) ring intersect.
bool is_simple_ring(const std::vector<GeoPoint>& ring);

}  // namespace shade
