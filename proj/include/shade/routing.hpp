#pragma once

#include <optional>
#include <string>
#include <vector>

#include "shade/raster.hpp"
#include "shade/road_graph.hpp"
#include "shade/solar.hpp"

namespace shade {

struct RoutingConfig {
  double sample_step_m = 2.0;
  double snap_tolerance_m = 100.0;
};

/// Fraction of points sampled every `sample_step_m` along the polyline (both
/// endpoints included) that land on a 255 pixel. Points outside the raster are unshaded.
double edge_shade_ratio(const RoadEdge& edge, const ShadeRaster& ground_truth, double sample_step_m = 2.0);

/// Copy of the graph with every edge's shade ratio set from the raster; version bumped.
RoadGraph overlay_shade(const RoadGraph& graph, const ShadeRaster& ground_truth, double sample_step_m = 2.0);

/// (1 - w) * length + w * length * (1 - shade_ratio). Throws std::logic_error
/// when the shade ratio has not been set by an overlay.
double edge_cost(const RoadEdge& edge, double w);

/// Unshaded meters along the edge.
double edge_exposure(const RoadEdge& edge);

struct RouteRequest {
  GeoPoint origin;
  GeoPoint destination;
  double w = 0.5;
  std::optional<TimeStamp> time;
};

struct RouteResult {
  std::vector<NodeId> nodes;
  std::vector<EdgeId> edges;
  std::vector<GeoPoint> polyline;
  double total_length_m = 0.0;
  double total_exposure_m = 0.0;
  double mean_shade_ratio = 0.0;
  double cost = 0.0;
  double w = 0.0;
};

/// The preference-weighted route and the pure shortest route (w = 0) for comparison.
struct RoutePlan {
  RouteResult shaded;
  RouteResult shortest;
};

/// Nearest node and its distance in meters. Throws NoRoute for an empty graph.
std::pair<NodeId, double> nearest_node(const RoadGraph& graph, const GeoPoint& p);

/// Exact minimum-cost path under edge_cost between the snapped endpoints.
/// Ties resolve toward the smallest node id. Throws SnapError, NoRoute, or
/// std::invalid_argument for w outside [0, 1].
RoutePlan plan_route(const RoadGraph& graph, const RouteRequest& req, const RoutingConfig& cfg = {});

/// Same search between two node ids.
RouteResult route_between(const RoadGraph& graph, NodeId from, NodeId to, double w);

/// FeatureCollection with one LineString per route, kinds "shaded" and "shortest".
std::string route_geojson(const RoutePlan& plan, const std::optional<TimeStamp>& time);

}  // namespace shade
