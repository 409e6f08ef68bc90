#include "shade/routing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "shade/errors.hpp"
#include "shade/json_io.hpp"

namespace shade {

double edge_shade_ratio(const RoadEdge& edge, const ShadeRaster& gt, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("sample step must be positive");
  const auto& line = edge.polyline;
  if (line.empty()) return 0.0;

  std::vector<double> cumulative(line.size(), 0.0);
  for (std::size_t i = 1; i < line.size(); ++i) cumulative[i] = cumulative[i - 1] + haversine_m(line[i - 1], line[i]);
  const double total = cumulative.back();
  const auto intervals = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(total / step - 1e-9)));

  std::size_t shaded = 0;
  std::size_t seg = 1;
  for (std::size_t k = 0; k <= intervals; ++k) {
    const double s = total * static_cast<double>(k) / static_cast<double>(intervals);
    while (seg + 1 < line.size() && cumulative[seg] < s) ++seg;
    GeoPoint p = line.front();
    if (line.size() > 1) {
      const double seg_len = cumulative[seg] - cumulative[seg - 1];
      const double t = seg_len > 0.0 ? std::clamp((s - cumulative[seg - 1]) / seg_len, 0.0, 1.0) : 0.0;
      const GeoPoint& a = line[seg - 1];
      const GeoPoint& b = line[seg];
      p = {a.lon + t * (b.lon - a.lon), a.lat + t * (b.lat - a.lat)};
    }
    if (auto px = gt.pixel_of(p); px && gt.at(px->col, px->row) == 255) ++shaded;
  }
  return static_cast<double>(shaded) / static_cast<double>(intervals + 1);
}

RoadGraph overlay_shade(const RoadGraph& graph, const ShadeRaster& gt, double step) {
  RoadGraph out = graph;
  for (auto& e : out.edges) e.shade_ratio = edge_shade_ratio(e, gt, step);
  ++out.version;
  return out;
}

double edge_cost(const RoadEdge& edge, double w) {
  if (!edge.shade_ratio) {
    throw std::logic_error("edge " + std::to_string(edge.id) + " has no shade ratio; overlay a shade raster first");
  }
  if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("shade weight must be in [0, 1]");
  return (1.0 - w) * edge.length_m + w * edge.length_m * (1.0 - *edge.shade_ratio);
}

double edge_exposure(const RoadEdge& edge) {
  if (!edge.shade_ratio) {
    throw std::logic_error("edge " + std::to_string(edge.id) + " has no shade ratio; overlay a shade raster first");
  }
  return edge.length_m * (1.0 - *edge.shade_ratio);
}

std::pair<NodeId, double> nearest_node(const RoadGraph& graph, const GeoPoint& p) {
  if (graph.nodes.empty()) throw NoRoute("road graph has no nodes");
  NodeId best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (NodeId i = 0; i < graph.nodes.size(); ++i) {
    const double d = haversine_m(graph.nodes[i], p);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return {best, best_d};
}

RouteResult route_between(const RoadGraph& graph, NodeId from, NodeId to, double w) {
  if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("shade weight must be in [0, 1]");
  const std::size_t n = graph.nodes.size();
  if (from >= n || to >= n) throw std::out_of_range("node id outside the graph");

  struct Arc {
    NodeId to;
    EdgeId edge;
    double cost;
  };
  std::vector<std::vector<Arc>> adj(n);
  for (const auto& e : graph.edges) {
    const double c = edge_cost(e, w);
    adj[e.u].push_back({e.v, e.id, c});
    adj[e.v].push_back({e.u, e.id, c});
  }
  for (auto& arcs : adj) {
    std::sort(arcs.begin(), arcs.end(), [](const Arc& a, const Arc& b) { return std::tie(a.to, a.edge) < std::tie(b.to, b.edge); });
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, kInf);
  std::vector<std::int64_t> via_edge(n, -1);
  std::vector<bool> done(n, false);
  using Entry = std::pair<double, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  dist[from] = 0.0;
  queue.push({0.0, from});
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (done[u]) continue;
    done[u] = true;
    if (u == to) break;
    for (const Arc& a : adj[u]) {
      const double nd = d + a.cost;
      if (nd < dist[a.to]) {
        dist[a.to] = nd;
        via_edge[a.to] = a.edge;
        queue.push({nd, a.to});
      }
    }
  }
  if (dist[to] == kInf) throw NoRoute("destination is not reachable from the origin");

  RouteResult r;
  r.w = w;
  for (NodeId cur = to; cur != from;) {
    const RoadEdge& e = graph.edges[static_cast<std::size_t>(via_edge[cur])];
    r.edges.push_back(e.id);
    cur = e.u == cur ? e.v : e.u;
  }
  std::reverse(r.edges.begin(), r.edges.end());

  NodeId cur = from;
  r.nodes.push_back(cur);
  r.polyline.push_back(graph.nodes[from]);
  for (EdgeId id : r.edges) {
    const RoadEdge& e = graph.edges[id];
    const bool forward = e.u == cur;
    if (forward) {
      r.polyline.insert(r.polyline.end(), e.polyline.begin() + 1, e.polyline.end());
    } else {
      r.polyline.insert(r.polyline.end(), e.polyline.rbegin() + 1, e.polyline.rend());
    }
    cur = forward ? e.v : e.u;
    r.nodes.push_back(cur);
    r.total_length_m += e.length_m;
    r.total_exposure_m += edge_exposure(e);
    r.cost += edge_cost(e, w);
  }
  r.total_exposure_m = std::min(r.total_exposure_m, r.total_length_m);
  r.mean_shade_ratio = r.total_length_m > 0.0 ? 1.0 - r.total_exposure_m / r.total_length_m : 0.0;
  return r;
}

RoutePlan plan_route(const RoadGraph& graph, const RouteRequest& req, const RoutingConfig& cfg) {
  if (!(req.w >= 0.0 && req.w <= 1.0)) throw std::invalid_argument("shade weight must be in [0, 1]");
  if (graph.empty()) throw NoRoute("road graph is empty");
  const auto [from, d_from] = nearest_node(graph, req.origin);
  if (d_from > cfg.snap_tolerance_m) throw SnapError("origin is too far from the road network", d_from);
  const auto [to, d_to] = nearest_node(graph, req.destination);
  if (d_to > cfg.snap_tolerance_m) throw SnapError("destination is too far from the road network", d_to);

  RoutePlan plan;
  plan.shaded = route_between(graph, from, to, req.w);
  plan.shortest = req.w == 0.0 ? plan.shaded : route_between(graph, from, to, 0.0);
  return plan;
}

std::string route_geojson(const RoutePlan& plan, const std::optional<TimeStamp>& time) {
  using nlohmann::json;
  auto feature = [&](const RouteResult& r, const char* kind) {
    json coords = json::array();
    for (const auto& p : r.polyline) coords.push_back(p);
    return json{{"type", "Feature"},
                {"geometry", {{"type", "LineString"}, {"coordinates", std::move(coords)}}},
                {"properties",
                 {{"kind", kind},
                  {"length_m", r.total_length_m},
                  {"exposure_m", r.total_exposure_m},
                  {"mean_shade_ratio", r.mean_shade_ratio},
                  {"cost", r.cost},
                  {"w", r.w},
                  {"nodes", r.nodes},
                  {"time", time ? json(*time) : json(nullptr)}}}};
  };
  json fc{{"type", "FeatureCollection"},
          {"features", json::array({feature(plan.shaded, "shaded"), feature(plan.shortest, "shortest")})}};
  return fc.dump();
}

}  // namespace shade
