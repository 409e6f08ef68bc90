#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "shade/geo.hpp"

namespace shade {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

struct RoadEdge {
  EdgeId id = 0;
  NodeId u = 0;
  NodeId v = 0;
  std::vector<GeoPoint> polyline;  // starts at node u, ends at node v
  double length_m = 0.0;
  std::optional<double> shade_ratio;
};

/// Undirected road network. Node and edge ids are their indices.
struct RoadGraph {
  std::vector<GeoPoint> nodes;
  std::vector<RoadEdge> edges;
  /// Bumped every time a shade overlay produces a new version of the graph.
  std::uint32_t version = 0;

  bool empty() const { return edges.empty(); }
  GeoBounds bounds() const;
};

}  // namespace shade
