#include "shade/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>

#include <json.hpp>

#include "shade/errors.hpp"
#include "shade/json_io.hpp"

namespace shade {

using nlohmann::json;

GeoBounds RoadGraph::bounds() const {
  if (nodes.empty()) return {};
  GeoBounds b{nodes.front().lon, nodes.front().lat, nodes.front().lon, nodes.front().lat};
  for (const auto& e : edges) {
    for (const auto& p : e.polyline) b.extend(p);
  }
  for (const auto& p : nodes) b.extend(p);
  return b;
}

namespace {

json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), error_offset(e));
  }
}

const json& feature_list(const json& doc) {
  static const json kEmpty = json::array();
  if (!doc.is_object()) throw ParseError("GeoJSON root must be an object", 0);
  const auto type = doc.value("type", std::string{});
  if (type != "FeatureCollection") throw ParseError("expected a FeatureCollection, got '" + type + "'", 0);
  auto it = doc.find("features");
  if (it == doc.end() || it->is_null()) return kEmpty;
  if (!it->is_array()) throw ParseError("'features' must be an array", 0);
  return *it;
}

std::string tag_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::map<std::string, std::string> feature_tags(const json& feature) {
  std::map<std::string, std::string> tags;
  auto it = feature.find("properties");
  if (it == feature.end() || !it->is_object()) return tags;
  for (const auto& [key, value] : it->items()) {
    if (value.is_null()) continue;
    tags[key] = tag_string(value);
  }
  return tags;
}

// Returns false when the position is not a valid [lon, lat, ...] pair.
bool read_position(const json& pos, GeoPoint& out) {
  if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) return false;
  const double lon = pos[0].get<double>();
  const double lat = pos[1].get<double>();
  if (!(lon >= -180.0 && lon <= 180.0 && lat >= -90.0 && lat <= 90.0)) return false;
  out = {lon, lat};
  return true;
}

bool read_line(const json& coords, std::vector<GeoPoint>& out) {
  out.clear();
  if (!coords.is_array()) return false;
  for (const auto& pos : coords) {
    GeoPoint p;
    if (!read_position(pos, p)) return false;
    if (!out.empty() && out.back() == p) continue;
    out.push_back(p);
  }
  return true;
}

std::string feature_id(const json& feature, const std::map<std::string, std::string>& tags,
                       std::size_t index) {
  if (auto it = feature.find("id"); it != feature.end() && !it->is_null()) return tag_string(*it);
  for (const char* key : {"@id", "id", "osm_id"}) {
    if (auto t = tags.find(key); t != tags.end()) return t->second;
  }
  return "feature-" + std::to_string(index);
}

int orientation(const GeoPoint& a, const GeoPoint& b, const GeoPoint& c) {
  const double v = (b.lon - a.lon) * (c.lat - a.lat) - (b.lat - a.lat) * (c.lon - a.lon);
  return (v > 0.0) - (v < 0.0);
}

bool on_segment(const GeoPoint& a, const GeoPoint& b, const GeoPoint& p) {
  return std::min(a.lon, b.lon) <= p.lon && p.lon <= std::max(a.lon, b.lon) &&
         std::min(a.lat, b.lat) <= p.lat && p.lat <= std::max(a.lat, b.lat);
}

bool segments_intersect(const GeoPoint& p1, const GeoPoint& p2, const GeoPoint& q1, const GeoPoint& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

}  // namespace

double parse_length_tag(std::string_view value) {
  auto begin = value.begin();
  while (begin != value.end() && *begin == ' ') ++begin;
  double out = 0.0;
  const auto* first = value.data() + (begin - value.begin());
  const auto* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr == first) return -1.0;
  std::string_view rest(ptr, static_cast<std::size_t>(last - ptr));
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  while (!rest.empty() && rest.back() == ' ') rest.remove_suffix(1);
  if (!rest.empty() && rest != "m" && rest != "meters" && rest != "metres") return -1.0;
  if (!std::isfinite(out)) return -1.0;
  return out;
}

double resolve_height(const std::map<std::string, std::string>& tags, const IngestConfig& cfg) {
  if (auto it = tags.find("height"); it != tags.end()) {
    const double h = parse_length_tag(it->second);
    if (h > 0.0) return h;
  }
  if (auto it = tags.find("building:levels"); it != tags.end()) {
    const double levels = parse_length_tag(it->second);
    if (levels > 0.0) return levels * cfg.storey_height_m;
  }
  return cfg.default_height_m;
}

bool is_simple_ring(const std::vector<GeoPoint>& ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const GeoPoint& a1 = ring[i];
    const GeoPoint& a2 = ring[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(a1, a2, ring[j], ring[(j + 1) % n])) return false;
    }
  }
  return true;
}

BuildingSet parse_buildings(std::string_view geojson, const IngestConfig& cfg) {
  const json doc = parse_document(geojson);
  BuildingSet out;
  std::size_t index = 0;
  for (const auto& feature : feature_list(doc)) {
    const std::size_t this_index = index++;
    if (!feature.is_object()) continue;
    auto geom = feature.find("geometry");
    if (geom == feature.end() || !geom->is_object()) continue;
    const auto type = geom->value("type", std::string{});
    auto coords = geom->find("coordinates");
    if (coords == geom->end() || !coords->is_array()) {
      ++out.skipped;
      continue;
    }

    // Outer rings only; holes are dropped.
    std::vector<const json*> outer_rings;
    if (type == "Polygon") {
      if (!coords->empty()) outer_rings.push_back(&(*coords)[0]);
    } else if (type == "MultiPolygon") {
      for (const auto& poly : *coords) {
        if (poly.is_array() && !poly.empty()) outer_rings.push_back(&poly[0]);
      }
    } else {
      continue;
    }

    const auto tags = feature_tags(feature);
    const std::string base_id = feature_id(feature, tags, this_index);
    const double height = resolve_height(tags, cfg);
    std::size_t part = 0;
    for (const json* ring_json : outer_rings) {
      std::vector<GeoPoint> ring;
      if (!read_line(*ring_json, ring)) {
        ++out.skipped;
        continue;
      }
      if (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
      if (ring.size() < 3 || !is_simple_ring(ring)) {
        ++out.skipped;
        continue;
      }
      BuildingFootprint b;
      b.id = outer_rings.size() > 1 ? base_id + "#" + std::to_string(part) : base_id;
      b.ring = std::move(ring);
      b.height_m = height;
      b.source_tags = tags;
      out.buildings.push_back(std::move(b));
      ++part;
    }
  }
  return out;
}

namespace {

struct VertexCluster {
  GeoPoint position;
  Vec2 local;
  int occurrences = 0;
  bool is_node = false;
};

struct CellKey {
  std::int64_t cx;
  std::int64_t cy;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    return std::hash<std::int64_t>{}(k.cx * 73856093 ^ k.cy * 19349663);
  }
};

class VertexSnapper {
public:
  VertexSnapper(LocalFrame frame, double tolerance)
      : frame_(frame), tol_(std::max(tolerance, 1e-9)) {}

  std::size_t snap(const GeoPoint& p) {
    const Vec2 v = to_local(p, frame_);
    const CellKey key = cell(v);
    std::size_t best = clusters_.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = grid_.find({key.cx + dx, key.cy + dy});
        if (it == grid_.end()) continue;
        for (std::size_t id : it->second) {
          const Vec2 d = clusters_[id].local - v;
          const double dist = std::hypot(d.x, d.y);
          if (dist <= tol_ && (dist < best_d || (dist == best_d && id < best))) {
            best = id;
            best_d = dist;
          }
        }
      }
    }
    if (best < clusters_.size()) return best;
    clusters_.push_back({p, v});
    grid_[key].push_back(clusters_.size() - 1);
    return clusters_.size() - 1;
  }

  std::vector<VertexCluster>& clusters() { return clusters_; }

private:
  CellKey cell(Vec2 v) const {
    return {static_cast<std::int64_t>(std::floor(v.x / tol_)),
            static_cast<std::int64_t>(std::floor(v.y / tol_))};
  }

  LocalFrame frame_;
  double tol_;
  std::vector<VertexCluster> clusters_;
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> grid_;
};

}  // namespace

RoadSet parse_roads(std::string_view geojson, const IngestConfig& cfg) {
  const json doc = parse_document(geojson);
  RoadSet out;

  std::vector<std::vector<GeoPoint>> lines;
  for (const auto& feature : feature_list(doc)) {
    if (!feature.is_object()) continue;
    auto geom = feature.find("geometry");
    if (geom == feature.end() || !geom->is_object()) continue;
    const auto type = geom->value("type", std::string{});
    auto coords = geom->find("coordinates");
    if (coords == geom->end()) continue;
    std::vector<const json*> parts;
    if (type == "LineString") {
      parts.push_back(&*coords);
    } else if (type == "MultiLineString" && coords->is_array()) {
      for (const auto& c : *coords) parts.push_back(&c);
    } else {
      continue;
    }
    for (const json* part : parts) {
      std::vector<GeoPoint> line;
      if (!read_line(*part, line) || line.size() < 2) {
        ++out.skipped;
        continue;
      }
      lines.push_back(std::move(line));
    }
  }
  if (lines.empty()) return out;

  GeoBounds bounds{lines[0][0].lon, lines[0][0].lat, lines[0][0].lon, lines[0][0].lat};
  for (const auto& line : lines) {
    for (const auto& p : line) bounds.extend(p);
  }
  VertexSnapper snapper(LocalFrame::at(bounds.center()), cfg.snap_tolerance_m);

  // Map every vertex onto its snapped cluster, dropping segments that collapse.
  std::vector<std::vector<std::size_t>> snapped(lines.size());
  for (std::size_t li = 0; li < lines.size(); ++li) {
    for (const auto& p : lines[li]) {
      const std::size_t c = snapper.snap(p);
      if (!snapped[li].empty() && snapped[li].back() == c) {
        ++out.skipped;
        continue;
      }
      snapped[li].push_back(c);
    }
  }
  auto& clusters = snapper.clusters();
  for (const auto& seq : snapped) {
    if (seq.size() < 2) continue;
    for (std::size_t c : seq) ++clusters[c].occurrences;
    clusters[seq.front()].is_node = true;
    clusters[seq.back()].is_node = true;
  }
  for (auto& c : clusters) {
    if (c.occurrences >= 2) c.is_node = true;
  }
  // A piece that starts and ends on the same node would be a self loop; split
  // it at its middle vertex instead.
  for (const auto& seq : snapped) {
    if (seq.size() < 2) continue;
    std::size_t start = 0;
    for (std::size_t i = 1; i < seq.size(); ++i) {
      if (!clusters[seq[i]].is_node) continue;
      if (seq[i] == seq[start] && i - start >= 2) clusters[seq[start + (i - start) / 2]].is_node = true;
      start = i;
    }
  }

  RoadGraph& g = out.graph;
  std::vector<std::int64_t> node_index(clusters.size(), -1);
  auto ensure_node = [&](std::size_t c) -> NodeId {
    if (node_index[c] < 0) {
      node_index[c] = static_cast<std::int64_t>(g.nodes.size());
      g.nodes.push_back(clusters[c].position);
    }
    return static_cast<NodeId>(node_index[c]);
  };

  for (const auto& seq : snapped) {
    if (seq.size() < 2) continue;
    std::size_t start = 0;
    for (std::size_t i = 1; i < seq.size(); ++i) {
      if (!clusters[seq[i]].is_node) continue;
      RoadEdge e;
      e.u = ensure_node(seq[start]);
      e.v = ensure_node(seq[i]);
      for (std::size_t k = start; k <= i; ++k) e.polyline.push_back(clusters[seq[k]].position);
      for (std::size_t k = 1; k < e.polyline.size(); ++k) {
        e.length_m += haversine_m(e.polyline[k - 1], e.polyline[k]);
      }
      start = i;
      if (!(e.length_m > 0.0) || e.u == e.v) {
        ++out.skipped;
        continue;
      }
      e.id = static_cast<EdgeId>(g.edges.size());
      g.edges.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace shade
