#include "shade/scene.hpp"

#include <algorithm>

#include <json.hpp>

#include "shade/errors.hpp"
#include "shade/hash.hpp"
#include "shade/json_io.hpp"
#include "shade/raster.hpp"

namespace shade {

using nlohmann::json;

GeoBounds Scene::bounds() const {
  bool any = false;
  GeoBounds b;
  auto add = [&](const GeoPoint& p) {
    if (!any) {
      b = {p.lon, p.lat, p.lon, p.lat};
      any = true;
    } else {
      b.extend(p);
    }
  };
  for (const auto& bld : buildings) {
    for (const auto& p : bld.ring) add(p);
  }
  for (const auto& p : roads.nodes) add(p);
  for (const auto& e : roads.edges) {
    for (const auto& p : e.polyline) add(p);
  }
  return b;
}

double Scene::max_height_m() const {
  double h = 0.0;
  for (const auto& b : buildings) h = std::max(h, b.height_m);
  return h;
}

namespace {

std::string canonical(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  try {
    return json::parse(text.begin(), text.end()).dump();
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), error_offset(e));
  }
}

bool blank(std::string_view text) { return text.find_first_not_of(" \t\r\n") == std::string_view::npos; }

}  // namespace

std::string scene_content_id(std::string_view buildings_geojson, std::string_view roads_geojson) {
  const std::string payload = "buildings\n" + canonical(buildings_geojson) + "\nroads\n" + canonical(roads_geojson);
  return sha256_hex(payload).substr(0, 16);
}

Scene ingest_scene(std::string_view buildings_geojson, std::string_view roads_geojson, const IngestConfig& cfg) {
  Scene s;
  auto bset = parse_buildings(buildings_geojson, cfg);
  s.buildings = std::move(bset.buildings);
  s.skipped_buildings = bset.skipped;
  if (!blank(roads_geojson)) {
    auto rset = parse_roads(roads_geojson, cfg);
    s.roads = std::move(rset.graph);
    s.skipped_roads = rset.skipped;
  }
  s.scene_id = scene_content_id(buildings_geojson, roads_geojson);
  return s;
}

std::string scene_to_json(const Scene& s) {
  json buildings = json::array();
  for (const auto& b : s.buildings) {
    buildings.push_back({{"id", b.id}, {"ring", b.ring}, {"height_m", b.height_m}, {"source_tags", b.source_tags}});
  }
  json edges = json::array();
  for (const auto& e : s.roads.edges) {
    json je{{"id", e.id}, {"u", e.u}, {"v", e.v}, {"polyline", e.polyline}, {"length_m", e.length_m}};
    je["shade_ratio"] = e.shade_ratio ? json(*e.shade_ratio) : json(nullptr);
    edges.push_back(std::move(je));
  }
  json doc{{"schema_version", kSceneSchemaVersion},
           {"scene_id", s.scene_id},
           {"buildings", std::move(buildings)},
           {"roads", {{"version", s.roads.version}, {"nodes", s.roads.nodes}, {"edges", std::move(edges)}}},
           {"skipped", {{"buildings", s.skipped_buildings}, {"roads", s.skipped_roads}}}};
  return doc.dump(1);
}

Scene scene_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed scene file: ") + e.what(), error_offset(e));
  }
  try {
    const int version = doc.at("schema_version").get<int>();
    if (version != kSceneSchemaVersion) {
      throw ParseError("unsupported scene schema_version " + std::to_string(version), 0);
    }
    Scene s;
    s.scene_id = doc.value("scene_id", std::string{});
    for (const auto& jb : doc.at("buildings")) {
      BuildingFootprint b;
      b.id = jb.at("id").get<std::string>();
      b.ring = jb.at("ring").get<std::vector<GeoPoint>>();
      b.height_m = jb.at("height_m").get<double>();
      b.source_tags = jb.value("source_tags", std::map<std::string, std::string>{});
      if (b.ring.size() < 3 || !(b.height_m > 0.0)) throw ParseError("invalid building '" + b.id + "'", 0);
      s.buildings.push_back(std::move(b));
    }
    const auto& roads = doc.at("roads");
    s.roads.version = roads.value("version", 0u);
    s.roads.nodes = roads.at("nodes").get<std::vector<GeoPoint>>();
    for (const auto& je : roads.at("edges")) {
      RoadEdge e;
      e.id = je.at("id").get<EdgeId>();
      e.u = je.at("u").get<NodeId>();
      e.v = je.at("v").get<NodeId>();
      e.polyline = je.at("polyline").get<std::vector<GeoPoint>>();
      e.length_m = je.at("length_m").get<double>();
      if (je.contains("shade_ratio") && !je["shade_ratio"].is_null()) e.shade_ratio = je["shade_ratio"].get<double>();
      if (e.u >= s.roads.nodes.size() || e.v >= s.roads.nodes.size() || e.id != s.roads.edges.size()) {
        throw ParseError("inconsistent road edge " + std::to_string(e.id), 0);
      }
      s.roads.edges.push_back(std::move(e));
    }
    if (doc.contains("skipped")) {
      s.skipped_buildings = doc["skipped"].value("buildings", std::size_t{0});
      s.skipped_roads = doc["skipped"].value("roads", std::size_t{0});
    }
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid scene file: ") + e.what(), 0);
  } catch (const OutOfRange& e) {
    throw ParseError(std::string("invalid scene file: ") + e.what(), 0);
  }
}

void save_scene(const std::filesystem::path& path, const Scene& s) { write_file_text(path, scene_to_json(s)); }

Scene load_scene(const std::filesystem::path& path) { return scene_from_json(read_file_text(path)); }

}  // namespace shade
