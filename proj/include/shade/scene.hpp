#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "shade/ingest.hpp"
#include "shade/road_graph.hpp"

namespace shade {

constexpr int kSceneSchemaVersion = 1;

/// Buildings plus road graph for one area of interest.
struct Scene {
  std::string scene_id;
  std::vector<BuildingFootprint> buildings;
  RoadGraph roads;
  std::size_t skipped_buildings = 0;
  std::size_t skipped_roads = 0;

  /// Union of building and road extents.
  GeoBounds bounds() const;
  double max_height_m() const;
};

/// Hash of the canonicalized inputs, so formatting-only changes map to the same id.
std::string scene_content_id(std::string_view buildings_geojson, std::string_view roads_geojson);

/// Parses both documents. An empty roads document yields an empty graph.
Scene ingest_scene(std::string_view buildings_geojson, std::string_view roads_geojson, const IngestConfig& cfg = {});

std::string scene_to_json(const Scene& s);
/// Throws ParseError for malformed documents or a schema_version this build cannot read.
Scene scene_from_json(std::string_view text);

void save_scene(const std::filesystem::path& path, const Scene& s);
Scene load_scene(const std::filesystem::path& path);

}  // namespace shade
