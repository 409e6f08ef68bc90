#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "shade/ingest.hpp"
#include "shade/routing.hpp"
#include "shade/shadowcast.hpp"

namespace shade {

/// Transport-independent response.
struct ServiceResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;
};

struct ServiceOptions {
  std::filesystem::path data_dir = "data";
  std::size_t cache_size = 256;
  SimConfig sim;
  IngestConfig ingest;
  RoutingConfig routing;
  double meters_per_px = 1.0;
};

/// Scene store plus lazily computed, cached shade rasters.
///
/// Scenes live under `<data_dir>/scenes/<scene_id>/` and are never modified
/// after creation. Shade rasters are cached per (scene, date, hour, offset) in
/// an LRU; concurrent requests for the same key share a single computation.
class ShadeService {
public:
  explicit ShadeService(ServiceOptions opts);
  ~ShadeService();
  ShadeService(const ShadeService&) = delete;
  ShadeService& operator=(const ShadeService&) = delete;

  /// POST /scenes
  ServiceResponse create_scene(const std::string& buildings_geojson, const std::string& roads_geojson);
  /// GET /scenes/{id}
  ServiceResponse get_scene(const std::string& scene_id);
  /// GET /scenes/{id}/shade. With `sidecar` the JSON sidecar is returned instead
  /// of the PNG. When `wait` is false and the raster is being computed by
  /// another request, answers 202.
  ServiceResponse get_shade(const std::string& scene_id, const std::string& date, const std::string& hour,
                            const std::optional<std::string>& utc_offset, bool sidecar, bool wait = true);
  /// POST /scenes/{id}/route with {from, to, w, date, hour[, utc_offset]}.
  ServiceResponse plan(const std::string& scene_id, const std::string& request_json);

  std::size_t cache_entries() const;
  /// Number of rasters computed so far (cache misses).
  std::size_t computations() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// HTTP front end over ShadeService with CORS on every endpoint.
class HttpServer {
public:
  HttpServer(ShadeService& service, std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and serves on a background thread; port 0 picks a free port. Returns the bound port.
  int start(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  bool listen(const std::string& host, int port);
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace shade
