#include "shade/service.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <future>
#include <list>
#include <mutex>
#include <regex>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "shade/dataset.hpp"
#include "shade/errors.hpp"
#include "shade/hash.hpp"
#include "shade/json_io.hpp"
#include "shade/raster.hpp"
#include "shade/scene.hpp"

namespace shade {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ServiceResponse json_response(int status, const json& body) {
  return {status, "application/json", body.dump(), {}};
}

ServiceResponse error_response(int status, const std::string& kind, const std::string& message, json extra = json::object()) {
  extra["error"] = kind;
  extra["message"] = message;
  return json_response(status, extra);
}

bool valid_scene_id(const std::string& id) {
  static const std::regex kPattern("^[0-9a-f]{16}$");
  return std::regex_match(id, kPattern);
}

struct ShadeEntry {
  std::vector<std::uint8_t> png;
  std::string sidecar;
  std::string etag;
  SunPosition sun;
  std::shared_ptr<const RoadGraph> graph;  // shade-overlaid copy of the scene graph
};

using EntryPtr = std::shared_ptr<const ShadeEntry>;

class BadRequest : public Error {
public:
  using Error::Error;
};

TimeStamp request_time(const std::string& date, const std::string& hour, const std::optional<double>& offset,
                       const Scene& scene) {
  const double utc = offset.value_or(default_utc_offset(scene.bounds().center()));
  std::string clock = hour;
  if (clock.find(':') == std::string::npos) clock += ":00";
  try {
    return parse_timestamp(date, clock, utc);
  } catch (const std::invalid_argument& e) {
    throw BadRequest(e.what());
  }
}

std::optional<double> parse_offset(const std::optional<std::string>& text) {
  if (!text || text->empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text->data(), text->data() + text->size(), v);
  if (ec != std::errc{} || ptr != text->data() + text->size() || std::abs(v) > 14.0) {
    throw BadRequest("invalid utc_offset '" + *text + "'");
  }
  return v;
}

}  // namespace

struct ShadeService::Impl {
  ServiceOptions opts;

  std::mutex scenes_mu;
  std::unordered_map<std::string, std::shared_ptr<const Scene>> scenes;

  mutable std::mutex cache_mu;
  std::list<std::string> lru;  // most recent first
  struct Cached {
    EntryPtr entry;
    std::list<std::string>::iterator pos;
  };
  std::unordered_map<std::string, Cached> cache;
  std::unordered_map<std::string, std::shared_future<EntryPtr>> inflight;
  std::atomic<std::size_t> computed{0};

  fs::path scene_dir(const std::string& id) const { return opts.data_dir / "scenes" / id; }

  std::shared_ptr<const Scene> find_scene(const std::string& id) {
    if (!valid_scene_id(id)) return nullptr;
    std::lock_guard lock(scenes_mu);
    if (auto it = scenes.find(id); it != scenes.end()) return it->second;
    const fs::path file = scene_dir(id) / "scene.json";
    if (!fs::exists(file)) return nullptr;
    auto scene = std::make_shared<const Scene>(load_scene(file));
    scenes.emplace(id, scene);
    return scene;
  }

  json handle(const Scene& s) {
    json rasters = json::array();
    {
      std::lock_guard lock(cache_mu);
      for (const auto& key : lru) {
        if (key.rfind(s.scene_id + "|", 0) != 0) continue;
        const auto first = key.find('|');
        const auto second = key.find('|', first + 1);
        const auto third = key.find('|', second + 1);
        rasters.push_back({{"date", key.substr(first + 1, second - first - 1)},
                           {"hour", key.substr(second + 1, third - second - 1)}});
      }
    }
    return {{"scene_id", s.scene_id},
            {"buildings", s.buildings.size()},
            {"skipped_buildings", s.skipped_buildings},
            {"road_nodes", s.roads.nodes.size()},
            {"road_edges", s.roads.edges.size()},
            {"graph_version", s.roads.version},
            {"bounds", s.bounds()},
            {"shade_rasters", std::move(rasters)}};
  }

  EntryPtr compute(const Scene& scene, const TimeStamp& t, const SunPosition& sun) {
    const RenderTarget target = scene_render_target(scene, opts.meters_per_px, opts.sim.raster_px);
    const Snapshots snaps = render_snapshots(scene.buildings, sun, target, opts.sim);
    auto entry = std::make_shared<ShadeEntry>();
    entry->png = encode_png(snaps.ground_truth);
    RasterSidecar side = sidecar_for(snaps.ground_truth);
    side.sun = sun;
    side.timestamp = t;
    side.prompt = format_prompt(sun, t, PromptTemplate::time_of_day);
    side.config_hash = opts.sim.hash();
    entry->sidecar = sidecar_to_json(side);
    entry->etag = "\"" +
                  sha256_hex(std::string_view(reinterpret_cast<const char*>(entry->png.data()), entry->png.size()))
                      .substr(0, 32) +
                  "\"";
    entry->sun = sun;
    if (!scene.roads.empty()) {
      entry->graph = std::make_shared<const RoadGraph>(
          overlay_shade(scene.roads, snaps.ground_truth, opts.routing.sample_step_m));
    }
    ++computed;
    return entry;
  }

  void insert_locked(const std::string& key, EntryPtr entry) {
    if (opts.cache_size == 0) return;
    lru.push_front(key);
    cache[key] = {std::move(entry), lru.begin()};
    while (cache.size() > opts.cache_size) {
      cache.erase(lru.back());
      lru.pop_back();
    }
  }

  // Returns nullptr only when wait is false and another request is computing.
  EntryPtr shade_entry(const Scene& scene, const TimeStamp& t, const SunPosition& sun, bool wait) {
    const std::string key = fmt::format("{}|{}|{:02d}:{:02d}|{}", scene.scene_id, t.date_string(), t.whole_hour(),
                                        static_cast<int>(std::lround((t.local_hour - t.whole_hour()) * 60.0)),
                                        t.utc_offset_hours);
    std::promise<EntryPtr> promise;
    {
      std::unique_lock lock(cache_mu);
      if (auto it = cache.find(key); it != cache.end()) {
        lru.splice(lru.begin(), lru, it->second.pos);
        return it->second.entry;
      }
      if (auto it = inflight.find(key); it != inflight.end()) {
        if (!wait) return nullptr;
        auto future = it->second;
        lock.unlock();
        return future.get();
      }
      inflight.emplace(key, promise.get_future().share());
    }
    try {
      EntryPtr entry = compute(scene, t, sun);
      {
        std::lock_guard lock(cache_mu);
        insert_locked(key, entry);
        inflight.erase(key);
      }
      promise.set_value(entry);
      return entry;
    } catch (...) {
      {
        std::lock_guard lock(cache_mu);
        inflight.erase(key);
      }
      promise.set_exception(std::current_exception());
      throw;
    }
  }
};

ShadeService::ShadeService(ServiceOptions opts) : impl_(std::make_unique<Impl>()) {
  opts.sim.validate();
  impl_->opts = std::move(opts);
  fs::create_directories(impl_->opts.data_dir / "scenes");
}

ShadeService::~ShadeService() = default;

std::size_t ShadeService::cache_entries() const {
  std::lock_guard lock(impl_->cache_mu);
  return impl_->cache.size();
}

std::size_t ShadeService::computations() const { return impl_->computed.load(); }

ServiceResponse ShadeService::create_scene(const std::string& buildings_geojson, const std::string& roads_geojson) {
  Scene scene;
  try {
    scene = ingest_scene(buildings_geojson, roads_geojson, impl_->opts.ingest);
  } catch (const ParseError& e) {
    return error_response(400, "ParseError", e.what(), {{"byte_offset", e.byte_offset()}});
  }
  if (scene.buildings.empty() && scene.roads.nodes.empty()) {
    return error_response(400, "EmptyScene", "neither buildings nor roads were found");
  }

  if (auto existing = impl_->find_scene(scene.scene_id)) return json_response(200, impl_->handle(*existing));

  const fs::path dir = impl_->scene_dir(scene.scene_id);
  const fs::path staging = impl_->opts.data_dir / "scenes" / (".staging-" + scene.scene_id + "-" +
                                                              std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
  fs::create_directories(staging);
  write_file_text(staging / "buildings.geojson", buildings_geojson);
  write_file_text(staging / "roads.geojson", roads_geojson);
  save_scene(staging / "scene.json", scene);
  std::error_code ec;
  fs::rename(staging, dir, ec);
  if (ec) fs::remove_all(staging);  // another request stored the same content first

  auto shared = std::make_shared<const Scene>(std::move(scene));
  {
    std::lock_guard lock(impl_->scenes_mu);
    impl_->scenes.emplace(shared->scene_id, shared);
  }
  return json_response(200, impl_->handle(*shared));
}

ServiceResponse ShadeService::get_scene(const std::string& scene_id) {
  auto scene = impl_->find_scene(scene_id);
  if (!scene) return error_response(404, "UnknownScene", "no scene with id '" + scene_id + "'");
  return json_response(200, impl_->handle(*scene));
}

ServiceResponse ShadeService::get_shade(const std::string& scene_id, const std::string& date, const std::string& hour,
                                        const std::optional<std::string>& utc_offset, bool sidecar, bool wait) {
  auto scene = impl_->find_scene(scene_id);
  if (!scene) return error_response(404, "UnknownScene", "no scene with id '" + scene_id + "'");
  if (scene->buildings.empty()) return error_response(409, "NoBuildings", "scene has no buildings to cast shade");
  try {
    const TimeStamp t = request_time(date, hour, parse_offset(utc_offset), *scene);
    const SunPosition sun = sun_position(scene->bounds().center(), t);
    if (!sun.above_horizon()) {
      return error_response(422, "NightTime", "sun is below the horizon", {{"elevation", sun.elevation_deg}});
    }
    EntryPtr entry = impl_->shade_entry(*scene, t, sun, wait);
    if (!entry) return error_response(202, "Computing", "shade raster is being computed; retry shortly");
    ServiceResponse r;
    r.headers["ETag"] = entry->etag;
    r.headers["Cache-Control"] = "public, max-age=3600";
    if (sidecar) {
      r.body = entry->sidecar;
    } else {
      r.content_type = "image/png";
      r.body.assign(entry->png.begin(), entry->png.end());
      std::string compact = json::parse(entry->sidecar).dump();
      r.headers["X-Shade-Sidecar"] = compact;
    }
    return r;
  } catch (const BadRequest& e) {
    return error_response(400, "BadRequest", e.what());
  }
}

ServiceResponse ShadeService::plan(const std::string& scene_id, const std::string& request_json) {
  auto scene = impl_->find_scene(scene_id);
  if (!scene) return error_response(404, "UnknownScene", "no scene with id '" + scene_id + "'");
  json req;
  try {
    req = json::parse(request_json);
  } catch (const json::parse_error& e) {
    return error_response(400, "ParseError", e.what(), {{"byte_offset", error_offset(e)}});
  }
  RouteRequest rr;
  std::string date, hour;
  std::optional<std::string> offset;
  try {
    rr.origin = req.at("from").get<GeoPoint>();
    rr.destination = req.at("to").get<GeoPoint>();
    rr.w = req.value("w", 0.5);
    date = req.at("date").get<std::string>();
    const auto& h = req.at("hour");
    hour = h.is_string() ? h.get<std::string>() : std::to_string(h.get<int>());
    if (req.contains("utc_offset") && !req["utc_offset"].is_null()) offset = fmt::format("{}", req["utc_offset"].get<double>());
  } catch (const std::exception& e) {
    return error_response(400, "BadRequest", std::string("invalid route request: ") + e.what());
  }
  if (!(rr.w >= 0.0 && rr.w <= 1.0)) return error_response(400, "BadRequest", "w must be within [0, 1]");
  if (scene->roads.empty()) return error_response(409, "NoGraph", "scene has no road network");
  if (scene->buildings.empty()) return error_response(409, "NoBuildings", "scene has no buildings to cast shade");

  try {
    const TimeStamp t = request_time(date, hour, parse_offset(offset), *scene);
    rr.time = t;
    const SunPosition sun = sun_position(scene->bounds().center(), t);
    if (!sun.above_horizon()) {
      return error_response(422, "NightTime", "sun is below the horizon", {{"elevation", sun.elevation_deg}});
    }
    EntryPtr entry = impl_->shade_entry(*scene, t, sun, true);
    const RoutePlan route = plan_route(*entry->graph, rr, impl_->opts.routing);
    return {200, "application/geo+json", route_geojson(route, t), {}};
  } catch (const BadRequest& e) {
    return error_response(400, "BadRequest", e.what());
  } catch (const SnapError& e) {
    return error_response(422, "SnapError", e.what(), {{"nearest_m", e.nearest_distance_m()}});
  } catch (const NoRoute& e) {
    return error_response(404, "NoRoute", e.what());
  }
}

struct HttpServer::Impl {
  ShadeService& service;
  httplib::Server server;
  std::thread thread;

  explicit Impl(ShadeService& s) : service(s) {}
};

namespace {

void send(httplib::Response& res, const ServiceResponse& r) {
  res.status = r.status;
  for (const auto& [k, v] : r.headers) res.set_header(k, v);
  res.set_content(r.body, r.content_type);
}

std::optional<std::string> param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

}  // namespace

HttpServer::HttpServer(ShadeService& service, std::optional<fs::path> static_dir)
    : impl_(std::make_unique<Impl>(service)) {
  auto& svr = impl_->server;
  svr.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type, If-None-Match"},
                           {"Access-Control-Expose-Headers", "ETag, X-Shade-Sidecar"}});
  svr.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  svr.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });

  svr.Post("/scenes", [this](const httplib::Request& req, httplib::Response& res) {
    if (!req.is_multipart_form_data() || !req.has_file("buildings")) {
      send(res, error_response(400, "BadRequest", "expected multipart form with a 'buildings' file"));
      return;
    }
    const std::string roads = req.has_file("roads") ? req.get_file_value("roads").content : std::string{};
    send(res, impl_->service.create_scene(req.get_file_value("buildings").content, roads));
  });

  svr.Get(R"(/scenes/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, impl_->service.get_scene(req.matches[1]));
  });

  svr.Get(R"(/scenes/([^/]+)/shade(\.json)?)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto date = param(req, "date");
    const auto hour = param(req, "hour");
    if (!date || !hour) {
      send(res, error_response(400, "BadRequest", "date and hour query parameters are required"));
      return;
    }
    const bool sidecar = req.matches[2].matched || param(req, "format") == std::optional<std::string>("json");
    const bool wait = param(req, "wait") != std::optional<std::string>("0");
    ServiceResponse r = impl_->service.get_shade(req.matches[1], *date, *hour, param(req, "utc_offset"), sidecar, wait);
    if (r.status == 200 && req.has_header("If-None-Match") && req.get_header_value("If-None-Match") == r.headers["ETag"]) {
      res.status = 304;
      res.set_header("ETag", r.headers["ETag"]);
      return;
    }
    send(res, r);
  });

  svr.Post(R"(/scenes/([^/]+)/route)", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, impl_->service.plan(req.matches[1], req.body));
  });

  if (static_dir) svr.set_mount_point("/", static_dir->string());
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  auto& svr = impl_->server;
  const int bound = port == 0 ? svr.bind_to_any_port(host) : (svr.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([&svr] { svr.listen_after_bind(); });
  svr.wait_until_ready();
  return bound;
}

bool HttpServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

void HttpServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace shade
