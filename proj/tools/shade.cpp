// Command-line entry point for the shade pipeline.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "shade/dataset.hpp"
#include "shade/errors.hpp"
#include "shade/json_io.hpp"
#include "shade/metrics.hpp"
#include "shade/raster.hpp"
#include "shade/routing.hpp"
#include "shade/scene.hpp"
#include "shade/service.hpp"
#include "shade/solar.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shade;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

GeoPoint parse_lonlat(const std::string& text) {
  const auto parts = split_list(text);
  if (parts.size() != 2) throw std::invalid_argument("expected lon,lat but got '" + text + "'");
  return make_geo_point(std::stod(parts[0]), std::stod(parts[1]));
}

TileBBox parse_tile(const std::string& text) {
  int z = 0;
  long long x = 0, y = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%d/%lld/%lld%c", &z, &x, &y, &tail) != 3) {
    throw std::invalid_argument("expected z/x/y tile but got '" + text + "'");
  }
  return make_tile(z, x, y);
}

std::string read_optional(const std::string& path) { return path.empty() ? std::string{} : read_file_text(path); }

Scene load_scene_dir(const fs::path& dir) {
  if (fs::exists(dir / "scene.json")) return load_scene(dir / "scene.json");
  if (!fs::exists(dir / "buildings.geojson")) throw Error("no scene.json or buildings.geojson in " + dir.string());
  const fs::path roads = dir / "roads.geojson";
  return ingest_scene(read_file_text(dir / "buildings.geojson"), fs::exists(roads) ? read_file_text(roads) : "");
}

Scene load_any_scene(const fs::path& path) { return fs::is_directory(path) ? load_scene_dir(path) : load_scene(path); }

TimeStamp timestamp_for(const Scene& scene, const std::string& date, const std::string& time,
                        const std::optional<double>& offset) {
  return parse_timestamp(date, time, offset.value_or(default_utc_offset(scene.bounds().center())));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shade maps, datasets and shade-aware routing"};
  app.require_subcommand(1);

  // ingest
  std::string buildings_path, roads_path, ingest_out;
  auto* ingest = app.add_subcommand("ingest", "Parse GeoJSON into a versioned scene file");
  ingest->add_option("--buildings", buildings_path, "Building footprints GeoJSON")->required()->check(CLI::ExistingFile);
  ingest->add_option("--roads", roads_path, "Road network GeoJSON")->check(CLI::ExistingFile);
  ingest->add_option("--out", ingest_out, "Output directory")->required();

  // sun
  double lat = 0.0, lon = 0.0;
  std::string sun_date, sun_time;
  std::optional<double> sun_offset;
  bool no_eot = false;
  auto* sun = app.add_subcommand("sun", "Print the sun position as JSON");
  sun->add_option("--lat", lat)->required()->check(CLI::Range(-90.0, 90.0));
  sun->add_option("--lon", lon)->required()->check(CLI::Range(-180.0, 180.0));
  sun->add_option("--date", sun_date, "YYYY-MM-DD")->required();
  sun->add_option("--time", sun_time, "HH[:MM] local")->required();
  sun->add_option("--utc-offset", sun_offset, "Hours east of UTC (default: round(lon/15))");
  sun->add_flag("--no-equation-of-time", no_eot);

  // cast
  std::string cast_scene, cast_date, cast_time, cast_tile, cast_out;
  std::optional<double> cast_offset;
  std::size_t cast_px = SimConfig{}.raster_px;
  auto* cast = app.add_subcommand("cast", "Render shaded, skeleton and ground-truth snapshots");
  cast->add_option("--scene", cast_scene, "scene.json or a directory with GeoJSON")->required()->check(CLI::ExistingPath);
  cast->add_option("--date", cast_date)->required();
  cast->add_option("--time", cast_time)->required();
  cast->add_option("--tile", cast_tile, "z/x/y; defaults to the padded scene extent at 1 m/px");
  cast->add_option("--utc-offset", cast_offset);
  cast->add_option("--raster-px", cast_px)->check(CLI::PositiveNumber);
  cast->add_option("--out", cast_out)->required();

  // build-dataset
  std::string ds_scenes, ds_dates, ds_hours, ds_out;
  std::optional<double> ds_offset;
  ContrastiveConfig contrastive;
  std::size_t ds_px = SimConfig{}.raster_px;
  bool ds_extent = false;
  auto* build = app.add_subcommand("build-dataset", "Render a dataset with manifest and contrastive pairs");
  build->set_help_flag("--help", "Print this help message and exit");
  build->add_option("--scenes", ds_scenes, "Directory with one sub-directory per location")
      ->required()
      ->check(CLI::ExistingDirectory);
  build->add_option("--dates", ds_dates, "Comma-separated YYYY-MM-DD")->required();
  build->add_option("--hours", ds_hours, "Comma-separated local hours")->required();
  build->add_option("--out", ds_out)->required();
  build->add_option("--h", contrastive.h, "Hour window for positives");
  build->add_option("--k-plus", contrastive.k_plus);
  build->add_option("--k-minus", contrastive.k_minus);
  build->add_option("--seed", contrastive.seed);
  build->add_option("--utc-offset", ds_offset);
  build->add_option("--raster-px", ds_px)->check(CLI::PositiveNumber);
  build->add_flag("--scene-extent", ds_extent, "Render over the padded scene extent instead of the zoom-13 tile");

  // evaluate
  std::string pred_dir, gt_dir, eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "Score predicted rasters against ground truth");
  evaluate->add_option("--pred-dir", pred_dir)->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--gt-dir", gt_dir)->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--out", eval_out, "Report path (stdout when omitted)");

  // route
  std::string graph_path, shade_path, from_text, to_text, route_time, route_out;
  double w = 0.5;
  RoutingConfig routing;
  auto* route = app.add_subcommand("route", "Plan the shaded and shortest routes");
  route->add_option("--graph", graph_path, "scene.json or a directory with GeoJSON")->required()->check(CLI::ExistingPath);
  route->add_option("--shade", shade_path, "Ground-truth PNG with its JSON sidecar")->required()->check(CLI::ExistingFile);
  route->add_option("--from", from_text, "lon,lat")->required();
  route->add_option("--to", to_text, "lon,lat")->required();
  route->add_option("--w", w, "Shade preference in [0, 1]")->check(CLI::Range(0.0, 1.0));
  route->add_option("--time", route_time, "Label for the output; defaults to the sidecar timestamp");
  route->add_option("--sample-step", routing.sample_step_m)->check(CLI::PositiveNumber);
  route->add_option("--out", route_out, "GeoJSON path (stdout when omitted)");

  // serve
  ServiceOptions service_opts;
  int port = 8080;
  std::string host = "127.0.0.1", static_dir, data_dir = "data";
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve->add_option("--host", host);
  serve->add_option("--data-dir", data_dir);
  serve->add_option("--cache-size", service_opts.cache_size);
  serve->add_option("--static", static_dir, "Directory served at /")->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const Scene scene = ingest_scene(read_file_text(buildings_path), read_optional(roads_path));
      const fs::path out = fs::path(ingest_out) / "scene.json";
      save_scene(out, scene);
      std::cout << json{{"scene_id", scene.scene_id},
                        {"path", out.string()},
                        {"buildings", scene.buildings.size()},
                        {"skipped_buildings", scene.skipped_buildings},
                        {"road_nodes", scene.roads.nodes.size()},
                        {"road_edges", scene.roads.edges.size()},
                        {"skipped_roads", scene.skipped_roads}}
                       .dump()
                << "\n";
    } else if (*sun) {
      const GeoPoint p = make_geo_point(lon, lat);
      const TimeStamp t = parse_timestamp(sun_date, sun_time, sun_offset.value_or(default_utc_offset(p)));
      const SunPosition s = sun_position(p, t, SolarOptions{!no_eot});
      std::cout << json{{"declination", s.declination_deg},
                        {"elevation", s.elevation_deg},
                        {"azimuth", s.azimuth_deg},
                        {"hour_angle", s.hour_angle_deg}}
                       .dump()
                << "\n";
    } else if (*cast) {
      const Scene scene = load_any_scene(cast_scene);
      SimConfig sim;
      sim.raster_px = cast_px;
      const TimeStamp t = timestamp_for(scene, cast_date, cast_time, cast_offset);
      const GeoPoint center = cast_tile.empty() ? scene.bounds().center() : parse_tile(cast_tile).geo_bounds.center();
      const SunPosition s = sun_position(center, t);
      const RenderTarget target = cast_tile.empty() ? scene_render_target(scene, 1.0, sim.raster_px)
                                                    : RenderTarget::for_tile(parse_tile(cast_tile), sim.raster_px);
      const Snapshots snaps = render_snapshots(scene.buildings, s, target, sim);
      const fs::path out(cast_out);
      auto emit = [&](const char* name, const ShadeRaster& r, bool timed) {
        RasterSidecar side = sidecar_for(r);
        side.config_hash = sim.hash();
        if (timed) {
          side.sun = s;
          side.timestamp = t;
          side.prompt = format_prompt(s, t, PromptTemplate::time_of_day);
        }
        write_raster(out / name, r, side);
      };
      emit("x_shade.png", snaps.shaded, true);
      emit("x_sk.png", snaps.skeleton, false);
      emit("x_gt.png", snaps.ground_truth, true);
      std::cout << json{{"out", out.string()}, {"width", target.width}, {"height", target.height}, {"sun", s}}.dump()
                << "\n";
    } else if (*build) {
      std::vector<NamedScene> scenes;
      std::vector<fs::path> dirs;
      for (const auto& entry : fs::directory_iterator(ds_scenes)) {
        if (entry.is_directory()) dirs.push_back(entry.path());
      }
      std::sort(dirs.begin(), dirs.end());
      for (const auto& dir : dirs) scenes.push_back({dir.filename().string(), load_scene_dir(dir)});
      DatasetBuildOptions opts;
      opts.dates = split_list(ds_dates);
      for (const auto& h : split_list(ds_hours)) opts.hours.push_back(std::stoi(h));
      opts.utc_offset_hours = ds_offset;
      opts.sim.raster_px = ds_px;
      opts.contrastive = contrastive;
      if (ds_extent) opts.tile_zoom.reset();
      const DatasetSummary summary = build_dataset(scenes, opts, ds_out);
      std::size_t train = 0;
      for (const auto& r : summary.records) train += r.split == Split::train;
      std::cout << json{{"records", summary.records.size()},
                        {"train", train},
                        {"test", summary.records.size() - train},
                        {"night_skipped", summary.night_skipped},
                        {"positives", summary.pairs.positives()},
                        {"negatives", summary.pairs.negatives()},
                        {"records_without_positives", summary.pairs.records_without_positives}}
                       .dump()
                << "\n";
    } else if (*evaluate) {
      const std::string report = evaluate_directories(pred_dir, gt_dir);
      if (eval_out.empty()) {
        std::cout << report << "\n";
      } else {
        write_file_text(eval_out, report);
      }
    } else if (*route) {
      const Scene scene = load_any_scene(graph_path);
      if (scene.roads.empty()) throw NoRoute("scene has no road network");
      RasterSidecar side;
      const ShadeRaster gt = read_raster(shade_path, &side);
      const RoadGraph graph = overlay_shade(scene.roads, gt, routing.sample_step_m);
      RouteRequest req{parse_lonlat(from_text), parse_lonlat(to_text), w, side.timestamp};
      if (!route_time.empty()) {
        const auto t = route_time.find('T');
        if (t == std::string::npos) throw std::invalid_argument("--time expects YYYY-MM-DDTHH[:MM]");
        req.time = timestamp_for(scene, route_time.substr(0, t), route_time.substr(t + 1),
                                 side.timestamp ? std::optional(side.timestamp->utc_offset_hours) : std::nullopt);
      }
      const std::string geojson = route_geojson(plan_route(graph, req, routing), req.time);
      if (route_out.empty()) {
        std::cout << geojson << "\n";
      } else {
        write_file_text(route_out, geojson);
      }
    } else if (*serve) {
      service_opts.data_dir = data_dir;
      ShadeService service(service_opts);
      HttpServer server(service, static_dir.empty() ? std::nullopt : std::optional<fs::path>(static_dir));
      std::cerr << fmt::format("listening on http://{}:{}\n", host, port);
      if (!server.listen(host, port)) {
        std::cerr << fmt::format("error: cannot listen on {}:{}\n", host, port);
        return 1;
      }
    }
  } catch (const ParseError& e) {
    std::cerr << fmt::format("error: {} (byte {})\n", e.what(), e.byte_offset());
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
