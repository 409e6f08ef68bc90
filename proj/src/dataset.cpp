#include "shade/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

#include "shade/errors.hpp"
#include "shade/json_io.hpp"

namespace shade {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(Split s) { return s == Split::train ? "train" : "test"; }

void ContrastiveConfig::validate() const {
  if (h <= 0) throw std::invalid_argument("h must be positive");
  if (k_plus < 1 || k_minus < 1) throw std::invalid_argument("k_plus and k_minus must be at least 1");
}

namespace {

long long whole_utc_hour(const TimeStamp& t) {
  return std::llround(t.local_hours_since_epoch() - t.utc_offset_hours);
}

}  // namespace

int label_pair(const DatasetRecord& r_i, const DatasetRecord& r_j, const ContrastiveConfig& cfg) {
  if (r_i.record_id == r_j.record_id) throw std::invalid_argument("cannot label a record against itself");
  if (r_i.location_id != r_j.location_id) return 0;
  const long long gap = std::llabs(whole_utc_hour(r_i.t_day) - whole_utc_hour(r_j.t_day));
  return gap == cfg.h ? 1 : 0;
}

std::size_t PairBuffer::positives() const {
  return static_cast<std::size_t>(std::count_if(pairs.begin(), pairs.end(), [](const auto& p) { return p.label == 1; }));
}

std::size_t PairBuffer::negatives() const { return pairs.size() - positives(); }

PairBuffer build_pair_buffer(const std::vector<DatasetRecord>& records, const ContrastiveConfig& cfg) {
  cfg.validate();
  if (records.empty()) throw std::invalid_argument("pair buffer needs at least one record");
  {
    std::set<std::string> ids;
    for (const auto& r : records) {
      if (!ids.insert(r.record_id).second) throw std::invalid_argument("duplicate record id " + r.record_id);
    }
  }

  const std::size_t n = records.size();
  std::vector<long long> hours(n);
  for (std::size_t i = 0; i < n; ++i) hours[i] = whole_utc_hour(records[i].t_day);

  PairBuffer out;
  std::set<std::pair<std::size_t, std::size_t>> taken;
  std::vector<std::size_t> positives_of(n, 0);
  std::mt19937_64 rng(cfg.seed);

  auto key = [](std::size_t a, std::size_t b) { return std::make_pair(std::min(a, b), std::max(a, b)); };

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const bool positive = records[i].location_id == records[j].location_id && std::llabs(hours[i] - hours[j]) == cfg.h;
      (positive ? pos : neg).push_back(j);
    }
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);
    if (pos.empty()) ++out.records_without_positives;

    std::size_t added_pos = 0;
    for (std::size_t j : pos) {
      if (positives_of[i] >= cfg.k_plus) break;
      if (positives_of[j] >= cfg.k_plus) continue;
      if (!taken.insert(key(i, j)).second) continue;
      out.pairs.push_back({records[i].record_id, records[j].record_id, 1});
      ++positives_of[i];
      ++positives_of[j];
      ++added_pos;
    }

    const std::size_t quota = std::min(cfg.k_minus, std::max<std::size_t>(1, added_pos));
    std::size_t added_neg = 0;
    for (std::size_t j : neg) {
      if (added_neg >= quota) break;
      if (!taken.insert(key(i, j)).second) continue;
      out.pairs.push_back({records[i].record_id, records[j].record_id, 0});
      ++added_neg;
    }
  }
  return out;
}

std::vector<DatasetRecord> split_dataset(std::vector<DatasetRecord> records, double train_fraction,
                                         std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("train_fraction must be in (0, 1)");
  std::vector<std::string> groups;
  std::unordered_map<std::string, std::size_t> group_size;
  for (const auto& r : records) {
    if (group_size[r.location_id]++ == 0) groups.push_back(r.location_id);
  }
  if (groups.size() < 2) throw std::invalid_argument("grouped split needs at least two locations");

  std::mt19937_64 rng(seed);
  std::shuffle(groups.begin(), groups.end(), rng);

  const double target = train_fraction * static_cast<double>(records.size());
  std::set<std::string> train;
  double in_train = 0.0;
  for (const auto& g : groups) {
    const double next = in_train + static_cast<double>(group_size[g]);
    if (std::abs(next - target) < std::abs(in_train - target)) {
      train.insert(g);
      in_train = next;
    }
  }
  if (train.empty()) train.insert(groups.front());
  if (train.size() == groups.size()) train.erase(groups.back());

  for (auto& r : records) r.split = train.count(r.location_id) ? Split::train : Split::test;
  return records;
}

std::string record_to_json(const DatasetRecord& r) {
  json j{{"record_id", r.record_id},
         {"location_id", r.location_id},
         {"x_shade_path", r.x_shade_path},
         {"x_sk_path", r.x_sk_path},
         {"x_gt_path", r.x_gt_path},
         {"x_sat_path", r.x_sat_path ? json(*r.x_sat_path) : json(nullptr)},
         {"prompt", r.prompt},
         {"theta_sun", r.theta_sun},
         {"t_day", r.t_day},
         {"split", r.split ? json(std::string(to_string(*r.split))) : json(nullptr)}};
  return j.dump();
}

DatasetRecord record_from_json(std::string_view line) {
  const json j = json::parse(line.begin(), line.end());
  DatasetRecord r;
  r.record_id = j.at("record_id").get<std::string>();
  r.location_id = j.at("location_id").get<std::string>();
  r.x_shade_path = j.at("x_shade_path").get<std::string>();
  r.x_sk_path = j.at("x_sk_path").get<std::string>();
  r.x_gt_path = j.at("x_gt_path").get<std::string>();
  if (j.contains("x_sat_path") && !j["x_sat_path"].is_null()) r.x_sat_path = j["x_sat_path"].get<std::string>();
  r.prompt = j.at("prompt").get<TextPrompt>();
  r.theta_sun = j.at("theta_sun").get<SunPosition>();
  r.t_day = j.at("t_day").get<TimeStamp>();
  if (j.contains("split") && !j["split"].is_null()) {
    const auto s = j["split"].get<std::string>();
    if (s == "train") r.split = Split::train;
    else if (s == "test") r.split = Split::test;
    else throw std::invalid_argument("unknown split '" + s + "'");
  }
  return r;
}

std::string pair_to_json(const ContrastivePair& p) { return json{{"i", p.i}, {"j", p.j}, {"label", p.label}}.dump(); }

ContrastivePair pair_from_json(std::string_view line) {
  const json j = json::parse(line.begin(), line.end());
  return {j.at("i").get<std::string>(), j.at("j").get<std::string>(), j.at("label").get<int>()};
}

namespace {

template <typename T, typename Fn>
void write_jsonl(const fs::path& path, const std::vector<T>& items, Fn&& to_line) {
  std::string text;
  for (const auto& item : items) {
    text += to_line(item);
    text += '\n';
  }
  write_file_text(path, text);
}

template <typename Fn>
auto read_jsonl(const fs::path& path, Fn&& from_line) {
  std::vector<decltype(from_line(std::string_view{}))> out;
  std::istringstream in(read_file_text(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(from_line(line));
  }
  return out;
}

}  // namespace

void write_manifest(const fs::path& path, const std::vector<DatasetRecord>& records) {
  write_jsonl(path, records, record_to_json);
}

std::vector<DatasetRecord> read_manifest(const fs::path& path) { return read_jsonl(path, record_from_json); }

void write_pairs(const fs::path& path, const std::vector<ContrastivePair>& pairs) {
  write_jsonl(path, pairs, pair_to_json);
}

std::vector<ContrastivePair> read_pairs(const fs::path& path) { return read_jsonl(path, pair_from_json); }

std::vector<std::string> verify_manifest(const fs::path& manifest_path) {
  std::vector<std::string> problems;
  const fs::path root = manifest_path.parent_path();
  for (const auto& r : read_manifest(manifest_path)) {
    std::vector<std::string> paths{r.x_shade_path, r.x_sk_path, r.x_gt_path};
    if (r.x_sat_path) paths.push_back(*r.x_sat_path);
    bool all_present = true;
    for (const auto& p : paths) {
      if (!fs::exists(root / p)) {
        problems.push_back(r.record_id + ": missing " + p);
        all_present = false;
      }
    }
    if (!r.split) problems.push_back(r.record_id + ": split not assigned");
    if (!all_present) continue;

    RasterSidecar side;
    const ShadeRaster shade = read_raster(root / r.x_shade_path, &side);
    const ShadeRaster sk = read_raster(root / r.x_sk_path);
    const ShadeRaster gt = read_raster(root / r.x_gt_path);
    if (!shade.same_grid(sk) || !shade.same_grid(gt)) problems.push_back(r.record_id + ": rasters do not share a grid");
    if (!side.sun || !side.timestamp) {
      problems.push_back(r.record_id + ": shaded sidecar lacks sun position or timestamp");
      continue;
    }
    const TextPrompt again = format_prompt(*side.sun, *side.timestamp, r.prompt.template_id);
    if (again.text != r.prompt.text) {
      problems.push_back(r.record_id + ": prompt '" + r.prompt.text + "' does not match sidecar ('" + again.text + "')");
    }
  }
  return problems;
}

double default_utc_offset(const GeoPoint& p) { return std::round(p.lon / 15.0); }

RenderTarget scene_render_target(const Scene& scene, double meters_per_px, std::size_t max_px) {
  const GeoBounds b = scene.bounds();
  // Room for shadows down to roughly 20 degrees of elevation.
  const double pad = std::min(250.0, scene.max_height_m() * 2.75) + 5.0;
  return RenderTarget::for_bounds(b.padded(pad), meters_per_px, max_px);
}

DatasetSummary build_dataset(const std::vector<NamedScene>& scenes, const DatasetBuildOptions& opts,
                             const fs::path& out_dir) {
  opts.sim.validate();
  opts.contrastive.validate();
  if (scenes.empty()) throw std::invalid_argument("no scenes to build from");
  if (opts.dates.empty() || opts.hours.empty()) throw std::invalid_argument("dates and hours must be non-empty");

  DatasetSummary summary;
  constexpr PromptTemplate kTemplates[] = {PromptTemplate::declination, PromptTemplate::angle,
                                           PromptTemplate::time_of_day};
  std::size_t template_cursor = 0;

  for (const auto& [location, scene] : scenes) {
    if (scene.buildings.empty()) throw std::invalid_argument("scene '" + location + "' has no buildings");
    const GeoPoint center = scene.bounds().center();
    const RenderTarget target = opts.tile_zoom ? RenderTarget::for_tile(tile_for(center, *opts.tile_zoom), opts.sim.raster_px)
                                               : scene_render_target(scene, opts.meters_per_px, opts.sim.raster_px);
    const double offset = opts.utc_offset_hours.value_or(default_utc_offset(center));

    const ShadeRaster sk = render(scene.buildings, std::nullopt, target, opts.sim, RasterKind::skeleton);
    const ShadeRaster edge = canny_edges(sk, opts.canny);
    const std::string sk_rel = location + "/x_sk.png";
    RasterSidecar sk_side = sidecar_for(sk);
    sk_side.config_hash = opts.sim.hash();
    write_raster(out_dir / sk_rel, sk, sk_side);
    RasterSidecar edge_side = sidecar_for(edge);
    edge_side.config_hash = sk_side.config_hash;
    write_raster(out_dir / (location + "/x_edge.png"), edge, edge_side);

    for (const auto& date : opts.dates) {
      for (int hour : opts.hours) {
        const TimeStamp t = parse_timestamp(date, fmt::format("{:02d}:00", hour), offset);
        const SunPosition sun = sun_position(center, t);
        if (!sun.above_horizon()) {
          ++summary.night_skipped;
          continue;
        }
        const ShadeRaster shaded = render(scene.buildings, sun, target, opts.sim, RasterKind::shaded_snapshot);
        const ShadeRaster gt = extract_ground_truth(shaded, sk, opts.sim);

        DatasetRecord rec;
        rec.location_id = location;
        rec.record_id = fmt::format("{}/{}T{:02d}", location, date, hour);
        rec.x_shade_path = rec.record_id + "/x_shade.png";
        rec.x_gt_path = rec.record_id + "/x_gt.png";
        rec.x_sk_path = sk_rel;
        rec.theta_sun = sun;
        rec.t_day = t;
        rec.prompt = format_prompt(sun, t, kTemplates[template_cursor++ % 3]);

        RasterSidecar side = sidecar_for(shaded);
        side.sun = sun;
        side.timestamp = t;
        side.prompt = rec.prompt;
        side.config_hash = sk_side.config_hash;
        write_raster(out_dir / rec.x_shade_path, shaded, side);
        side.kind = RasterKind::ground_truth;
        write_raster(out_dir / rec.x_gt_path, gt, side);
        summary.records.push_back(std::move(rec));
      }
    }
  }
  if (summary.records.empty()) throw std::invalid_argument("every requested hour is at night");

  std::set<std::string> locations;
  for (const auto& r : summary.records) locations.insert(r.location_id);
  if (locations.size() >= 2) {
    summary.records = split_dataset(std::move(summary.records), opts.train_fraction, opts.contrastive.seed);
  } else {
    for (auto& r : summary.records) r.split = Split::train;
  }
  summary.pairs = build_pair_buffer(summary.records, opts.contrastive);
  write_manifest(out_dir / "dataset.jsonl", summary.records);
  write_pairs(out_dir / "pairs.jsonl", summary.pairs.pairs);
  return summary;
}

}  // namespace shade
