#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shade/edges.hpp"
#include "shade/scene.hpp"
#include "shade/shadowcast.hpp"
#include "shade/solar.hpp"

namespace shade {

enum class Split { train, test };

std::string_view to_string(Split s);

/// One rendered time step of one location. Paths are relative to the manifest.
struct DatasetRecord {
  std::string record_id;
  std::string location_id;
  std::string x_shade_path;
  std::string x_sk_path;
  std::string x_gt_path;
  std::optional<std::string> x_sat_path;
  TextPrompt prompt;
  SunPosition theta_sun;
  TimeStamp t_day;
  std::optional<Split> split;
};

struct ContrastiveConfig {
  /// Hour gap that makes two snapshots of one location a positive pair.
  int h = 1;
  std::size_t k_plus = 5;
  std::size_t k_minus = 5;
  std::uint64_t seed = 42;

  void validate() const;
};

struct ContrastivePair {
  std::string i;
  std::string j;
  int label = 0;

  friend bool operator==(const ContrastivePair&, const ContrastivePair&) = default;
};

/// 1 iff same location and the whole-hour timestamp gap equals cfg.h.
int label_pair(const DatasetRecord& r_i, const DatasetRecord& r_j, const ContrastiveConfig& cfg);

struct PairBuffer {
  std::vector<ContrastivePair> pairs;
  /// Records that had no positive partner at all and contributed negatives only.
  std::size_t records_without_positives = 0;

  std::size_t positives() const;
  std::size_t negatives() const;
};

/// For every record, in order, samples positives it does not already share with
/// an earlier record while both ends stay within k_plus positives, then as many
/// negatives as positives it added (at least one, at most k_minus). Unordered
/// pairs never repeat.
/// Deterministic for a given record order and seed.
PairBuffer build_pair_buffer(const std::vector<DatasetRecord>& records, const ContrastiveConfig& cfg);

/// Assigns train/test per location group so that the train share of records is
/// as close as possible to `train_fraction`. Needs at least two locations.
std::vector<DatasetRecord> split_dataset(std::vector<DatasetRecord> records, double train_fraction = 0.7,
                                         std::uint64_t seed = 42);

std::string record_to_json(const DatasetRecord& r);
DatasetRecord record_from_json(std::string_view line);
std::string pair_to_json(const ContrastivePair& p);
ContrastivePair pair_from_json(std::string_view line);

void write_manifest(const std::filesystem::path& path, const std::vector<DatasetRecord>& records);
std::vector<DatasetRecord> read_manifest(const std::filesystem::path& path);
void write_pairs(const std::filesystem::path& path, const std::vector<ContrastivePair>& pairs);
std::vector<ContrastivePair> read_pairs(const std::filesystem::path& path);

/// Checks that every referenced file exists, that rasters of one record share
/// a grid, and that each shaded sidecar's sun position re-formats to the
/// record's prompt. Returns one message per problem; empty means consistent.
std::vector<std::string> verify_manifest(const std::filesystem::path& manifest_path);

struct NamedScene {
  std::string location_id;
  Scene scene;
};

struct DatasetBuildOptions {
  std::vector<std::string> dates;  // YYYY-MM-DD
  std::vector<int> hours;          // local clock hours
  /// Per-location UTC offset; when unset it is round(longitude / 15).
  std::optional<double> utc_offset_hours;
  SimConfig sim;
  CannyParams canny;
  ContrastiveConfig contrastive;
  double train_fraction = 0.7;
  /// Render on the slippy tile of this zoom containing the scene center. When
  /// unset, render the padded scene extent at `meters_per_px`.
  std::optional<int> tile_zoom = kDefaultTileZoom;
  double meters_per_px = 1.0;
};

struct DatasetSummary {
  std::vector<DatasetRecord> records;
  PairBuffer pairs;
  std::size_t night_skipped = 0;
};

/// Renders every (location, date, hour), writes PNGs with sidecars,
/// dataset.jsonl and pairs.jsonl under `out_dir`.
DatasetSummary build_dataset(const std::vector<NamedScene>& scenes, const DatasetBuildOptions& opts,
                             const std::filesystem::path& out_dir);

/// UTC offset used when none is configured.
double default_utc_offset(const GeoPoint& p);

/// Render target covering the scene plus room for its longest plausible shadow.
RenderTarget scene_render_target(const Scene& scene, double meters_per_px, std::size_t max_px);

}  // namespace shade
