#include <doctest.h>

#include <json.hpp>
#include <map>
#include <set>

#include "fixtures.hpp"
#include "shade/dataset.hpp"
#include "shade/raster.hpp"
#include "shade/scene.hpp"

using namespace shade;
using fixtures::record;

namespace {

std::vector<DatasetRecord> grid_records(int locations, int first_hour, int hours) {
  std::vector<DatasetRecord> out;
  for (int l = 0; l < locations; ++l) {
    for (int h = first_hour; h < first_hour + hours; ++h) {
      out.push_back(record("L" + std::to_string(l) + "-" + std::to_string(h), "L" + std::to_string(l), h));
    }
  }
  return out;
}

std::map<std::string, std::size_t> positives_per_record(const PairBuffer& buf) {
  std::map<std::string, std::size_t> n;
  for (const auto& p : buf.pairs) {
    if (p.label != 1) continue;
    ++n[p.i];
    ++n[p.j];
  }
  return n;
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("positive needs the same place and exactly h hours apart") {
    const ContrastiveConfig cfg;
    CHECK(label_pair(record("a", "L", 10), record("b", "L", 11), cfg) == 1);
    CHECK(label_pair(record("a", "L", 10), record("b", "L", 14), cfg) == 0);
    CHECK(label_pair(record("a", "L", 10), record("b", "M", 11), cfg) == 0);
    CHECK(label_pair(record("a", "L", 10), record("b", "L", 10), cfg) == 0);
    ContrastiveConfig two;
    two.h = 2;
    CHECK(label_pair(record("a", "L", 10), record("b", "L", 12), two) == 1);
    CHECK(label_pair(record("a", "L", 10), record("b", "L", 11), two) == 0);
    CHECK_THROWS(label_pair(record("a", "L", 10), record("a", "L", 11), cfg));
  }

  TEST_CASE("hours compare on the absolute clock across dates and offsets") {
    const ContrastiveConfig cfg;
    // 23:00 on the 20th and 00:00 on the 21st are one hour apart.
    CHECK(label_pair(record("a", "L", 23, 20), record("b", "L", 0, 21), cfg) == 1);
    // Same instant expressed in two offsets is no gap at all.
    CHECK(label_pair(record("a", "L", 12, 20, -7.0), record("b", "L", 13, 20, -6.0), cfg) == 0);
  }

  TEST_CASE("exhaustive label check over a three by six grid") {
    const auto records = grid_records(3, 9, 6);
    const ContrastiveConfig cfg;
    std::size_t pairs = 0, positives = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      for (std::size_t j = i + 1; j < records.size(); ++j) {
        ++pairs;
        const bool same_place = records[i].location_id == records[j].location_id;
        const int gap = std::abs(records[i].t_day.whole_hour() - records[j].t_day.whole_hour());
        const int expected = (same_place && gap == 1) ? 1 : 0;
        CHECK(label_pair(records[i], records[j], cfg) == expected);
        CHECK(label_pair(records[j], records[i], cfg) == expected);
        positives += expected;
      }
    }
    CHECK(pairs == 153);
    CHECK(positives == 15);
  }

  TEST_CASE("interior hours get both neighbours as positives") {
    std::vector<DatasetRecord> records;
    for (int h = 8; h <= 18; ++h) records.push_back(record("r" + std::to_string(h), "L", h));
    const PairBuffer buf = build_pair_buffer(records, ContrastiveConfig{});
    const auto n = positives_per_record(buf);
    for (int h = 9; h <= 17; ++h) CHECK(n.at("r" + std::to_string(h)) == 2);
    CHECK(n.at("r8") == 1);
    CHECK(n.at("r18") == 1);
  }

  TEST_CASE("pair buffer invariants over the grid") {
    const auto records = grid_records(3, 9, 6);
    for (std::uint64_t seed : {1u, 42u, 777u}) {
      ContrastiveConfig cfg;
      cfg.seed = seed;
      const PairBuffer buf = build_pair_buffer(records, cfg);
      std::set<std::pair<std::string, std::string>> seen;
      for (const auto& p : buf.pairs) {
        CHECK(p.i != p.j);
        const auto key = std::minmax(p.i, p.j);
        CHECK(seen.insert(key).second);
        const auto& ri = *std::find_if(records.begin(), records.end(), [&](const auto& r) { return r.record_id == p.i; });
        const auto& rj = *std::find_if(records.begin(), records.end(), [&](const auto& r) { return r.record_id == p.j; });
        CHECK(p.label == label_pair(ri, rj, cfg));
      }
      for (const auto& [id, n] : positives_per_record(buf)) CHECK(n <= cfg.k_plus);
      const long diff = static_cast<long>(buf.positives()) - static_cast<long>(buf.negatives());
      CHECK(std::labs(diff) <= static_cast<long>(records.size()));
      CHECK(buf.positives() == 15);
      CHECK(buf.records_without_positives == 0);
    }
  }

  TEST_CASE("pair buffer is deterministic per seed") {
    const auto records = grid_records(4, 8, 8);
    ContrastiveConfig cfg;
    const PairBuffer a = build_pair_buffer(records, cfg);
    const PairBuffer b = build_pair_buffer(records, cfg);
    CHECK(a.pairs == b.pairs);
    cfg.seed = 43;
    CHECK(build_pair_buffer(records, cfg).pairs != a.pairs);
  }

  TEST_CASE("k_plus caps positives when many are available") {
    // Same place, two dates, so each hour has up to four neighbours one hour away.
    std::vector<DatasetRecord> records;
    for (int h = 8; h <= 14; ++h) {
      records.push_back(record("a" + std::to_string(h), "L", h, 20));
      records.push_back(record("b" + std::to_string(h), "L", h, 20));
    }
    ContrastiveConfig cfg;
    cfg.k_plus = 2;
    const PairBuffer buf = build_pair_buffer(records, cfg);
    for (const auto& [id, n] : positives_per_record(buf)) CHECK(n <= 2);
  }

  TEST_CASE("records without partners contribute negatives only") {
    std::vector<DatasetRecord> records{record("a", "L", 9), record("b", "M", 9), record("c", "N", 15)};
    const PairBuffer buf = build_pair_buffer(records, ContrastiveConfig{});
    CHECK(buf.positives() == 0);
    CHECK(buf.records_without_positives == 3);
    CHECK(buf.negatives() > 0);
    CHECK_THROWS(build_pair_buffer({}, ContrastiveConfig{}));
    CHECK_THROWS(build_pair_buffer({record("a", "L", 9), record("a", "M", 9)}, ContrastiveConfig{}));
    ContrastiveConfig bad;
    bad.k_plus = 0;
    CHECK_THROWS(build_pair_buffer(records, bad));
  }

  TEST_CASE("grouped split of ten locations is seven to three without leakage") {
    const auto records = grid_records(10, 9, 5);
    for (std::uint64_t seed : {0u, 42u, 99u, 12345u}) {
      const auto split = split_dataset(records, 0.7, seed);
      std::map<std::string, std::set<Split>> by_location;
      std::size_t train = 0;
      for (const auto& r : split) {
        REQUIRE(r.split);
        by_location[r.location_id].insert(*r.split);
        train += *r.split == Split::train;
      }
      std::size_t train_locations = 0;
      for (const auto& [loc, splits] : by_location) {
        CHECK(splits.size() == 1);
        train_locations += splits.count(Split::train);
      }
      CHECK(train_locations == 7);
      CHECK(train == 35);
      const auto again = split_dataset(records, 0.7, seed);
      for (std::size_t i = 0; i < split.size(); ++i) CHECK(again[i].split == split[i].split);
    }
  }

  TEST_CASE("uneven groups stay within one group of the target") {
    std::vector<DatasetRecord> records;
    const int sizes[] = {1, 7, 3, 12, 2, 5};
    int id = 0;
    for (int g = 0; g < 6; ++g) {
      for (int k = 0; k < sizes[g]; ++k) records.push_back(record("r" + std::to_string(id++), "G" + std::to_string(g), 8 + k));
    }
    const auto split = split_dataset(records, 0.7, 5);
    std::size_t train = 0;
    for (const auto& r : split) train += *r.split == Split::train;
    CHECK(std::abs(static_cast<double>(train) - 0.7 * records.size()) <= 12.0);
    CHECK(train > 0);
    CHECK(train < records.size());
  }

  TEST_CASE("split needs two locations and a proper fraction") {
    CHECK_THROWS(split_dataset(grid_records(1, 9, 4), 0.7, 1));
    CHECK_THROWS(split_dataset(grid_records(3, 9, 4), 1.0, 1));
    CHECK_THROWS(split_dataset(grid_records(3, 9, 4), 0.0, 1));
  }

  TEST_CASE("manifest and pair files round trip") {
    const auto dir = fixtures::scratch_dir("manifest");
    auto records = split_dataset(grid_records(2, 9, 3), 0.7, 1);
    records[0].x_sat_path = "sat/L0.png";
    records[1].prompt = {"Angle: 45°", PromptTemplate::angle};
    write_manifest(dir / "dataset.jsonl", records);
    const auto back = read_manifest(dir / "dataset.jsonl");
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < back.size(); ++i) CHECK(record_to_json(back[i]) == record_to_json(records[i]));
    const PairBuffer buf = build_pair_buffer(records, ContrastiveConfig{});
    write_pairs(dir / "pairs.jsonl", buf.pairs);
    CHECK(read_pairs(dir / "pairs.jsonl") == buf.pairs);
    const auto line = nlohmann::json::parse(record_to_json(records[0]));
    for (const char* key : {"record_id", "location_id", "x_shade_path", "x_sk_path", "x_gt_path", "x_sat_path", "prompt",
                            "theta_sun", "t_day", "split"}) {
      CHECK(line.contains(key));
    }
  }

  TEST_CASE("building a small dataset writes a complete manifest") {
    const auto dir = fixtures::scratch_dir("build-dataset");
    const Scene campus = ingest_scene(fixtures::read_campus_buildings(), fixtures::read_campus_roads());
    // A second location: the same campus moved a few kilometres east.
    std::string shifted = fixtures::read_campus_buildings();
    for (std::size_t pos = 0; (pos = shifted.find("-111.9", pos)) != std::string::npos; pos += 6) shifted[pos + 5] = '8';
    const Scene other = ingest_scene(shifted, "");
    DatasetBuildOptions opts;
    opts.dates = {"2024-03-20", "2024-06-21"};
    opts.hours = {6, 9, 10, 11};
    opts.sim.raster_px = 128;
    opts.tile_zoom.reset();
    opts.meters_per_px = 2.0;
    const DatasetSummary summary = build_dataset({{"campus", campus}, {"east", other}}, opts, dir);

    // 06:00 is before sunrise in March and after it in June at this latitude.
    CHECK(summary.night_skipped == 2);
    CHECK(summary.records.size() == 2 * 2 * 4 - 2);
    CHECK(verify_manifest(dir / "dataset.jsonl").empty());
    const auto manifest = read_manifest(dir / "dataset.jsonl");
    CHECK(manifest.size() == summary.records.size());
    CHECK(read_pairs(dir / "pairs.jsonl") == summary.pairs.pairs);
    std::set<PromptTemplate> templates;
    for (const auto& r : manifest) {
      templates.insert(r.prompt.template_id);
      CHECK(std::filesystem::exists(dir / r.x_gt_path));
      RasterSidecar side;
      read_raster(dir / r.x_shade_path, &side);
      REQUIRE(side.sun);
      CHECK(side.sun->elevation_deg == r.theta_sun.elevation_deg);
      CHECK(side.timestamp == r.t_day);
    }
    CHECK(templates.size() == 3);
    CHECK(std::filesystem::exists(dir / "campus" / "x_edge.png"));
  }

  TEST_CASE("verify_manifest reports missing files and prompt drift") {
    const auto dir = fixtures::scratch_dir("verify");
    const Scene campus = ingest_scene(fixtures::read_campus_buildings(), "");
    DatasetBuildOptions opts;
    opts.dates = {"2024-03-20"};
    opts.hours = {10, 11};
    opts.sim.raster_px = 64;
    build_dataset({{"campus", campus}}, opts, dir);
    auto records = read_manifest(dir / "dataset.jsonl");
    REQUIRE(records.size() == 2);
    CHECK(records[0].split == Split::train);
    records[0].prompt.text = "Angle: 1°";
    records[0].prompt.template_id = PromptTemplate::angle;
    std::filesystem::remove(dir / records[1].x_gt_path);
    write_manifest(dir / "dataset.jsonl", records);
    const auto problems = verify_manifest(dir / "dataset.jsonl");
    CHECK(problems.size() == 2);
  }
}
