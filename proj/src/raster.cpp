#include "shade/raster.hpp"

#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include <png.h>

#include "shade/errors.hpp"
#include "shade/json_io.hpp"

namespace shade {

using nlohmann::json;

std::string_view to_string(RasterKind k) {
  switch (k) {
    case RasterKind::shaded_snapshot: return "shaded_snapshot";
    case RasterKind::skeleton: return "skeleton";
    case RasterKind::ground_truth: return "ground_truth";
    case RasterKind::edge: return "edge";
  }
  return "skeleton";
}

RasterKind raster_kind_from_string(std::string_view name) {
  if (name == "shaded_snapshot") return RasterKind::shaded_snapshot;
  if (name == "skeleton") return RasterKind::skeleton;
  if (name == "ground_truth") return RasterKind::ground_truth;
  if (name == "edge") return RasterKind::edge;
  throw std::invalid_argument("unknown raster kind '" + std::string(name) + "'");
}

ShadeRaster ShadeRaster::blank(std::size_t width, std::size_t height, const GeoBounds& bounds, RasterKind kind) {
  ShadeRaster r;
  r.width = width;
  r.height = height;
  r.bounds = bounds;
  r.kind = kind;
  r.pixels.assign(width * height, 0);
  return r;
}

GeoPoint ShadeRaster::pixel_center(std::size_t col, std::size_t row) const {
  const double fx = (static_cast<double>(col) + 0.5) / static_cast<double>(width);
  const double fy = (static_cast<double>(row) + 0.5) / static_cast<double>(height);
  return {bounds.min_lon + fx * (bounds.max_lon - bounds.min_lon),
          bounds.max_lat - fy * (bounds.max_lat - bounds.min_lat)};
}

std::optional<PixelIndex> ShadeRaster::pixel_of(const GeoPoint& p) const {
  if (width == 0 || height == 0 || !bounds.contains(p)) return std::nullopt;
  const double fx = (p.lon - bounds.min_lon) / (bounds.max_lon - bounds.min_lon);
  const double fy = (bounds.max_lat - p.lat) / (bounds.max_lat - bounds.min_lat);
  auto col = static_cast<std::size_t>(std::floor(fx * static_cast<double>(width)));
  auto row = static_cast<std::size_t>(std::floor(fy * static_cast<double>(height)));
  if (col >= width) col = width - 1;
  if (row >= height) row = height - 1;
  return PixelIndex{col, row};
}

double ShadeRaster::pixel_width_m() const {
  const LocalFrame f = LocalFrame::at(bounds.center());
  return (bounds.max_lon - bounds.min_lon) * f.meters_per_deg_lon / static_cast<double>(width);
}

double ShadeRaster::pixel_height_m() const {
  return (bounds.max_lat - bounds.min_lat) * kMetersPerDegLat / static_cast<double>(height);
}

RasterSidecar sidecar_for(const ShadeRaster& r) {
  RasterSidecar s;
  s.kind = r.kind;
  s.width = r.width;
  s.height = r.height;
  s.bounds = r.bounds;
  s.tile = r.tile;
  return s;
}

namespace {

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void png_read_from_span(png_structp png, png_bytep data, png_size_t length) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->offset + length > cur->bytes.size()) png_error(png, "truncated PNG");
  std::memcpy(data, cur->bytes.data() + cur->offset, length);
  cur->offset += length;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const ShadeRaster& r) {
  if (r.width == 0 || r.height == 0 || r.pixels.size() != r.width * r.height) {
    throw std::invalid_argument("cannot encode an empty or inconsistent raster");
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> out;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(r.width), static_cast<png_uint_32>(r.height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  for (std::size_t row = 0; row < r.height; ++row) {
    png_write_row(png, const_cast<png_bytep>(r.pixels.data() + row * r.width));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

ShadeRaster decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw Error("not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  ReadCursor cursor{bytes, 0};
  ShadeRaster r;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("PNG decoding failed");
  }
  png_set_read_fn(png, &cursor, png_read_from_span);
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  png_read_update_info(png, info);
  r.width = png_get_image_width(png, info);
  r.height = png_get_image_height(png, info);
  if (png_get_rowbytes(png, info) != r.width) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("unsupported PNG layout");
  }
  r.pixels.resize(r.width * r.height);
  std::vector<png_bytep> rows(r.height);
  for (std::size_t i = 0; i < r.height; ++i) rows[i] = r.pixels.data() + i * r.width;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  r.bounds = {0.0, 0.0, 1.0, 1.0};
  return r;
}

std::string sidecar_to_json(const RasterSidecar& s) {
  json j;
  j["kind"] = std::string(to_string(s.kind));
  j["width"] = s.width;
  j["height"] = s.height;
  j["bbox"] = s.bounds;
  j["tile"] = s.tile ? json(*s.tile) : json(nullptr);
  j["sun"] = s.sun ? json(*s.sun) : json(nullptr);
  j["timestamp"] = s.timestamp ? json(*s.timestamp) : json(nullptr);
  j["prompt"] = s.prompt ? json(*s.prompt) : json(nullptr);
  j["config_hash"] = s.config_hash;
  return j.dump(2);
}

RasterSidecar sidecar_from_json(std::string_view text) {
  const json j = json::parse(text.begin(), text.end());
  RasterSidecar s;
  s.kind = raster_kind_from_string(j.at("kind").get<std::string>());
  s.width = j.at("width").get<std::size_t>();
  s.height = j.at("height").get<std::size_t>();
  s.bounds = j.at("bbox").get<GeoBounds>();
  if (j.contains("tile") && !j["tile"].is_null()) s.tile = j["tile"].get<TileBBox>();
  if (j.contains("sun") && !j["sun"].is_null()) s.sun = j["sun"].get<SunPosition>();
  if (j.contains("timestamp") && !j["timestamp"].is_null()) s.timestamp = j["timestamp"].get<TimeStamp>();
  if (j.contains("prompt") && !j["prompt"].is_null()) s.prompt = j["prompt"].get<TextPrompt>();
  s.config_hash = j.value("config_hash", std::string{});
  return s;
}

std::filesystem::path sidecar_path(const std::filesystem::path& png_path) {
  auto p = png_path;
  p.replace_extension(".json");
  return p;
}

void write_raster(const std::filesystem::path& png_path, const ShadeRaster& r, const RasterSidecar& sidecar) {
  write_file_bytes(png_path, encode_png(r));
  write_file_text(sidecar_path(png_path), sidecar_to_json(sidecar));
}

ShadeRaster read_raster(const std::filesystem::path& png_path, RasterSidecar* sidecar_out) {
  ShadeRaster r = decode_png(read_file_bytes(png_path));
  const auto side = sidecar_path(png_path);
  if (std::filesystem::exists(side)) {
    const RasterSidecar s = sidecar_from_json(read_file_text(side));
    if (s.width != r.width || s.height != r.height) {
      throw DimensionMismatch("sidecar dimensions disagree with " + png_path.string());
    }
    r.bounds = s.bounds;
    r.tile = s.tile;
    r.kind = s.kind;
    if (sidecar_out) *sidecar_out = s;
  }
  return r;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_file_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_file_text(const std::filesystem::path& path, std::string_view text) {
  write_file_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

}  // namespace shade
