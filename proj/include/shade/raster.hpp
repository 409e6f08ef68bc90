#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shade/geo.hpp"
#include "shade/solar.hpp"

namespace shade {

enum class RasterKind { shaded_snapshot, skeleton, ground_truth, edge };

std::string_view to_string(RasterKind k);
RasterKind raster_kind_from_string(std::string_view name);

struct PixelIndex {
  std::size_t col = 0;
  std::size_t row = 0;
};

/// Georeferenced 8-bit grayscale grid, row-major, row 0 at the north edge.
struct ShadeRaster {
  std::size_t width = 0;
  std::size_t height = 0;
  GeoBounds bounds;
  std::optional<TileBBox> tile;
  RasterKind kind = RasterKind::skeleton;
  std::vector<std::uint8_t> pixels;

  static ShadeRaster blank(std::size_t width, std::size_t height, const GeoBounds& bounds, RasterKind kind);

  std::uint8_t at(std::size_t col, std::size_t row) const { return pixels[row * width + col]; }
  std::uint8_t& at(std::size_t col, std::size_t row) { return pixels[row * width + col]; }

  GeoPoint pixel_center(std::size_t col, std::size_t row) const;
  /// Pixel containing the point, or nothing when it lies outside the bounds.
  std::optional<PixelIndex> pixel_of(const GeoPoint& p) const;
  /// Pixel edge lengths in meters at the raster center.
  double pixel_width_m() const;
  double pixel_height_m() const;

  bool same_grid(const ShadeRaster& other) const {
    return width == other.width && height == other.height && bounds == other.bounds;
  }
};

/// Everything persisted next to a raster PNG.
struct RasterSidecar {
  RasterKind kind = RasterKind::skeleton;
  std::size_t width = 0;
  std::size_t height = 0;
  GeoBounds bounds;
  std::optional<TileBBox> tile;
  std::optional<SunPosition> sun;
  std::optional<TimeStamp> timestamp;
  std::optional<TextPrompt> prompt;
  std::string config_hash;
};

RasterSidecar sidecar_for(const ShadeRaster& r);

/// Encodes as an 8-bit grayscale PNG with no time or text chunks, so equal
/// rasters always give equal bytes.
std::vector<std::uint8_t> encode_png(const ShadeRaster& r);
/// Decodes a PNG into raster pixels; color images are converted to gray.
ShadeRaster decode_png(std::span<const std::uint8_t> bytes);

std::string sidecar_to_json(const RasterSidecar& s);
RasterSidecar sidecar_from_json(std::string_view text);

/// Writes `<stem>.png` and `<stem>.json`.
void write_raster(const std::filesystem::path& png_path, const ShadeRaster& r, const RasterSidecar& sidecar);
/// Reads the PNG and, when present, its sidecar to restore georeferencing.
ShadeRaster read_raster(const std::filesystem::path& png_path, RasterSidecar* sidecar_out = nullptr);
std::filesystem::path sidecar_path(const std::filesystem::path& png_path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_text(const std::filesystem::path& path, std::string_view text);

}  // namespace shade
