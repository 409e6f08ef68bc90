#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "shade/raster.hpp"

namespace shade {

/// Canny parameters. Thresholds apply to the L2 Sobel magnitude computed on
/// 8-bit input values, the same scale OpenCV uses.
struct CannyParams {
  double low = 50.0;
  double high = 150.0;
  double sigma = 1.4;
};

/// Gaussian blur, Sobel, non-maximum suppression, double threshold and
/// hysteresis. Output is an edge raster with pixels in {0, 255}.
ShadeRaster canny_edges(const ShadeRaster& x_sk, const CannyParams& params = {});

/// Skeleton gray replicated into R, G, B plus the edge map as a fourth channel,
/// interleaved per pixel.
struct ConditioningTensor {
  static constexpr std::size_t kChannels = 4;

  std::size_t width = 0;
  std::size_t height = 0;
  GeoBounds bounds;
  std::vector<std::uint8_t> data;

  std::uint8_t at(std::size_t col, std::size_t row, std::size_t channel) const {
    return data[(row * width + col) * kChannels + channel];
  }
};

ConditioningTensor build_conditioning(const ShadeRaster& x_sk, const ShadeRaster& x_edge);

/// Inverse of build_conditioning: returns (skeleton, edge).
std::pair<ShadeRaster, ShadeRaster> split_conditioning(const ConditioningTensor& t);

}  // namespace shade
