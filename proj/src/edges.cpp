#include "shade/edges.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "shade/errors.hpp"

namespace shade {

namespace {

using Image = std::vector<double>;

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable convolution with replicated borders.
Image blur(const Image& src, std::size_t w, std::size_t h, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const auto radius = static_cast<std::ptrdiff_t>(k.size() / 2);
  const auto sw = static_cast<std::ptrdiff_t>(w);
  const auto sh = static_cast<std::ptrdiff_t>(h);
  Image tmp(src.size()), out(src.size());
  for (std::ptrdiff_t y = 0; y < sh; ++y) {
    for (std::ptrdiff_t x = 0; x < sw; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        const auto xx = std::clamp<std::ptrdiff_t>(x + i, 0, sw - 1);
        acc += k[static_cast<std::size_t>(i + radius)] * src[static_cast<std::size_t>(y * sw + xx)];
      }
      tmp[static_cast<std::size_t>(y * sw + x)] = acc;
    }
  }
  for (std::ptrdiff_t y = 0; y < sh; ++y) {
    for (std::ptrdiff_t x = 0; x < sw; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        const auto yy = std::clamp<std::ptrdiff_t>(y + i, 0, sh - 1);
        acc += k[static_cast<std::size_t>(i + radius)] * tmp[static_cast<std::size_t>(yy * sw + x)];
      }
      out[static_cast<std::size_t>(y * sw + x)] = acc;
    }
  }
  return out;
}

}  // namespace

ShadeRaster canny_edges(const ShadeRaster& x_sk, const CannyParams& params) {
  if (!(params.low < params.high)) throw std::invalid_argument("canny: low threshold must be below high");
  if (!(params.sigma > 0.0)) throw std::invalid_argument("canny: sigma must be positive");
  const std::size_t w = x_sk.width;
  const std::size_t h = x_sk.height;
  ShadeRaster out = ShadeRaster::blank(w, h, x_sk.bounds, RasterKind::edge);
  out.tile = x_sk.tile;
  if (w == 0 || h == 0) return out;

  Image src(x_sk.pixels.begin(), x_sk.pixels.end());
  const Image smooth = blur(src, w, h, params.sigma);

  const auto sw = static_cast<std::ptrdiff_t>(w);
  const auto sh = static_cast<std::ptrdiff_t>(h);
  auto px = [&](std::ptrdiff_t x, std::ptrdiff_t y) {
    x = std::clamp<std::ptrdiff_t>(x, 0, sw - 1);
    y = std::clamp<std::ptrdiff_t>(y, 0, sh - 1);
    return smooth[static_cast<std::size_t>(y * sw + x)];
  };

  Image mag(w * h);
  std::vector<std::uint8_t> dir(w * h);  // 0: E-W, 1: NE-SW diagonal, 2: N-S, 3: NW-SE diagonal
  for (std::ptrdiff_t y = 0; y < sh; ++y) {
    for (std::ptrdiff_t x = 0; x < sw; ++x) {
      const double gx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
      const double gy = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
      const auto i = static_cast<std::size_t>(y * sw + x);
      mag[i] = std::hypot(gx, gy);
      double angle = std::atan2(gy, gx) * 180.0 / 3.14159265358979323846;
      if (angle < 0.0) angle += 180.0;
      if (angle < 22.5 || angle >= 157.5) dir[i] = 0;
      else if (angle < 67.5) dir[i] = 1;
      else if (angle < 112.5) dir[i] = 2;
      else dir[i] = 3;
    }
  }

  auto mag_at = [&](std::ptrdiff_t x, std::ptrdiff_t y) {
    if (x < 0 || y < 0 || x >= sw || y >= sh) return 0.0;
    return mag[static_cast<std::size_t>(y * sw + x)];
  };

  // 0 = suppressed, 1 = weak, 2 = strong
  std::vector<std::uint8_t> state(w * h, 0);
  std::vector<std::size_t> stack;
  for (std::ptrdiff_t y = 0; y < sh; ++y) {
    for (std::ptrdiff_t x = 0; x < sw; ++x) {
      const auto i = static_cast<std::size_t>(y * sw + x);
      const double m = mag[i];
      if (m < params.low) continue;
      double n1 = 0.0, n2 = 0.0;
      switch (dir[i]) {
        case 0: n1 = mag_at(x - 1, y); n2 = mag_at(x + 1, y); break;
        case 1: n1 = mag_at(x - 1, y - 1); n2 = mag_at(x + 1, y + 1); break;
        case 2: n1 = mag_at(x, y - 1); n2 = mag_at(x, y + 1); break;
        default: n1 = mag_at(x + 1, y - 1); n2 = mag_at(x - 1, y + 1); break;
      }
      // Strict on one side keeps plateaus one pixel wide.
      if (!(m > n1 && m >= n2)) continue;
      if (m >= params.high) {
        state[i] = 2;
        stack.push_back(i);
      } else {
        state[i] = 1;
      }
    }
  }

  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    out.pixels[i] = 255;
    const auto x = static_cast<std::ptrdiff_t>(i % w);
    const auto y = static_cast<std::ptrdiff_t>(i / w);
    for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
      for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
        const auto nx = x + dx;
        const auto ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= sw || ny >= sh) continue;
        const auto j = static_cast<std::size_t>(ny * sw + nx);
        if (state[j] == 1) {
          state[j] = 2;
          stack.push_back(j);
        }
      }
    }
  }
  return out;
}

ConditioningTensor build_conditioning(const ShadeRaster& x_sk, const ShadeRaster& x_edge) {
  if (!x_sk.same_grid(x_edge)) throw DimensionMismatch("skeleton and edge map differ in size or bounds");
  ConditioningTensor t;
  t.width = x_sk.width;
  t.height = x_sk.height;
  t.bounds = x_sk.bounds;
  t.data.resize(x_sk.pixels.size() * ConditioningTensor::kChannels);
  for (std::size_t i = 0; i < x_sk.pixels.size(); ++i) {
    auto* px = &t.data[i * ConditioningTensor::kChannels];
    px[0] = px[1] = px[2] = x_sk.pixels[i];
    px[3] = x_edge.pixels[i];
  }
  return t;
}

std::pair<ShadeRaster, ShadeRaster> split_conditioning(const ConditioningTensor& t) {
  auto sk = ShadeRaster::blank(t.width, t.height, t.bounds, RasterKind::skeleton);
  auto edge = ShadeRaster::blank(t.width, t.height, t.bounds, RasterKind::edge);
  for (std::size_t i = 0; i < sk.pixels.size(); ++i) {
    sk.pixels[i] = t.data[i * ConditioningTensor::kChannels];
    edge.pixels[i] = t.data[i * ConditioningTensor::kChannels + 3];
  }
  return {std::move(sk), std::move(edge)};
}

}  // namespace shade
