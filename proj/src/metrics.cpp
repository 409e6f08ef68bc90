#include "shade/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "shade/errors.hpp"

namespace shade {

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

namespace {

void require_same_size(std::size_t w1, std::size_t h1, std::size_t w2, std::size_t h2) {
  if (w1 != w2 || h1 != h2) {
    throw DimensionMismatch("size mismatch: " + std::to_string(w1) + "x" + std::to_string(h1) + " vs " +
                            std::to_string(w2) + "x" + std::to_string(h2));
  }
}

double iou_or_one(std::size_t inter, std::size_t uni) {
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

BinaryMask binarize(const ShadeRaster& r, std::uint8_t threshold) {
  BinaryMask m = BinaryMask::empty(r.width, r.height);
  for (std::size_t i = 0; i < r.pixels.size(); ++i) m.bits[i] = r.pixels[i] > threshold ? 1 : 0;
  return m;
}

double mse(const ShadeRaster& a, const ShadeRaster& b) {
  require_same_size(a.width, a.height, b.width, b.height);
  if (a.pixels.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(a.pixels.size());
}

double ssim(const ShadeRaster& a, const ShadeRaster& b, const SsimParams& p) {
  require_same_size(a.width, a.height, b.width, b.height);
  if (p.window == 0 || p.window % 2 == 0) throw std::invalid_argument("ssim window must be odd");
  if (a.width < p.window || a.height < p.window) throw std::invalid_argument("image smaller than the SSIM window");

  std::vector<double> k(p.window);
  const double half = static_cast<double>(p.window / 2);
  for (std::size_t i = 0; i < p.window; ++i) {
    const double d = static_cast<double>(i) - half;
    k[i] = std::exp(-d * d / (2.0 * p.sigma * p.sigma));
  }
  const double ksum = std::accumulate(k.begin(), k.end(), 0.0);
  for (auto& v : k) v /= ksum;

  const std::size_t w = a.width;
  const std::size_t h = a.height;
  const std::size_t ow = w - p.window + 1;
  const std::size_t oh = h - p.window + 1;

  // Five moment images, filtered horizontally then vertically (valid region only).
  std::vector<double> src[5];
  for (auto& s : src) s.resize(w * h);
  for (std::size_t i = 0; i < w * h; ++i) {
    const double x = a.pixels[i];
    const double y = b.pixels[i];
    src[0][i] = x;
    src[1][i] = y;
    src[2][i] = x * x;
    src[3][i] = y * y;
    src[4][i] = x * y;
  }
  std::vector<double> filtered[5];
  std::vector<double> tmp(ow * h);
  for (int m = 0; m < 5; ++m) {
    for (std::size_t row = 0; row < h; ++row) {
      for (std::size_t col = 0; col < ow; ++col) {
        double acc = 0.0;
        for (std::size_t t = 0; t < p.window; ++t) acc += k[t] * src[m][row * w + col + t];
        tmp[row * ow + col] = acc;
      }
    }
    filtered[m].resize(ow * oh);
    for (std::size_t row = 0; row < oh; ++row) {
      for (std::size_t col = 0; col < ow; ++col) {
        double acc = 0.0;
        for (std::size_t t = 0; t < p.window; ++t) acc += k[t] * tmp[(row + t) * ow + col];
        filtered[m][row * ow + col] = acc;
      }
    }
  }

  const double c1 = (0.01 * p.dynamic_range) * (0.01 * p.dynamic_range);
  const double c2 = (0.03 * p.dynamic_range) * (0.03 * p.dynamic_range);
  double total = 0.0;
  for (std::size_t i = 0; i < ow * oh; ++i) {
    const double mx = filtered[0][i];
    const double my = filtered[1][i];
    const double vx = filtered[2][i] - mx * mx;
    const double vy = filtered[3][i] - my * my;
    const double cxy = filtered[4][i] - mx * my;
    total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(ow * oh);
}

double miou(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_size(pred.width, pred.height, gt.width, gt.height);
  std::size_t inter_fg = 0, union_fg = 0, inter_bg = 0, union_bg = 0;
  for (std::size_t i = 0; i < pred.bits.size(); ++i) {
    const bool p = pred.bits[i] != 0;
    const bool g = gt.bits[i] != 0;
    inter_fg += (p && g);
    union_fg += (p || g);
    inter_bg += (!p && !g);
    union_bg += (!p || !g);
  }
  return (iou_or_one(inter_fg, union_fg) + iou_or_one(inter_bg, union_bg)) / 2.0;
}

namespace {

// Separable 3x3 max (dilate) or min (erode); outside pixels read as 0.
BinaryMask morph3x3(const BinaryMask& m, bool take_max) {
  const std::size_t w = m.width;
  const std::size_t h = m.height;
  auto combine = [take_max](std::uint8_t a, std::uint8_t b) -> std::uint8_t {
    return take_max ? std::max(a, b) : std::min(a, b);
  };
  std::vector<std::uint8_t> rows(w * h);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      std::uint8_t v = m.bits[r * w + c];
      v = combine(v, c > 0 ? m.bits[r * w + c - 1] : 0);
      v = combine(v, c + 1 < w ? m.bits[r * w + c + 1] : 0);
      rows[r * w + c] = v;
    }
  }
  BinaryMask out = BinaryMask::empty(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      std::uint8_t v = rows[r * w + c];
      v = combine(v, r > 0 ? rows[(r - 1) * w + c] : 0);
      v = combine(v, r + 1 < h ? rows[(r + 1) * w + c] : 0);
      out.bits[r * w + c] = v;
    }
  }
  return out;
}

}  // namespace

BinaryMask dilate3x3(const BinaryMask& m) { return morph3x3(m, true); }
BinaryMask erode3x3(const BinaryMask& m) { return morph3x3(m, false); }

BinaryMask boundary(const BinaryMask& m) {
  const BinaryMask d = dilate3x3(m);
  const BinaryMask e = erode3x3(m);
  BinaryMask out = BinaryMask::empty(m.width, m.height);
  for (std::size_t i = 0; i < out.bits.size(); ++i) out.bits[i] = (d.bits[i] && !e.bits[i]) ? 1 : 0;
  return out;
}

double b_iou(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_size(pred.width, pred.height, gt.width, gt.height);
  const BinaryMask bp = boundary(pred);
  const BinaryMask bg = boundary(gt);
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < bp.bits.size(); ++i) {
    inter += (bp.bits[i] && bg.bits[i]);
    uni += (bp.bits[i] || bg.bits[i]);
  }
  return iou_or_one(inter, uni);
}

SquareMatrix similarity_matrix(const EmbeddingBatch& e) {
  if (e.values.size() != e.n * e.dim) throw std::invalid_argument("embedding batch has the wrong number of values");
  std::vector<double> norms(e.n);
  for (std::size_t i = 0; i < e.n; ++i) {
    double s = 0.0;
    for (std::size_t d = 0; d < e.dim; ++d) {
      const double v = e.row(i)[d];
      if (!std::isfinite(v)) throw std::invalid_argument("embedding contains a non-finite value");
      s += v * v;
    }
    norms[i] = std::sqrt(s);
    if (!(norms[i] > 0.0)) throw std::invalid_argument("embedding " + std::to_string(i) + " is the zero vector");
  }
  SquareMatrix s{e.n, std::vector<double>(e.n * e.n)};
  for (std::size_t u = 0; u < e.n; ++u) {
    s(u, u) = 1.0;
    for (std::size_t v = u + 1; v < e.n; ++v) {
      double d = 0.0;
      for (std::size_t k = 0; k < e.dim; ++k) d += e.row(u)[k] * e.row(v)[k];
      const double c = d / (norms[u] * norms[v]);
      s(u, v) = c;
      s(v, u) = c;
    }
  }
  return s;
}

SquareMatrix paired_similarity(const EmbeddingBatch& batch) {
  if (batch.n % 2 != 0) throw std::invalid_argument("paired batch needs an even number of embeddings");
  const SquareMatrix s = similarity_matrix(batch);
  const std::size_t half = batch.n / 2;
  SquareMatrix out{s.n, std::vector<double>(s.values.size())};
  for (std::size_t u = 0; u < s.n; ++u) {
    for (std::size_t v = 0; v < s.n; ++v) out(u, v) = s(u, v < half ? v + half : v - half);
  }
  return out;
}

double info_nce(const SquareMatrix& s, double tau) {
  if (s.n < 2) throw std::invalid_argument("info_nce needs at least two embeddings");
  if (!(tau > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (s.values.size() != s.n * s.n) throw std::invalid_argument("similarity matrix is not square");
  for (double v : s.values) {
    if (!std::isfinite(v)) throw std::invalid_argument("similarity matrix contains a non-finite entry");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < s.n; ++i) {
    double row_max = s(i, 0) / tau;
    for (std::size_t j = 1; j < s.n; ++j) row_max = std::max(row_max, s(i, j) / tau);
    double denom = 0.0;
    for (std::size_t j = 0; j < s.n; ++j) denom += std::exp(s(i, j) / tau - row_max);
    const double log_softmax = s(i, i) / tau - row_max - std::log(denom);
    total -= log_softmax;
  }
  return std::max(0.0, total / static_cast<double>(s.n));
}

double total_loss(const LossTerms& t) {
  if (!(t.lambda1 >= 0.0)) throw std::invalid_argument("lambda1 must be non-negative");
  return t.l_controlnet + t.lambda1 * t.l_contrastive;
}

std::vector<double> reference_embedding(const ShadeRaster& r, std::size_t grid) {
  if (grid == 0 || r.width < grid || r.height < grid) throw std::invalid_argument("raster smaller than the pool grid");
  std::vector<double> sums(grid * grid, 0.0);
  std::vector<std::size_t> counts(grid * grid, 0);
  for (std::size_t row = 0; row < r.height; ++row) {
    const std::size_t gy = row * grid / r.height;
    for (std::size_t col = 0; col < r.width; ++col) {
      const std::size_t gx = col * grid / r.width;
      sums[gy * grid + gx] += r.at(col, row);
      ++counts[gy * grid + gx];
    }
  }
  double mean = 0.0;
  for (std::size_t i = 0; i < sums.size(); ++i) {
    sums[i] /= static_cast<double>(counts[i]);
    mean += sums[i];
  }
  mean /= static_cast<double>(sums.size());
  for (auto& v : sums) v -= mean;
  return sums;
}

MetricScores evaluate_pair(const ShadeRaster& pred, const ShadeRaster& gt,
                           const std::map<std::string, PerceptualMetric>& perceptual) {
  MetricScores s;
  s.mse = mse(pred, gt);
  s.ssim = ssim(pred, gt);
  const BinaryMask mp = binarize(pred);
  const BinaryMask mg = binarize(gt);
  s.miou = miou(mp, mg);
  s.b_iou = b_iou(mp, mg);
  for (const auto& [name, fn] : perceptual) s.extra[name] = fn(pred, gt);
  return s;
}

std::string evaluate_directories(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                                 const std::map<std::string, PerceptualMetric>& perceptual) {
  namespace fs = std::filesystem;
  using nlohmann::json;
  if (!fs::is_directory(pred_dir)) throw Error("prediction directory not found: " + pred_dir.string());
  if (!fs::is_directory(gt_dir)) throw Error("ground-truth directory not found: " + gt_dir.string());

  std::vector<fs::path> names;
  for (const auto& entry : fs::directory_iterator(pred_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") names.push_back(entry.path().filename());
  }
  std::sort(names.begin(), names.end());

  json records = json::array();
  json missing = json::array();
  std::map<std::string, std::vector<double>> columns;
  for (const auto& name : names) {
    const fs::path gt_path = gt_dir / name;
    if (!fs::exists(gt_path)) {
      missing.push_back(name.string());
      continue;
    }
    const ShadeRaster pred = decode_png(read_file_bytes(pred_dir / name));
    const ShadeRaster gt = decode_png(read_file_bytes(gt_path));
    const MetricScores s = evaluate_pair(pred, gt, perceptual);
    json rec{{"record", name.stem().string()}, {"ssim", s.ssim}, {"mse", s.mse}, {"miou", s.miou}, {"b_iou", s.b_iou}};
    columns["ssim"].push_back(s.ssim);
    columns["mse"].push_back(s.mse);
    columns["miou"].push_back(s.miou);
    columns["b_iou"].push_back(s.b_iou);
    for (const auto& [k, v] : s.extra) {
      rec[k] = v;
      columns[k].push_back(v);
    }
    records.push_back(std::move(rec));
  }

  json aggregate = json::object();
  for (const auto& [metric, values] : columns) {
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    aggregate[metric] = {{"mean", mean}, {"std", std::sqrt(var / n)}, {"count", values.size()}};
  }
  json report{{"records", std::move(records)}, {"aggregate", std::move(aggregate)}, {"missing_gt", std::move(missing)}};
  return report.dump(2);
}

}  // namespace shade
