#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "shade/raster.hpp"

namespace shade {

/// Row-major boolean mask; `bits` holds 0 or 1.
struct BinaryMask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> bits;

  static BinaryMask empty(std::size_t width, std::size_t height) {
    return {width, height, std::vector<std::uint8_t>(width * height, 0)};
  }
  bool at(std::size_t col, std::size_t row) const { return bits[row * width + col] != 0; }
  std::size_t count() const;
  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// Gray rasters are shade where value > threshold. Ground truth (0/255) is unaffected by the choice.
constexpr std::uint8_t kDefaultBinarizeThreshold = 127;
BinaryMask binarize(const ShadeRaster& r, std::uint8_t threshold = kDefaultBinarizeThreshold);

/// Mean squared difference on the 0-255 scale.
double mse(const ShadeRaster& a, const ShadeRaster& b);

struct SsimParams {
  std::size_t window = 11;
  double sigma = 1.5;
  double dynamic_range = 255.0;
};

/// Gaussian-windowed SSIM averaged over every window position fully inside the image.
double ssim(const ShadeRaster& a, const ShadeRaster& b, const SsimParams& params = {});

/// Mean IoU over {shade, background}. A class absent from both masks scores 1.
double miou(const BinaryMask& pred, const BinaryMask& gt);

/// dilate(m, 3x3) minus erode(m, 3x3), with everything outside the image treated as background.
BinaryMask boundary(const BinaryMask& m);
BinaryMask dilate3x3(const BinaryMask& m);
BinaryMask erode3x3(const BinaryMask& m);

/// IoU of the two boundary sets. Two empty boundaries score 1, exactly one empty scores 0.
double b_iou(const BinaryMask& pred, const BinaryMask& gt);

/// n vectors of `dim` reals, stored row-major.
struct EmbeddingBatch {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> values;

  const double* row(std::size_t i) const { return values.data() + i * dim; }
};

struct SquareMatrix {
  std::size_t n = 0;
  std::vector<double> values;

  double operator()(std::size_t r, std::size_t c) const { return values[r * n + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values[r * n + c]; }
};

/// Pairwise cosine similarity. Throws std::invalid_argument for a zero vector or NaN.
SquareMatrix similarity_matrix(const EmbeddingBatch& e);

constexpr double kDefaultTemperature = 0.1;

/// InfoNCE where row i's positive sits on the diagonal. Uses log-sum-exp with
/// the row maximum subtracted.
double info_nce(const SquareMatrix& s, double tau = kDefaultTemperature);

/// Paired batch layout: for B pairs, anchors occupy rows [0, B) and their
/// positives rows [B, 2B) in the same order. Returns the similarity matrix with
/// its two column halves swapped, so entry (u, u) is the similarity between
/// item u and its partner and info_nce can read positives off the diagonal.
/// Throws std::invalid_argument when n is odd.
SquareMatrix paired_similarity(const EmbeddingBatch& batch);

struct LossTerms {
  double l_controlnet = 0.0;
  double l_contrastive = 0.0;
  double lambda1 = 0.1;
};

double total_loss(const LossTerms& t);

/// Non-neural stand-in embedder: grid x grid average pool, flattened, mean-centred.
std::vector<double> reference_embedding(const ShadeRaster& r, std::size_t grid = 16);

/// External perceptual metric (for example LPIPS) supplied by the caller.
using PerceptualMetric = std::function<double(const ShadeRaster& pred, const ShadeRaster& gt)>;

struct MetricScores {
  double ssim = 0.0;
  double mse = 0.0;
  double miou = 0.0;
  double b_iou = 0.0;
  std::map<std::string, double> extra;
};

MetricScores evaluate_pair(const ShadeRaster& pred, const ShadeRaster& gt,
                           const std::map<std::string, PerceptualMetric>& perceptual = {});

/// Scores every PNG in `pred_dir` against the same-named PNG in `gt_dir` and
/// returns the JSON report with per-record scores and mean/std aggregates.
std::string evaluate_directories(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                                 const std::map<std::string, PerceptualMetric>& perceptual = {});

}  // namespace shade
