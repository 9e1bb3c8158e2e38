#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "odepth/binning.hpp"
#include "odepth/image.hpp"
#include "odepth/ordinal.hpp"

namespace odepth {

/// Network output for one image in channel-major (C, H, W) layout. One channel
/// in ranking/regression mode, B logits per pixel in classification mode.
struct ScoreMap {
  int channels = 1;
  int height = 0;
  int width = 0;
  std::vector<double> values;

  ScoreMap() = default;
  ScoreMap(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), values(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  double& at(int c, int y, int x) { return values[c * plane() + static_cast<std::size_t>(y) * width + x]; }
  double at(int c, int y, int x) const { return values[c * plane() + static_cast<std::size_t>(y) * width + x]; }
};

struct LossResult {
  double value = 0.0;
  std::vector<double> gradient;  ///< same layout as the scored input
};

enum class PairReduction { kSum, kMean };

/// Pairwise ranking loss over a scalar score map. z is "closeness": a pair
/// with r = +1 is pushed towards z_i > z_j. The raw sum is the default.
LossResult ranking_loss(const ScoreMap& z, std::span<const OrdinalPair> pairs,
                        PairReduction reduction = PairReduction::kSum);

/// Per-pixel depth labels in [1..B] with a validity mask.
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<int> labels;
  std::vector<std::uint8_t> mask;
};

/// Information-gain multinomial logistic loss averaged over valid pixels.
LossResult infogain_loss(const ScoreMap& logits, const LabelMap& labels, const InfoGainMatrix& h);

/// Max-shifted softmax.
std::vector<double> softmax(std::span<const double> logits);

/// Mean squared error over valid target pixels. The target map's values must
/// already be in the regression space (the trainer uses log depth).
LossResult l2_regression_loss(const ScoreMap& pred, const DepthMap& target);

/// log(1 + exp(m)) without overflow.
double softplus(double m);

}  // namespace odepth
