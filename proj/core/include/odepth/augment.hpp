#pragma once

#include <random>
#include <utility>

#include "odepth/image.hpp"

namespace odepth {

struct AugmentConfig {
  double scale_lo = 1.0;
  double scale_hi = 1.0;
  double flip_prob = 0.0;
};

void validate(const AugmentConfig& cfg);

DepthMap flip_horizontal(const DepthMap& map);
Image flip_horizontal(const Image& image);

/// Resizes image (bilinear) and map (nearest) by `scale`. Metric depth is
/// divided by the scale, disparity multiplied, so nearer-looking content gets
/// nearer values.
std::pair<Image, DepthMap> scale_pair(const Image& image, const DepthMap& map, double scale);

/// One augmentation decision, separated from its application so callers can
/// move other annotations (e.g. pair coordinates) the same way.
struct AugmentDraw {
  double scale = 1.0;
  bool flip = false;
};

/// Draws exactly two numbers from `rng`: the scale, then the flip.
AugmentDraw draw_augment(const AugmentConfig& cfg, std::mt19937_64& rng);
std::pair<Image, DepthMap> apply_augment(const Image& image, const DepthMap& map, const AugmentDraw& draw);

/// Random scale in [scale_lo, scale_hi] followed by a horizontal flip with
/// probability flip_prob. Draws exactly two numbers from `rng`.
std::pair<Image, DepthMap> augment(const Image& image, const DepthMap& map, const AugmentConfig& cfg,
                                   std::mt19937_64& rng);

}  // namespace odepth
