#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "odepth/image.hpp"

namespace odepth {

/// Matching costs indexed by (pixel, disparity level), level fastest.
class CostVolume {
 public:
  CostVolume() = default;
  CostVolume(int width, int height, int levels, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int levels() const { return levels_; }

  double& at(int x, int y, int d) { return costs_[index(x, y) + d]; }
  double at(int x, int y, int d) const { return costs_[index(x, y) + d]; }
  std::span<double> pixel(int x, int y) { return {costs_.data() + index(x, y), static_cast<std::size_t>(levels_)}; }
  std::span<const double> pixel(int x, int y) const {
    return {costs_.data() + index(x, y), static_cast<std::size_t>(levels_)};
  }

  std::span<double> costs() { return costs_; }
  std::span<const double> costs() const { return costs_; }

  bool same_shape(const CostVolume& o) const {
    return width_ == o.width_ && height_ == o.height_ && levels_ == o.levels_;
  }

  friend bool operator==(const CostVolume&, const CostVolume&) = default;

 private:
  std::size_t index(int x, int y) const { return (static_cast<std::size_t>(y) * width_ + x) * levels_; }

  int width_ = 0;
  int height_ = 0;
  int levels_ = 0;
  std::vector<double> costs_;
};

/// Path direction r; the predecessor of p along the path is p - r.
struct Direction {
  int dx = 0;
  int dy = 0;
  friend bool operator==(const Direction&, const Direction&) = default;
};

/// The eight compass directions in canonical order.
std::vector<Direction> all_directions();
/// Left-to-right and right-to-left only.
std::vector<Direction> horizontal_directions();

struct SgmParams {
  double p1 = 0.09;
  double p2 = 0.72;
  std::vector<Direction> directions = all_directions();

  /// Defaults scaled to the number of colour channels summed by ad_cost.
  static SgmParams defaults(int channels);
};

void validate(const SgmParams& params);

struct BilSubParams {
  double spatial_sigma = 3.0;
  double range_sigma = 0.2;
  int radius = 5;
};

void validate(const BilSubParams& params);

/// Background subtraction by bilateral filtering. Result is
/// clamp(0.5 + I - bilateral(I), 0, 1) per channel; range weights use the
/// Euclidean colour distance.
Image bilsub(const Image& image, const BilSubParams& params);

/// Absolute-difference cost summed over channels. When p - d leaves the image
/// the cost is `channels` (the largest possible sum).
CostVolume ad_cost(const Image& left, const Image& right, int levels);

/// Semi-global aggregation: sum over directions of the normalised 1-D path
/// costs. Path starts take L = C. Directions are summed in canonical order, so
/// the result does not depend on the order they are listed in `params`.
CostVolume sgm_aggregate(const CostVolume& cv, const SgmParams& params);

/// Single-direction path cost volume, exposed for tests.
CostVolume sgm_path_cost(const CostVolume& cv, Direction dir, double p1, double p2);

/// Per-pixel argmin; ties go to the smaller disparity.
DepthMap winner_takes_all(const CostVolume& cv);

/// Global 2-D energy of a disparity labelling under 8-neighbourhood
/// smoothness. Each unordered neighbour pair is visited from both ends, so a
/// jump between two pixels is charged twice.
double energy(const DepthMap& disparity, const CostVolume& cv, const SgmParams& params);

/// Median over valid neighbours in a (2r+1)^2 window. Invalid pixels are
/// filled when at least half the window is valid. Even counts take the lower
/// median.
DepthMap median_filter(const DepthMap& map, int radius);

struct StereoConfig {
  int levels = 16;
  bool use_bilsub = true;
  BilSubParams bilsub;
  SgmParams sgm = SgmParams::defaults(3);
  int median_radius = 1;  ///< 0 disables the median pass
};

void validate(const StereoConfig& cfg);

/// Full pipeline: optional BilSub, AD cost, SGM, WTA, optional median.
DepthMap compute_disparity(const Image& left, const Image& right, const StereoConfig& cfg);

}  // namespace odepth
