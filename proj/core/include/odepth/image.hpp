#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace odepth {

/// Unit-normalized intensity image, row-major, channels interleaved.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const { return data_.empty(); }

  double& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  double at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// What a DepthMap's values mean. Disparity is in pixels (larger = closer),
/// depth is metric (smaller = closer).
enum class DepthRole { kDepth, kDisparity };

/// Per-pixel depth or disparity with a validity mask.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, DepthRole role, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  DepthRole role() const { return role_; }
  void set_role(DepthRole role) { role_ = role; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  double& at(int x, int y) { return values_[index(x, y)]; }
  double at(int x, int y) const { return values_[index(x, y)]; }
  bool valid(int x, int y) const { return mask_[index(x, y)] != 0; }
  void set_valid(int x, int y, bool v) { mask_[index(x, y)] = v ? 1 : 0; }
  void set(int x, int y, double value) {
    values_[index(x, y)] = value;
    mask_[index(x, y)] = 1;
  }
  void invalidate(int x, int y) { mask_[index(x, y)] = 0; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<std::uint8_t> mask() { return mask_; }
  std::span<const std::uint8_t> mask() const { return mask_; }

  std::size_t valid_count() const;

  friend bool operator==(const DepthMap&, const DepthMap&) = default;

 private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  DepthRole role_ = DepthRole::kDepth;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
};

/// Raised when a caller violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Metric depth from disparity: depth = focal_baseline / disparity. Pixels with
/// non-positive or invalid disparity are invalid in the result.
DepthMap disparity_to_depth(const DepthMap& disparity, double focal_baseline);

/// Nearest-neighbour resize of a depth map (mask travels with values).
DepthMap resize_nearest(const DepthMap& map, int width, int height);

/// Bilinear resize with half-pixel centres and edge clamping.
Image resize_bilinear(const Image& image, int width, int height);

}  // namespace odepth
