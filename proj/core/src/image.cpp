#include "odepth/image.hpp"

#include <algorithm>
#include <cmath>

namespace odepth {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || (channels != 1 && channels != 3)) {
    throw InvalidArgument("Image: bad dimensions or channel count");
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

DepthMap::DepthMap(int width, int height, DepthRole role, double fill)
    : width_(width), height_(height), role_(role) {
  if (width < 0 || height < 0) throw InvalidArgument("DepthMap: negative dimensions");
  values_.assign(static_cast<std::size_t>(width) * height, fill);
  mask_.assign(values_.size(), 1);
}

std::size_t DepthMap::valid_count() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

DepthMap disparity_to_depth(const DepthMap& disparity, double focal_baseline) {
  if (!(focal_baseline > 0.0)) throw InvalidArgument("disparity_to_depth: focal_baseline must be > 0");
  DepthMap depth(disparity.width(), disparity.height(), DepthRole::kDepth);
  for (int y = 0; y < disparity.height(); ++y) {
    for (int x = 0; x < disparity.width(); ++x) {
      const double d = disparity.at(x, y);
      if (disparity.valid(x, y) && d > 0.0 && std::isfinite(d)) {
        depth.set(x, y, focal_baseline / d);
      } else {
        depth.at(x, y) = 0.0;
        depth.invalidate(x, y);
      }
    }
  }
  return depth;
}

namespace {

// Source coordinate for destination index i under half-pixel alignment.
double source_coord(int i, int src_len, int dst_len) {
  return (i + 0.5) * static_cast<double>(src_len) / dst_len - 0.5;
}

}  // namespace

DepthMap resize_nearest(const DepthMap& map, int width, int height) {
  if (width <= 0 || height <= 0) throw InvalidArgument("resize_nearest: target must be positive");
  DepthMap out(width, height, map.role());
  for (int y = 0; y < height; ++y) {
    const int sy = std::clamp(static_cast<int>(std::floor((y + 0.5) * map.height() / height)), 0,
                              map.height() - 1);
    for (int x = 0; x < width; ++x) {
      const int sx = std::clamp(static_cast<int>(std::floor((x + 0.5) * map.width() / width)), 0,
                                map.width() - 1);
      out.at(x, y) = map.at(sx, sy);
      out.set_valid(x, y, map.valid(sx, sy));
    }
  }
  return out;
}

Image resize_bilinear(const Image& image, int width, int height) {
  if (width <= 0 || height <= 0) throw InvalidArgument("resize_bilinear: target must be positive");
  Image out(width, height, image.channels());
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp(source_coord(y, image.height(), height), 0.0, image.height() - 1.0);
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp(source_coord(x, image.width(), width), 0.0, image.width() - 1.0);
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, image.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < image.channels(); ++c) {
        const double top = (1.0 - wx) * image.at(x0, y0, c) + wx * image.at(x1, y0, c);
        const double bot = (1.0 - wx) * image.at(x0, y1, c) + wx * image.at(x1, y1, c);
        out.at(x, y, c) = (1.0 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

}  // namespace odepth
