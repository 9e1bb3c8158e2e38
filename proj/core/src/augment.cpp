#include "odepth/augment.hpp"

#include <algorithm>
#include <cmath>

namespace odepth {

void validate(const AugmentConfig& cfg) {
  if (!(cfg.scale_lo > 0.0 && cfg.scale_lo <= cfg.scale_hi)) {
    throw InvalidArgument("augment: need 0 < scale_lo <= scale_hi");
  }
  if (!(cfg.flip_prob >= 0.0 && cfg.flip_prob <= 1.0)) throw InvalidArgument("augment: flip_prob must be in [0,1]");
}

DepthMap flip_horizontal(const DepthMap& map) {
  DepthMap out(map.width(), map.height(), map.role());
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      const int sx = map.width() - 1 - x;
      out.at(x, y) = map.at(sx, y);
      out.set_valid(x, y, map.valid(sx, y));
    }
  }
  return out;
}

Image flip_horizontal(const Image& image) {
  Image out(image.width(), image.height(), image.channels());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < image.channels(); ++c) out.at(x, y, c) = image.at(image.width() - 1 - x, y, c);
    }
  }
  return out;
}

std::pair<Image, DepthMap> scale_pair(const Image& image, const DepthMap& map, double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("scale_pair: scale must be > 0");
  if (image.width() != map.width() || image.height() != map.height()) {
    throw InvalidArgument("scale_pair: image and depth map are not aligned");
  }
  if (scale == 1.0) return {image, map};
  const int w = std::max(1, static_cast<int>(std::lround(image.width() * scale)));
  const int h = std::max(1, static_cast<int>(std::lround(image.height() * scale)));
  Image scaled_image = resize_bilinear(image, w, h);
  DepthMap scaled_map = resize_nearest(map, w, h);
  const double factor = map.role() == DepthRole::kDepth ? 1.0 / scale : scale;
  for (double& v : scaled_map.values()) v *= factor;
  return {std::move(scaled_image), std::move(scaled_map)};
}

AugmentDraw draw_augment(const AugmentConfig& cfg, std::mt19937_64& rng) {
  validate(cfg);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u_scale = unit(rng);
  const double u_flip = unit(rng);
  AugmentDraw d;
  d.scale = cfg.scale_lo == cfg.scale_hi ? cfg.scale_lo : cfg.scale_lo + (cfg.scale_hi - cfg.scale_lo) * u_scale;
  d.flip = u_flip < cfg.flip_prob;
  return d;
}

std::pair<Image, DepthMap> apply_augment(const Image& image, const DepthMap& map, const AugmentDraw& draw) {
  auto [img, dm] = scale_pair(image, map, draw.scale);
  if (draw.flip) {
    img = flip_horizontal(img);
    dm = flip_horizontal(dm);
  }
  return {std::move(img), std::move(dm)};
}

std::pair<Image, DepthMap> augment(const Image& image, const DepthMap& map, const AugmentConfig& cfg,
                                   std::mt19937_64& rng) {
  return apply_augment(image, map, draw_augment(cfg, rng));
}

}  // namespace odepth
