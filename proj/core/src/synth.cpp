#include "odepth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace odepth {

void validate(const SynthSceneSpec& spec) {
  if (spec.width < 1 || spec.height < 1) throw InvalidArgument("synth: width and height must be >= 1");
  if (spec.channels != 1 && spec.channels != 3) throw InvalidArgument("synth: channels must be 1 or 3");
  if (spec.layer_disparities.empty()) throw InvalidArgument("synth: at least one layer is required");
  if (spec.search_range < 1) throw InvalidArgument("synth: search_range must be >= 1");
  for (int d : spec.layer_disparities) {
    if (d < 0 || d >= spec.search_range) throw InvalidArgument("synth: layer disparity outside [0, search_range)");
  }
  if (!(spec.texture_density > 0.0 && spec.texture_density <= 1.0)) {
    throw InvalidArgument("synth: texture_density must be in (0,1]");
  }
}

std::array<double, 3> layer_tint(int disparity, int search_range) {
  const double t = search_range > 1 ? static_cast<double>(disparity) / (search_range - 1) : 0.0;
  return {0.15 + 0.7 * t, 0.5, 0.85 - 0.7 * t};
}

namespace {

double quantize(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

struct Layer {
  int disparity = 0;
  bool full_frame = false;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open rectangle in left-image coordinates
  int tex_width = 0;
  std::vector<double> texture;  // tex_width x height x channels

  bool covers(int x, int y) const {
    if (full_frame) return x >= 0 && x < tex_width;
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
};

}  // namespace

Stereogram generate_stereogram(const SynthSceneSpec& spec) {
  validate(spec);
  const int w = spec.width;
  const int h = spec.height;
  const int ch = spec.channels;
  const int tex_width = w + spec.search_range;

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Layer> layers(spec.layer_disparities.size());
  for (std::size_t k = 0; k < layers.size(); ++k) {
    Layer& layer = layers[k];
    layer.disparity = spec.layer_disparities[k];
    layer.tex_width = tex_width;
    layer.full_frame = (k == 0);
    if (!layer.full_frame) {
      const int rw = std::max(1, static_cast<int>(std::lround(w * (0.3 + 0.3 * unit(rng)))));
      const int rh = std::max(1, static_cast<int>(std::lround(h * (0.3 + 0.3 * unit(rng)))));
      layer.x0 = static_cast<int>(std::floor(unit(rng) * (w - rw + 1)));
      layer.y0 = static_cast<int>(std::floor(unit(rng) * (h - rh + 1)));
      layer.x1 = layer.x0 + rw;
      layer.y1 = layer.y0 + rh;
    }
  }
  for (Layer& layer : layers) {
    const auto tint = layer_tint(layer.disparity, spec.search_range);
    layer.texture.resize(static_cast<std::size_t>(tex_width) * h * ch);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < tex_width; ++x) {
        const bool dot = unit(rng) < spec.texture_density;
        for (int c = 0; c < ch; ++c) {
          const double base = ch == 1 ? tint[0] : tint[c];
          const double v = dot ? base + 0.6 * (unit(rng) - 0.5) : base;
          layer.texture[(static_cast<std::size_t>(y) * tex_width + x) * ch + c] = quantize(v);
        }
      }
    }
  }

  // Painter's order: ascending disparity, stable on layer index.
  std::vector<std::size_t> order(layers.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return layers[a].disparity < layers[b].disparity; });

  auto top_left = [&](int x, int y) {
    std::size_t top = order.front();
    for (std::size_t k : order) {
      if (layers[k].covers(x, y)) top = k;
    }
    return top;
  };
  // The right image sees layer k at x' where the left image sees it at x' + d_k.
  auto top_right = [&](int xr, int y) {
    std::size_t top = order.front();
    for (std::size_t k : order) {
      if (layers[k].covers(xr + layers[k].disparity, y)) top = k;
    }
    return top;
  };
  auto texel = [&](const Layer& layer, int x, int y, int c) {
    return layer.texture[(static_cast<std::size_t>(y) * tex_width + x) * ch + c];
  };

  Stereogram out{Image(w, h, ch), Image(w, h, ch), DepthMap(w, h, DepthRole::kDisparity)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Layer& lt = layers[top_left(x, y)];
      for (int c = 0; c < ch; ++c) out.left.at(x, y, c) = texel(lt, x, y, c);

      const Layer& rt = layers[top_right(x, y)];
      for (int c = 0; c < ch; ++c) out.right.at(x, y, c) = texel(rt, x + rt.disparity, y, c);
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t k = top_left(x, y);
      const int d = layers[k].disparity;
      out.disparity.at(x, y) = d;
      const bool visible = x - d >= 0 && top_right(x - d, y) == k;
      out.disparity.set_valid(x, y, visible);
    }
  }
  return out;
}

}  // namespace odepth
