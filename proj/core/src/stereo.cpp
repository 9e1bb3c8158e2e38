#include "odepth/stereo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace odepth {

CostVolume::CostVolume(int width, int height, int levels, double fill)
    : width_(width), height_(height), levels_(levels) {
  if (width < 0 || height < 0 || levels < 1) throw InvalidArgument("CostVolume: bad dimensions");
  costs_.assign(static_cast<std::size_t>(width) * height * levels, fill);
}

std::vector<Direction> all_directions() {
  return {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1}};
}

std::vector<Direction> horizontal_directions() { return {{1, 0}, {-1, 0}}; }

SgmParams SgmParams::defaults(int channels) {
  SgmParams p;
  p.p1 = 0.03 * channels;
  p.p2 = 0.24 * channels;
  return p;
}

namespace {

int canonical_rank(Direction d) {
  const auto all = all_directions();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i] == d) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

void validate(const SgmParams& params) {
  if (!(params.p1 >= 0.0) || !(params.p2 >= params.p1) || !std::isfinite(params.p2)) {
    throw InvalidArgument("SgmParams: need P2 >= P1 >= 0");
  }
  if (params.directions.empty()) throw InvalidArgument("SgmParams: at least one direction is required");
  for (const Direction& d : params.directions) {
    if (canonical_rank(d) < 0) throw InvalidArgument("SgmParams: direction is not one of the 8 compass directions");
  }
}

void validate(const BilSubParams& params) {
  if (!(params.spatial_sigma > 0.0) || !(params.range_sigma > 0.0)) {
    throw InvalidArgument("BilSub: sigmas must be > 0");
  }
  if (params.radius < 1) throw InvalidArgument("BilSub: radius must be >= 1");
}

Image bilsub(const Image& image, const BilSubParams& params) {
  validate(params);
  const int w = image.width();
  const int h = image.height();
  const int ch = image.channels();
  const int r = params.radius;
  const double inv_2ss = 1.0 / (2.0 * params.spatial_sigma * params.spatial_sigma);
  const double inv_2sr = 1.0 / (2.0 * params.range_sigma * params.range_sigma);

  std::vector<double> spatial(static_cast<std::size_t>(2 * r + 1) * (2 * r + 1));
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      spatial[static_cast<std::size_t>(dy + r) * (2 * r + 1) + (dx + r)] = std::exp(-(dx * dx + dy * dy) * inv_2ss);
    }
  }

  Image out(w, h, ch);
  std::vector<double> acc(ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::fill(acc.begin(), acc.end(), 0.0);
      double norm = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= w) continue;
          double dist2 = 0.0;
          for (int c = 0; c < ch; ++c) {
            const double diff = image.at(xx, yy, c) - image.at(x, y, c);
            dist2 += diff * diff;
          }
          const double wgt = spatial[static_cast<std::size_t>(dy + r) * (2 * r + 1) + (dx + r)] * std::exp(-dist2 * inv_2sr);
          norm += wgt;
          for (int c = 0; c < ch; ++c) acc[c] += wgt * image.at(xx, yy, c);
        }
      }
      for (int c = 0; c < ch; ++c) {
        const double background = acc[c] / norm;
        out.at(x, y, c) = std::clamp(0.5 + image.at(x, y, c) - background, 0.0, 1.0);
      }
    }
  }
  return out;
}

CostVolume ad_cost(const Image& left, const Image& right, int levels) {
  if (!left.same_shape(right)) throw InvalidArgument("ad_cost: left and right images differ in shape");
  if (levels < 1) throw InvalidArgument("ad_cost: levels must be >= 1");
  const int ch = left.channels();
  const double border = static_cast<double>(ch);
  CostVolume cv(left.width(), left.height(), levels);
  for (int y = 0; y < left.height(); ++y) {
    for (int x = 0; x < left.width(); ++x) {
      for (int d = 0; d < levels; ++d) {
        if (x - d < 0) {
          cv.at(x, y, d) = border;
          continue;
        }
        double sum = 0.0;
        for (int c = 0; c < ch; ++c) sum += std::abs(left.at(x, y, c) - right.at(x - d, y, c));
        cv.at(x, y, d) = sum;
      }
    }
  }
  return cv;
}

CostVolume sgm_path_cost(const CostVolume& cv, Direction dir, double p1, double p2) {
  const int w = cv.width();
  const int h = cv.height();
  const int levels = cv.levels();
  CostVolume path(w, h, levels);

  const int y_begin = dir.dy < 0 ? h - 1 : 0;
  const int y_end = dir.dy < 0 ? -1 : h;
  const int y_step = dir.dy < 0 ? -1 : 1;
  const int x_begin = dir.dx < 0 ? w - 1 : 0;
  const int x_end = dir.dx < 0 ? -1 : w;
  const int x_step = dir.dx < 0 ? -1 : 1;

  for (int y = y_begin; y != y_end; y += y_step) {
    for (int x = x_begin; x != x_end; x += x_step) {
      const auto cost = cv.pixel(x, y);
      auto out = path.pixel(x, y);
      const int px = x - dir.dx;
      const int py = y - dir.dy;
      if (px < 0 || px >= w || py < 0 || py >= h) {
        std::copy(cost.begin(), cost.end(), out.begin());
        continue;
      }
      const auto prev = path.pixel(px, py);
      const double prev_min = *std::min_element(prev.begin(), prev.end());
      for (int d = 0; d < levels; ++d) {
        double best = std::min(prev[d], prev_min + p2);
        if (d > 0) best = std::min(best, prev[d - 1] + p1);
        if (d + 1 < levels) best = std::min(best, prev[d + 1] + p1);
        out[d] = cost[d] + (best - prev_min);
      }
    }
  }
  return path;
}

namespace {

// Pairwise summation over the direction list: equal path volumes then add up
// to exactly |directions| times the cost when both penalties are zero.
CostVolume sum_paths(const CostVolume& cv, const std::vector<Direction>& dirs, std::size_t lo, std::size_t hi,
                     const SgmParams& params) {
  if (hi - lo == 1) return sgm_path_cost(cv, dirs[lo], params.p1, params.p2);
  const std::size_t mid = lo + (hi - lo) / 2;
  CostVolume total = sum_paths(cv, dirs, lo, mid, params);
  const CostVolume rest = sum_paths(cv, dirs, mid, hi, params);
  auto dst = total.costs();
  auto src = rest.costs();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  return total;
}

}  // namespace

CostVolume sgm_aggregate(const CostVolume& cv, const SgmParams& params) {
  validate(params);
  for (double c : cv.costs()) {
    if (!std::isfinite(c)) throw InvalidArgument("sgm_aggregate: cost volume contains non-finite values");
  }
  std::vector<Direction> dirs = params.directions;
  std::stable_sort(dirs.begin(), dirs.end(),
                   [](Direction a, Direction b) { return canonical_rank(a) < canonical_rank(b); });
  return sum_paths(cv, dirs, 0, dirs.size(), params);
}

DepthMap winner_takes_all(const CostVolume& cv) {
  DepthMap out(cv.width(), cv.height(), DepthRole::kDisparity);
  for (int y = 0; y < cv.height(); ++y) {
    for (int x = 0; x < cv.width(); ++x) {
      const auto c = cv.pixel(x, y);
      // min_element returns the first minimum, i.e. the smallest disparity.
      out.at(x, y) = static_cast<double>(std::min_element(c.begin(), c.end()) - c.begin());
    }
  }
  return out;
}

double energy(const DepthMap& disparity, const CostVolume& cv, const SgmParams& params) {
  if (disparity.width() != cv.width() || disparity.height() != cv.height()) {
    throw InvalidArgument("energy: disparity map and cost volume are not aligned");
  }
  const int w = cv.width();
  const int h = cv.height();
  std::vector<int> labels(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = disparity.at(x, y);
      if (!(v >= 0.0 && v < cv.levels()) || v != std::floor(v)) {
        throw InvalidArgument("energy: disparity " + std::to_string(v) + " is not a level of the cost volume");
      }
      labels[static_cast<std::size_t>(y) * w + x] = static_cast<int>(v);
    }
  }
  double e = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int dp = labels[static_cast<std::size_t>(y) * w + x];
      e += cv.at(x, y, dp);
      for (int ny = y - 1; ny <= y + 1; ++ny) {
        for (int nx = x - 1; nx <= x + 1; ++nx) {
          if ((nx == x && ny == y) || nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const int jump = std::abs(dp - labels[static_cast<std::size_t>(ny) * w + nx]);
          if (jump == 1) {
            e += params.p1;
          } else if (jump > 1) {
            e += params.p2;
          }
        }
      }
    }
  }
  return e;
}

DepthMap median_filter(const DepthMap& map, int radius) {
  if (radius < 1) throw InvalidArgument("median_filter: radius must be >= 1");
  const int window = (2 * radius + 1) * (2 * radius + 1);
  DepthMap out(map.width(), map.height(), map.role());
  std::vector<double> samples;
  samples.reserve(window);
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      samples.clear();
      for (int yy = y - radius; yy <= y + radius; ++yy) {
        for (int xx = x - radius; xx <= x + radius; ++xx) {
          if (xx < 0 || yy < 0 || xx >= map.width() || yy >= map.height() || !map.valid(xx, yy)) continue;
          samples.push_back(map.at(xx, yy));
        }
      }
      const bool keep = map.valid(x, y) ? !samples.empty() : 2 * static_cast<int>(samples.size()) >= window;
      if (!keep) {
        out.at(x, y) = map.at(x, y);
        out.invalidate(x, y);
        continue;
      }
      auto mid = samples.begin() + static_cast<std::ptrdiff_t>((samples.size() - 1) / 2);
      std::nth_element(samples.begin(), mid, samples.end());
      out.set(x, y, *mid);
    }
  }
  return out;
}

void validate(const StereoConfig& cfg) {
  if (cfg.levels < 1) throw InvalidArgument("stereo: levels must be >= 1");
  if (cfg.use_bilsub) validate(cfg.bilsub);
  validate(cfg.sgm);
  if (cfg.median_radius < 0) throw InvalidArgument("stereo: median_radius must be >= 0");
}

DepthMap compute_disparity(const Image& left, const Image& right, const StereoConfig& cfg) {
  validate(cfg);
  CostVolume cv = cfg.use_bilsub ? ad_cost(bilsub(left, cfg.bilsub), bilsub(right, cfg.bilsub), cfg.levels)
                                 : ad_cost(left, right, cfg.levels);
  DepthMap disparity = winner_takes_all(sgm_aggregate(cv, cfg.sgm));
  if (cfg.median_radius > 0) disparity = median_filter(disparity, cfg.median_radius);
  return disparity;
}

}  // namespace odepth
