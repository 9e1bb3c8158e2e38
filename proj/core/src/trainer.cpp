#include "odepth/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <random>

namespace odepth {

double TrainSchedule::lr_at(int iteration) const {
  double lr = learning_rate;
  for (int at : decay_at) {
    if (iteration >= at) lr *= decay_factor;
  }
  return lr;
}

void validate(const TrainSchedule& s) {
  if (s.batch_size < 1) throw InvalidArgument("schedule: batch_size must be >= 1");
  if (!(s.learning_rate >= 0.0)) throw InvalidArgument("schedule: learning_rate must be >= 0");
  if (s.iterations < 0) throw InvalidArgument("schedule: iterations must be >= 0");
  for (std::size_t i = 0; i < s.decay_at.size(); ++i) {
    if (s.decay_at[i] < 0 || s.decay_at[i] >= std::max(s.iterations, 1) || (i > 0 && s.decay_at[i] <= s.decay_at[i - 1])) {
      throw InvalidArgument("schedule: decay iterations must be strictly increasing and below the total");
    }
  }
  if (!(s.decay_factor > 0.0)) throw InvalidArgument("schedule: decay_factor must be > 0");
  if (!(s.momentum >= 0.0 && s.momentum < 1.0)) throw InvalidArgument("schedule: momentum must be in [0,1)");
  if (!(s.weight_decay >= 0.0)) throw InvalidArgument("schedule: weight_decay must be >= 0");
}

namespace {

// Per-visit randomness derives from (seed, global sample index) only, so a
// resumed run replays exactly the draws an uninterrupted run would make.
std::mt19937_64 visit_rng(std::uint64_t seed, std::uint64_t visit, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(visit), static_cast<std::uint32_t>(visit >> 32),
                    static_cast<std::uint32_t>(salt)};
  return std::mt19937_64(seq);
}

class SampleOrder {
 public:
  SampleOrder(std::size_t count, std::uint64_t seed) : count_(count), seed_(seed) {}

  std::size_t at(std::uint64_t visit) {
    const std::uint64_t epoch = visit / count_;
    if (epoch != epoch_ || perm_.empty()) {
      perm_.resize(count_);
      std::iota(perm_.begin(), perm_.end(), std::size_t{0});
      auto rng = visit_rng(seed_, epoch, 0x5eed);
      std::shuffle(perm_.begin(), perm_.end(), rng);
      epoch_ = epoch;
    }
    return perm_[visit % count_];
  }

 private:
  std::size_t count_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
  std::vector<std::size_t> perm_;
};

Image crop_image(const Image& image, int w, int h) {
  if (image.width() == w && image.height() == h) return image;
  Image out(w, h, image.channels());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < image.channels(); ++c) out.at(x, y, c) = image.at(x, y, c);
    }
  }
  return out;
}

DepthMap crop_map(const DepthMap& map, int w, int h) {
  if (map.width() == w && map.height() == h) return map;
  DepthMap out(w, h, map.role());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.at(x, y) = map.at(x, y);
      out.set_valid(x, y, map.valid(x, y));
    }
  }
  return out;
}

// Crops both to the largest multiple of the network stride.
void crop_to_stride(Image& image, DepthMap& map, int stride) {
  const int w = image.width() / stride * stride;
  const int h = image.height() / stride * stride;
  if (w < stride || h < stride) throw InvalidArgument("training image is smaller than the network stride");
  image = crop_image(image, w, h);
  map = crop_map(map, w, h);
}

PixelCoord transform(PixelCoord p, int src_w, int src_h, int dst_w, int dst_h, bool flip) {
  PixelCoord q;
  q.row = std::clamp(static_cast<int>(std::floor((p.row + 0.5) * dst_h / src_h)), 0, dst_h - 1);
  q.col = std::clamp(static_cast<int>(std::floor((p.col + 0.5) * dst_w / src_w)), 0, dst_w - 1);
  if (flip) q.col = dst_w - 1 - q.col;
  return q;
}

void sgd_step(Network& net, const TrainSchedule& s, double lr) {
  for (Parameter* p : net.parameters()) {
    auto& w = p->value.values;
    auto& g = p->grad.values;
    auto& v = p->velocity.values;
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = s.momentum * v[i] + g[i] + s.weight_decay * w[i];
      w[i] -= lr * v[i];
    }
  }
}

// Runs forward/backward for one visit and returns the sample loss, or nothing
// when the sample carries no supervision.
using VisitFn = std::function<std::optional<double>(Network&, std::size_t sample, std::mt19937_64& rng, double grad_scale)>;
using CalibrationFn = std::function<Tensor(std::size_t sample)>;

std::vector<LogEntry> train_loop(Network& net, std::size_t sample_count, const TrainOptions& opt,
                                 const CalibrationFn& calibration_input, const VisitFn& visit) {
  validate(opt.schedule);
  validate(opt.augment);
  if (sample_count == 0) throw InvalidArgument("training dataset is empty");
  if (opt.start_iteration < 0) throw InvalidArgument("start_iteration must be >= 0");

  const TrainSchedule& s = opt.schedule;
  SampleOrder order(sample_count, opt.seed);
  if (!net.calibrated()) {
    // Frozen normalisation statistics come from the first batch when its
    // images share a size, otherwise from its first image.
    std::vector<Tensor> inputs;
    for (int b = 0; b < s.batch_size; ++b) {
      inputs.push_back(calibration_input(order.at(static_cast<std::uint64_t>(opt.start_iteration) * s.batch_size + b)));
    }
    Tensor batch = inputs.front();
    const bool same = std::all_of(inputs.begin(), inputs.end(), [&](const Tensor& t) {
      return t.c() == batch.c() && t.h() == batch.h() && t.w() == batch.w();
    });
    if (same && inputs.size() > 1) {
      batch = Tensor(static_cast<int>(inputs.size()), batch.c(), batch.h(), batch.w());
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        std::copy(inputs[i].values.begin(), inputs[i].values.end(), batch.item(static_cast<int>(i)).begin());
      }
    }
    net.calibrate(batch);
  }

  std::vector<LogEntry> log;
  for (int it = opt.start_iteration; it < s.iterations; ++it) {
    const double lr = s.lr_at(it);
    net.zero_grad();
    double loss_sum = 0.0;
    int contributing = 0;
    for (int b = 0; b < s.batch_size; ++b) {
      const std::uint64_t visit_index = static_cast<std::uint64_t>(it) * s.batch_size + b;
      auto rng = visit_rng(opt.seed, visit_index, 0xa09);
      const std::optional<double> loss = visit(net, order.at(visit_index), rng, 1.0 / s.batch_size);
      if (!loss) continue;
      if (!std::isfinite(*loss)) {
        throw std::runtime_error("training diverged at iteration " + std::to_string(it) + " (non-finite loss)");
      }
      loss_sum += *loss;
      ++contributing;
    }
    sgd_step(net, s, lr);
    const LogEntry entry{it, contributing > 0 ? loss_sum / contributing : 0.0, lr};
    log.push_back(entry);
    if (opt.on_iteration) opt.on_iteration(entry);
  }
  return log;
}

void scale_gradient(std::vector<double>& grad, double scale) {
  for (double& g : grad) g *= scale;
}

}  // namespace

std::vector<LogEntry> pretrain_ranking(Network& net, std::span<const RankingSample> data,
                                       const PairSampleConfig& pair_cfg, const TrainOptions& opt,
                                       PairReduction reduction) {
  validate(pair_cfg);
  if (net.config().head != HeadMode::kRanking) net.replace_head(HeadMode::kRanking, 1, opt.seed ^ 0x4ead);
  const int stride = net.config().total_stride();

  auto calibration = [&](std::size_t i) {
    Image img = data[i].image;
    DepthMap dm = data[i].disparity;
    crop_to_stride(img, dm, stride);
    return image_to_tensor(img);
  };

  auto visit = [&](Network& n, std::size_t i, std::mt19937_64& rng, double grad_scale) -> std::optional<double> {
    const RankingSample& sample = data[i];
    const AugmentDraw d = draw_augment(opt.augment, rng);
    auto [img, disp] = apply_augment(sample.image, sample.disparity, d);
    const int full_w = img.width(), full_h = img.height();
    crop_to_stride(img, disp, stride);

    std::vector<OrdinalPair> pairs;
    if (!sample.pairs.empty()) {
      for (const OrdinalPair& p : sample.pairs) {
        const PixelCoord a = transform(p.i, sample.image.width(), sample.image.height(), full_w, full_h, d.flip);
        const PixelCoord b = transform(p.j, sample.image.width(), sample.image.height(), full_w, full_h, d.flip);
        if (a.row >= img.height() || a.col >= img.width() || b.row >= img.height() || b.col >= img.width()) continue;
        pairs.push_back({a, b, p.r});
      }
    } else {
      PairSampleConfig cfg = pair_cfg;
      cfg.seed = rng();
      if (disp.valid_count() >= 2) pairs = sample_pairs(disp, cfg);
    }
    if (pairs.empty()) return std::nullopt;
    for (OrdinalPair& p : pairs) {
      p.i = {p.i.row / stride, p.i.col / stride};
      p.j = {p.j.row / stride, p.j.col / stride};
    }

    const Tensor out = n.forward(image_to_tensor(img));
    LossResult loss = ranking_loss(to_score_map(out), pairs, reduction);
    scale_gradient(loss.gradient, grad_scale);
    n.backward(from_score_gradient(loss.gradient, out.c(), out.h(), out.w()));
    return loss.value;
  };
  return train_loop(net, data.size(), opt, calibration, visit);
}

LabelMap downsample_labels(const DepthMap& depth, const BinningScheme& scheme, int stride) {
  LabelMap out;
  out.height = depth.height() / stride;
  out.width = depth.width() / stride;
  out.labels.assign(static_cast<std::size_t>(out.height) * out.width, 1);
  out.mask.assign(out.labels.size(), 0);
  std::map<int, int> counts;
  for (int cy = 0; cy < out.height; ++cy) {
    for (int cx = 0; cx < out.width; ++cx) {
      counts.clear();
      int valid = 0;
      for (int y = cy * stride; y < (cy + 1) * stride; ++y) {
        for (int x = cx * stride; x < (cx + 1) * stride; ++x) {
          if (!depth.valid(x, y) || !(depth.at(x, y) > 0.0)) continue;
          ++counts[scheme.depth_to_bin(depth.at(x, y))];
          ++valid;
        }
      }
      if (2 * valid < stride * stride) continue;
      int best = 0, best_count = -1;
      for (const auto& [label, count] : counts) {
        if (count > best_count) {
          best = label;
          best_count = count;
        }
      }
      const std::size_t idx = static_cast<std::size_t>(cy) * out.width + cx;
      out.labels[idx] = best;
      out.mask[idx] = 1;
    }
  }
  return out;
}

DepthMap downsample_log_depth(const DepthMap& depth, int stride) {
  DepthMap out(depth.width() / stride, depth.height() / stride, DepthRole::kDepth);
  for (int cy = 0; cy < out.height(); ++cy) {
    for (int cx = 0; cx < out.width(); ++cx) {
      double sum = 0.0;
      int valid = 0;
      for (int y = cy * stride; y < (cy + 1) * stride; ++y) {
        for (int x = cx * stride; x < (cx + 1) * stride; ++x) {
          if (!depth.valid(x, y) || !(depth.at(x, y) > 0.0)) continue;
          sum += std::log(depth.at(x, y));
          ++valid;
        }
      }
      if (2 * valid < stride * stride) {
        out.at(cx, cy) = 0.0;
        out.invalidate(cx, cy);
      } else {
        out.set(cx, cy, sum / valid);
      }
    }
  }
  return out;
}

std::vector<LogEntry> finetune_classification(Network& net, std::span<const DepthSample> data,
                                              const BinningScheme& scheme, const InfoGainMatrix& h,
                                              const TrainOptions& opt) {
  if (h.bins() != scheme.bins()) throw InvalidArgument("finetune: info-gain matrix and binning disagree on B");
  if (net.config().head != HeadMode::kClassification || net.config().bins != scheme.bins()) {
    net.replace_head(HeadMode::kClassification, scheme.bins(), opt.seed ^ 0xc1a55);
  }
  const int stride = net.config().total_stride();

  auto calibration = [&](std::size_t i) {
    Image img = data[i].image;
    DepthMap dm = data[i].depth;
    crop_to_stride(img, dm, stride);
    return image_to_tensor(img);
  };

  auto visit = [&](Network& n, std::size_t i, std::mt19937_64& rng, double grad_scale) -> std::optional<double> {
    auto [img, depth] = apply_augment(data[i].image, data[i].depth, draw_augment(opt.augment, rng));
    crop_to_stride(img, depth, stride);
    const LabelMap labels = downsample_labels(depth, scheme, stride);
    if (std::none_of(labels.mask.begin(), labels.mask.end(), [](std::uint8_t m) { return m != 0; })) return std::nullopt;

    const Tensor out = n.forward(image_to_tensor(img));
    LossResult loss = infogain_loss(to_score_map(out), labels, h);
    scale_gradient(loss.gradient, grad_scale);
    n.backward(from_score_gradient(loss.gradient, out.c(), out.h(), out.w()));
    return loss.value;
  };
  return train_loop(net, data.size(), opt, calibration, visit);
}

std::vector<LogEntry> train_regression(Network& net, std::span<const DepthSample> data, const TrainOptions& opt) {
  if (net.config().head != HeadMode::kRegression) net.replace_head(HeadMode::kRegression, 1, opt.seed ^ 0x2e9);
  const int stride = net.config().total_stride();

  auto calibration = [&](std::size_t i) {
    Image img = data[i].image;
    DepthMap dm = data[i].depth;
    crop_to_stride(img, dm, stride);
    return image_to_tensor(img);
  };

  auto visit = [&](Network& n, std::size_t i, std::mt19937_64& rng, double grad_scale) -> std::optional<double> {
    auto [img, depth] = apply_augment(data[i].image, data[i].depth, draw_augment(opt.augment, rng));
    crop_to_stride(img, depth, stride);
    const DepthMap target = downsample_log_depth(depth, stride);
    if (target.valid_count() == 0) return std::nullopt;

    const Tensor out = n.forward(image_to_tensor(img));
    LossResult loss = l2_regression_loss(to_score_map(out), target);
    scale_gradient(loss.gradient, grad_scale);
    n.backward(from_score_gradient(loss.gradient, out.c(), out.h(), out.w()));
    return loss.value;
  };
  return train_loop(net, data.size(), opt, calibration, visit);
}

MetricsReport evaluate_network(Network& net, std::span<const DepthSample> data, const BinningScheme* scheme) {
  std::vector<MetricsReport> reports;
  for (const DepthSample& sample : data) {
    if (sample.depth.valid_count() == 0) continue;
    reports.push_back(evaluate(predict_depth(net, sample.image, scheme), sample.depth));
  }
  return aggregate(reports);
}

}  // namespace odepth
