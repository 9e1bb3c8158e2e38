#include "odepth/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace odepth {

const char* to_string(HeadMode mode) {
  switch (mode) {
    case HeadMode::kRanking: return "ranking";
    case HeadMode::kClassification: return "classification";
    case HeadMode::kRegression: return "regression";
  }
  return "unknown";
}

HeadMode head_mode_from_string(const std::string& s) {
  if (s == "ranking") return HeadMode::kRanking;
  if (s == "classification") return HeadMode::kClassification;
  if (s == "regression") return HeadMode::kRegression;
  throw InvalidArgument("unknown head mode '" + s + "'");
}

int NetConfig::total_stride() const {
  int stride = stem_pool ? 2 : 1;
  for (int s : stage_strides) stride *= s;
  return stride;
}

void validate(const NetConfig& cfg) {
  if (cfg.in_channels != 1 && cfg.in_channels != 3) throw InvalidArgument("net: in_channels must be 1 or 3");
  if (cfg.widths.empty()) throw InvalidArgument("net: at least one stage is required");
  if (cfg.stage_strides.size() != cfg.widths.size()) throw InvalidArgument("net: one stride per stage is required");
  if (cfg.blocks_per_stage < 1) throw InvalidArgument("net: blocks_per_stage must be >= 1");
  for (int w : cfg.widths) {
    if (w < 1) throw InvalidArgument("net: widths must be >= 1");
  }
  for (int s : cfg.stage_strides) {
    if (s != 1 && s != 2) throw InvalidArgument("net: stage strides must be 1 or 2");
  }
  if (cfg.fc_widths.size() != 2 || cfg.fc_widths[0] < 1 || cfg.fc_widths[1] < 1) {
    throw InvalidArgument("net: fc_widths must hold two positive widths");
  }
  if (cfg.head == HeadMode::kClassification && cfg.bins < 2) {
    throw InvalidArgument("net: classification head needs bins >= 2");
  }
}

struct Network::Layers {
  Conv2d stem;
  std::unique_ptr<MaxPool2> pool;
  std::vector<ResidualBlock> blocks;
  ChannelNorm post_norm;
  ReLU post_relu;
  Conv2d fc1;
  ReLU fc1_relu;
  Conv2d fc2;
  ReLU fc2_relu;
  Conv2d head;

  explicit Layers(const NetConfig& cfg)
      : stem("stem", cfg.in_channels, cfg.widths.front(), 3, 1),
        post_norm("post.norm", cfg.widths.back()),
        fc1("fc1", cfg.widths.back(), cfg.fc_widths[0], 1, 1),
        fc2("fc2", cfg.fc_widths[0], cfg.fc_widths[1], 1, 1),
        head("head", cfg.fc_widths[1], cfg.head_channels(), 1, 1) {
    if (cfg.stem_pool) pool = std::make_unique<MaxPool2>();
    int in = cfg.widths.front();
    for (std::size_t s = 0; s < cfg.widths.size(); ++s) {
      for (int b = 0; b < cfg.blocks_per_stage; ++b) {
        const int stride = b == 0 ? cfg.stage_strides[s] : 1;
        blocks.emplace_back("stage" + std::to_string(s) + ".block" + std::to_string(b), in, cfg.widths[s], stride);
        in = cfg.widths[s];
      }
    }
  }
};

Network::Network(const NetConfig& cfg) : config_(cfg) {
  validate(cfg);
  layers_ = std::make_unique<Layers>(cfg);
  std::mt19937_64 rng(cfg.seed);
  layers_->stem.init(rng);
  for (ResidualBlock& block : layers_->blocks) block.init(rng);
  layers_->fc1.init(rng);
  layers_->fc2.init(rng);
  layers_->head.init(rng);
}

Network::Network(Network&&) noexcept = default;
Network& Network::operator=(Network&&) noexcept = default;
Network::~Network() = default;

Tensor Network::forward(const Tensor& x) {
  Layers& l = *layers_;
  Tensor t = l.stem.forward(x);
  if (l.pool) t = l.pool->forward(t);
  for (ResidualBlock& block : l.blocks) t = block.forward(t);
  t = l.post_relu.forward(l.post_norm.forward(t));
  t = l.fc1_relu.forward(l.fc1.forward(t));
  t = l.fc2_relu.forward(l.fc2.forward(t));
  return l.head.forward(t);
}

void Network::backward(const Tensor& grad_out) {
  Layers& l = *layers_;
  Tensor g = l.head.backward(grad_out);
  g = l.fc2.backward(l.fc2_relu.backward(g));
  g = l.fc1.backward(l.fc1_relu.backward(g));
  g = l.post_norm.backward(l.post_relu.backward(g));
  for (auto it = l.blocks.rbegin(); it != l.blocks.rend(); ++it) g = it->backward(g);
  if (l.pool) g = l.pool->backward(g);
  l.stem.backward(g);
}

void Network::replace_head(HeadMode mode, int bins, std::uint64_t seed) {
  NetConfig next = config_;
  next.head = mode;
  next.bins = mode == HeadMode::kClassification ? bins : 1;
  validate(next);
  config_ = next;
  layers_->head = Conv2d("head", config_.fc_widths[1], config_.head_channels(), 1, 1);
  std::mt19937_64 rng(seed);
  layers_->head.init(rng);
}

void Network::calibrate(const Tensor& x) {
  layers_->post_norm.reset_calibration();
  for (ResidualBlock& block : layers_->blocks) block.reset_calibration();
  forward(x);
}

bool Network::calibrated() const {
  if (!layers_->post_norm.calibrated()) return false;
  return std::all_of(layers_->blocks.begin(), layers_->blocks.end(),
                     [](ResidualBlock& b) { return b.norm1().calibrated() && b.norm2().calibrated(); });
}

std::vector<Parameter*> Network::parameters() {
  std::vector<Parameter*> params;
  Layers& l = *layers_;
  l.stem.collect(params);
  for (ResidualBlock& block : l.blocks) block.collect(params);
  l.post_norm.collect(params);
  l.fc1.collect(params);
  l.fc2.collect(params);
  l.head.collect(params);
  return params;
}

std::vector<Buffer> Network::buffers() {
  std::vector<Buffer> out;
  for (ResidualBlock& block : layers_->blocks) block.collect_buffers(out);
  layers_->post_norm.collect_buffers(out);
  return out;
}

void Network::zero_grad() {
  for (Parameter* p : parameters()) p->grad.zero();
}

std::vector<ResidualBlock*> Network::blocks() {
  std::vector<ResidualBlock*> out;
  for (ResidualBlock& b : layers_->blocks) out.push_back(&b);
  return out;
}

std::uint64_t Network::config_hash() const {
  std::ostringstream s;
  s << config_.in_channels << '|';
  for (int w : config_.widths) s << w << ',';
  s << '|' << config_.blocks_per_stage << '|';
  for (int st : config_.stage_strides) s << st << ',';
  s << '|' << config_.stem_pool << '|' << config_.fc_widths[0] << ',' << config_.fc_widths[1] << '|'
    << to_string(config_.head) << '|' << config_.head_channels();
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s.str()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------

Tensor image_to_tensor(const Image& image) {
  Tensor t(1, image.channels(), image.height(), image.width());
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < image.height(); ++y) {
      for (int x = 0; x < image.width(); ++x) t.at(0, c, y, x) = image.at(x, y, c);
    }
  }
  return t;
}

ScoreMap to_score_map(const Tensor& t, int n) {
  ScoreMap s(t.c(), t.h(), t.w());
  const auto item = t.item(n);
  std::copy(item.begin(), item.end(), s.values.begin());
  return s;
}

Tensor from_score_gradient(const std::vector<double>& grad, int channels, int height, int width) {
  Tensor t(1, channels, height, width);
  if (grad.size() != t.size()) throw InvalidArgument("from_score_gradient: size mismatch");
  std::copy(grad.begin(), grad.end(), t.values.begin());
  return t;
}

DepthMap upsample_bilinear(const DepthMap& map, int width, int height) {
  Image as_image(map.width(), map.height(), 1);
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) as_image.at(x, y) = map.at(x, y);
  }
  const Image resized = resize_bilinear(as_image, width, height);
  DepthMap out(width, height, map.role());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out.at(x, y) = resized.at(x, y);
  }
  return out;
}

namespace {

Image pad_to_multiple(const Image& image, int stride) {
  const int w = (image.width() + stride - 1) / stride * stride;
  const int h = (image.height() + stride - 1) / stride * stride;
  if (w == image.width() && h == image.height()) return image;
  Image out(w, h, image.channels());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < image.channels(); ++c) {
        out.at(x, y, c) = image.at(std::min(x, image.width() - 1), std::min(y, image.height() - 1), c);
      }
    }
  }
  return out;
}

DepthMap crop(const DepthMap& map, int width, int height) {
  if (map.width() == width && map.height() == height) return map;
  DepthMap out(width, height, map.role());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      out.at(x, y) = map.at(x, y);
      out.set_valid(x, y, map.valid(x, y));
    }
  }
  return out;
}

}  // namespace

ScoreMap run_network(Network& net, const Image& image) {
  if (image.channels() != net.config().in_channels) {
    throw InvalidArgument("network expects " + std::to_string(net.config().in_channels) + "-channel images");
  }
  const Image padded = pad_to_multiple(image, net.config().total_stride());
  return to_score_map(net.forward(image_to_tensor(padded)));
}

DepthMap decode_classification(const ScoreMap& logits, const BinningScheme& scheme) {
  if (logits.channels != scheme.bins()) throw InvalidArgument("decode_classification: channel/bin mismatch");
  DepthMap out(logits.width, logits.height, DepthRole::kDepth);
  for (int y = 0; y < logits.height; ++y) {
    for (int x = 0; x < logits.width; ++x) {
      int best = 0;
      for (int c = 1; c < logits.channels; ++c) {
        if (logits.at(c, y, x) > logits.at(best, y, x)) best = c;
      }
      out.at(x, y) = scheme.bin_to_depth(best + 1);
    }
  }
  return out;
}

DepthMap predict_depth(Network& net, const Image& image, const BinningScheme* scheme) {
  const ScoreMap scores = run_network(net, image);
  const int stride = net.config().total_stride();
  DepthMap coarse;
  switch (net.config().head) {
    case HeadMode::kClassification:
      if (scheme == nullptr) throw InvalidArgument("predict_depth: classification needs a binning scheme");
      coarse = decode_classification(scores, *scheme);
      break;
    case HeadMode::kRegression:
      coarse = DepthMap(scores.width, scores.height, DepthRole::kDepth);
      for (int y = 0; y < scores.height; ++y) {
        for (int x = 0; x < scores.width; ++x) coarse.at(x, y) = std::exp(std::clamp(scores.at(0, y, x), -50.0, 50.0));
      }
      break;
    case HeadMode::kRanking:
      throw InvalidArgument("predict_depth: ranking head has no metric decoding; use predict_relative");
  }
  return crop(upsample_bilinear(coarse, scores.width * stride, scores.height * stride), image.width(), image.height());
}

DepthMap predict_relative(Network& net, const Image& image) {
  if (net.config().head != HeadMode::kRanking) throw InvalidArgument("predict_relative: network has no ranking head");
  const ScoreMap scores = run_network(net, image);
  const int stride = net.config().total_stride();
  DepthMap coarse(scores.width, scores.height, DepthRole::kDepth);
  for (int y = 0; y < scores.height; ++y) {
    for (int x = 0; x < scores.width; ++x) coarse.at(x, y) = std::exp(-std::clamp(scores.at(0, y, x), -300.0, 300.0));
  }
  return crop(upsample_bilinear(coarse, scores.width * stride, scores.height * stride), image.width(), image.height());
}

}  // namespace odepth
